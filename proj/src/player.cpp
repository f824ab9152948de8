#include "advgame/player.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

using nlohmann::json;

void ProgramLookup::add(std::span<const std::string> question, FunctionalProgram program) {
  table_.insert_or_assign(join_question(question), std::move(program));
}

const FunctionalProgram* ProgramLookup::find(std::span<const std::string> question) const {
  auto it = table_.find(join_question(question));
  return it == table_.end() ? nullptr : &it->second;
}

namespace {

const FunctionalProgram& require_program(const ProgramLookup& lookup, std::span<const std::string> q) {
  const auto* p = lookup.find(q);
  if (!p) throw Error(ErrorClass::kNotFound, "unknown question: " + join_question(q));
  return *p;
}

Answer fallback_answer(const FunctionalProgram& program, const AttributeVocab& vocab) {
  auto t = output_type(program);
  if (!t) return Answer::boolean(false);
  switch (*t) {
    case ValueType::kInteger: return Answer::integer(0);
    case ValueType::kShape: return Answer::attribute(vocab.shapes.front());
    case ValueType::kColor: return Answer::attribute(vocab.colors.front());
    case ValueType::kSize: return Answer::attribute(vocab.sizes.front());
    case ValueType::kMaterial: return Answer::attribute(vocab.materials.front());
    default: return Answer::boolean(false);
  }
}

}  // namespace

Answer OraclePlayer::answer(const SceneGraph& scene, std::span<const std::string> question) const {
  return execute(require_program(*lookup_, question), scene);
}

const char* flaw_kind_name(FlawSpec::Kind kind) {
  switch (kind) {
    case FlawSpec::Kind::kNone: return "none";
    case FlawSpec::Kind::kRelationMargin: return "relation-margin";
    case FlawSpec::Kind::kNearestK: return "nearest-k";
    case FlawSpec::Kind::kQuantizedPerception: return "quantized-perception";
  }
  return "none";
}

std::optional<FlawSpec::Kind> parse_flaw_kind(std::string_view name) {
  for (auto k : {FlawSpec::Kind::kNone, FlawSpec::Kind::kRelationMargin, FlawSpec::Kind::kNearestK,
                 FlawSpec::Kind::kQuantizedPerception}) {
    if (name == flaw_kind_name(k)) return k;
  }
  return std::nullopt;
}

Perception flawed_perception(const SceneGraph& scene, const FlawSpec& flaw) {
  Perception p = Perception::truth(scene);
  switch (flaw.kind) {
    case FlawSpec::Kind::kNone: break;
    case FlawSpec::Kind::kRelationMargin: {
      const double tau = flaw.tau;
      p.judge = [tau](double proj) { return std::abs(proj) < tau ? proj < 0.0 : proj > 0.0; };
      break;
    }
    case FlawSpec::Kind::kNearestK: {
      const int n = scene.size();
      if (flaw.k >= n) break;
      Vec2 centroid;
      for (const auto& o : scene.objects) centroid = centroid + o.position();
      centroid = (1.0 / n) * centroid;
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return norm(scene.objects[a].position() - centroid) < norm(scene.objects[b].position() - centroid);
      });
      p.visible.assign(n, false);
      for (int i = 0; i < std::max(flaw.k, 0); ++i) p.visible[order[i]] = true;
      break;
    }
    case FlawSpec::Kind::kQuantizedPerception: {
      const double c = flaw.cell_size;
      if (!(c > 0.0)) break;
      for (auto& pos : p.positions) {
        pos.x = -3.0 + (std::floor((pos.x + 3.0) / c) + 0.5) * c;
        pos.y = -3.0 + (std::floor((pos.y + 3.0) / c) + 0.5) * c;
      }
      break;
    }
  }
  return p;
}

Answer FlawedPlayer::answer(const SceneGraph& scene, std::span<const std::string> question) const {
  const auto& program = require_program(*lookup_, question);
  Answer a = execute(program, scene, flawed_perception(scene, flaw_));
  return a.determined() ? a : fallback_answer(program, *scene.vocab);
}

std::string encode_request(std::uint64_t round_id, const SceneGraph& scene,
                           std::span<const std::string> question,
                           const std::optional<std::string>& image_path) {
  json j = {
      {"round_id", round_id},
      {"question", std::vector<std::string>(question.begin(), question.end())},
      {"scene", scene_to_json(scene)},
  };
  if (image_path) j["image_path"] = *image_path;
  return j.dump();
}

PlayerRequest decode_request(const std::string& line, std::shared_ptr<const AttributeVocab> vocab) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("request is not JSON: ") + e.what(), line);
  }
  try {
    PlayerRequest r;
    r.round_id = j.at("round_id").get<std::uint64_t>();
    r.question = j.at("question").get<std::vector<std::string>>();
    r.scene = scene_from_json(j.at("scene"), std::move(vocab));
    if (j.contains("image_path")) r.image_path = j.at("image_path").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what(), line);
  } catch (const Error& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what(), line);
  }
}

std::string encode_response(std::uint64_t round_id, const Answer& answer) {
  return json{{"round_id", round_id}, {"answer", answer.to_string()}}.dump();
}

std::string encode_error_response(std::optional<std::uint64_t> round_id, const std::string& message) {
  json j = {{"error", message}};
  j["round_id"] = round_id ? json(*round_id) : json(nullptr);
  return j.dump();
}

const std::vector<std::string>& redacted_fields() {
  static const std::vector<std::string> fields = {
      "program", "function", "value_inputs", "side_inputs", "gt", "gt_answer",
      "answer", "old_answer", "new_answer", "reward",
  };
  return fields;
}

namespace {

void collect_keys(const json& j, std::vector<std::string>& keys) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      keys.push_back(it.key());
      collect_keys(it.value(), keys);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, keys);
  }
}

}  // namespace

std::vector<std::string> redaction_findings(const std::string& message) {
  std::vector<std::string> found;
  for (const auto& f : redacted_fields()) {
    if (message.find("\"" + f + "\"") != std::string::npos) found.push_back(f);
  }
  // Also walk the keys in case a field is spelled with escapes.
  auto parsed = json::parse(message, nullptr, false);
  if (!parsed.is_discarded()) {
    std::vector<std::string> keys;
    collect_keys(parsed, keys);
    for (const auto& k : keys) {
      const auto& fields = redacted_fields();
      if (std::find(fields.begin(), fields.end(), k) != fields.end() &&
          std::find(found.begin(), found.end(), k) == found.end()) {
        found.push_back(k);
      }
    }
  }
  return found;
}

void RedactionAuditor::on_request(const std::string& bytes) {
  ++messages_;
  bytes_ += bytes.size();
  findings_ += redaction_findings(bytes).size();
}

struct FileTranscriptSink::Impl {
  std::ofstream out;
};

FileTranscriptSink::FileTranscriptSink(const std::string& path) : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::app);
  if (!impl_->out) throw Error(ErrorClass::kNotFound, "cannot open transcript " + path);
}

FileTranscriptSink::~FileTranscriptSink() = default;

void FileTranscriptSink::on_request(const std::string& bytes) { impl_->out << "> " << bytes << '\n'; }
void FileTranscriptSink::on_response(const std::string& bytes) { impl_->out << "< " << bytes << '\n'; }

void TeeSink::on_request(const std::string& bytes) {
  for (auto* s : sinks_) s->on_request(bytes);
}
void TeeSink::on_response(const std::string& bytes) {
  for (auto* s : sinks_) s->on_response(bytes);
}

InProcessTransport::InProcessTransport(std::shared_ptr<const Player> player,
                                       std::shared_ptr<const AttributeVocab> vocab)
    : player_(std::move(player)), vocab_(std::move(vocab)) {}

std::string InProcessTransport::exchange(const std::string& request_line) {
  PlayerRequest req = decode_request(request_line, vocab_);
  return encode_response(req.round_id, player_->answer(req.scene, req.question));
}

void write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write to player failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_line(int fd, std::string& buffer, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("player timed out");
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw TransportError("player timed out");
    char chunk[4096];
    ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("read from player failed: ") + std::strerror(errno));
    }
    if (n == 0) throw TransportError("player closed the stream");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

ChildProcessTransport::ChildProcessTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (argv.empty()) throw Error(ErrorClass::kInvalidArgument, "empty player command");
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
    throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
  }
  ::signal(SIGPIPE, SIG_IGN);
  pid_ = ::fork();
  if (pid_ < 0) throw TransportError(std::string("fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ChildProcessTransport::~ChildProcessTransport() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

std::string ChildProcessTransport::exchange(const std::string& request_line) {
  write_all(to_child_, request_line + "\n");
  return read_line(from_child_, buffer_, timeout_);
}

TcpTransport::TcpTransport(const std::string& host, int port, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::string TcpTransport::exchange(const std::string& request_line) {
  write_all(fd_, request_line + "\n");
  return read_line(fd_, buffer_, timeout_);
}

PlayerHandle::PlayerHandle(std::unique_ptr<Transport> transport, std::shared_ptr<const AttributeVocab> vocab)
    : transport_(std::move(transport)), vocab_(std::move(vocab)) {}

PlayerHandle PlayerHandle::in_process(std::shared_ptr<const Player> player, bool serialize,
                                      std::shared_ptr<const AttributeVocab> vocab) {
  if (serialize) return PlayerHandle(std::make_unique<InProcessTransport>(std::move(player), vocab), vocab);
  PlayerHandle h(nullptr, std::move(vocab));
  h.direct_ = std::move(player);
  return h;
}

Answer PlayerHandle::answer(const SceneGraph& scene, std::span<const std::string> question,
                            const std::optional<std::string>& image_path) {
  const std::uint64_t id = next_round_id_++;
  if (direct_) return direct_->answer(scene, question);

  const std::string request = encode_request(id, scene, question, image_path);
  if (sink_) sink_->on_request(request);
  std::string response = transport_->exchange(request);
  if (sink_) sink_->on_response(response);

  json j;
  try {
    j = json::parse(response);
  } catch (const json::exception&) {
    throw ProtocolError("player response is not JSON", response);
  }
  if (!j.is_object() || !j.contains("round_id") || !j["round_id"].is_number_unsigned() ||
      j["round_id"].get<std::uint64_t>() != id) {
    throw ProtocolError("player response has a missing or mismatched round_id", response);
  }
  if (j.contains("error")) {
    throw ProtocolError("player reported an error", response);
  }
  if (!j.contains("answer") || !j["answer"].is_string()) {
    throw ProtocolError("player response has no answer string", response);
  }
  auto parsed = Answer::parse(j["answer"].get<std::string>(), *vocab_);
  if (!parsed) throw ProtocolError("answer outside the protocol grammar", response);
  return *parsed;
}

}  // namespace advgame
