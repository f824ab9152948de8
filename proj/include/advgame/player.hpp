#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advgame/program.hpp"
#include "advgame/scene.hpp"

namespace advgame {

// A Visual-QA player as seen by the harness: scene and question in, answer out.
class Player {
 public:
  virtual ~Player() = default;
  virtual Answer answer(const SceneGraph& scene, std::span<const std::string> question) const = 0;
};

// Private question-text -> program table used by the built-in players.
class ProgramLookup {
 public:
  void add(std::span<const std::string> question, FunctionalProgram program);
  const FunctionalProgram* find(std::span<const std::string> question) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, FunctionalProgram> table_;
};

// Answers with the ground-truth executor.
class OraclePlayer : public Player {
 public:
  explicit OraclePlayer(std::shared_ptr<const ProgramLookup> lookup) : lookup_(std::move(lookup)) {}
  Answer answer(const SceneGraph& scene, std::span<const std::string> question) const override;

 private:
  std::shared_ptr<const ProgramLookup> lookup_;
};

struct FlawSpec {
  enum class Kind { kNone, kRelationMargin, kNearestK, kQuantizedPerception };
  Kind kind = Kind::kNone;
  // Relation judgements with |projection| below tau are inverted.
  double tau = 0.6;
  // Only the k objects nearest the centroid are perceived.
  int k = kMaxObjects;
  // Positions snap to the centers of square cells of this size; 0 disables.
  double cell_size = 2.0;

  static FlawSpec relation_margin(double tau = 0.6) { return {Kind::kRelationMargin, tau, kMaxObjects, 2.0}; }
  static FlawSpec nearest_k(int k) { return {Kind::kNearestK, 0.6, k, 2.0}; }
  static FlawSpec quantized(double cell) { return {Kind::kQuantizedPerception, 0.6, kMaxObjects, cell}; }
};

const char* flaw_kind_name(FlawSpec::Kind kind);
std::optional<FlawSpec::Kind> parse_flaw_kind(std::string_view name);

// Perception of a flawed player for one scene.
Perception flawed_perception(const SceneGraph& scene, const FlawSpec& flaw);

// Executes through a flawed perception. When its own `unique` fails the
// player still answers: "no", 0, or the first vocabulary name of the queried kind.
class FlawedPlayer : public Player {
 public:
  FlawedPlayer(std::shared_ptr<const ProgramLookup> lookup, FlawSpec flaw)
      : lookup_(std::move(lookup)), flaw_(flaw) {}
  Answer answer(const SceneGraph& scene, std::span<const std::string> question) const override;
  const FlawSpec& flaw() const { return flaw_; }

 private:
  std::shared_ptr<const ProgramLookup> lookup_;
  FlawSpec flaw_;
};

// Wire records. One JSON object per line, keys in lexicographic order.
struct PlayerRequest {
  std::uint64_t round_id = 0;
  std::vector<std::string> question;
  SceneGraph scene;
  std::optional<std::string> image_path;
};

std::string encode_request(std::uint64_t round_id, const SceneGraph& scene,
                           std::span<const std::string> question,
                           const std::optional<std::string>& image_path = std::nullopt);
PlayerRequest decode_request(const std::string& line,
                             std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());
std::string encode_response(std::uint64_t round_id, const Answer& answer);
std::string encode_error_response(std::optional<std::uint64_t> round_id, const std::string& message);

// Field names that must never appear in a player-bound message.
const std::vector<std::string>& redacted_fields();
// Forbidden field names found in one message (as JSON keys or quoted strings).
std::vector<std::string> redaction_findings(const std::string& message);

class TranscriptSink {
 public:
  virtual ~TranscriptSink() = default;
  virtual void on_request(const std::string& bytes) = 0;
  virtual void on_response(const std::string& bytes) = 0;
};

// Streams every message through redaction_findings and keeps counts.
class RedactionAuditor : public TranscriptSink {
 public:
  void on_request(const std::string& bytes) override;
  void on_response(const std::string&) override {}
  std::uint64_t messages() const { return messages_; }
  std::uint64_t bytes() const { return bytes_; }
  std::uint64_t findings() const { return findings_; }

 private:
  std::uint64_t messages_ = 0;
  std::uint64_t bytes_ = 0;
  std::uint64_t findings_ = 0;
};

// Appends "> request" / "< response" lines to a file.
class FileTranscriptSink : public TranscriptSink {
 public:
  explicit FileTranscriptSink(const std::string& path);
  ~FileTranscriptSink() override;
  void on_request(const std::string& bytes) override;
  void on_response(const std::string& bytes) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Fans out to several sinks.
class TeeSink : public TranscriptSink {
 public:
  explicit TeeSink(std::vector<TranscriptSink*> sinks) : sinks_(std::move(sinks)) {}
  void on_request(const std::string& bytes) override;
  void on_response(const std::string& bytes) override;

 private:
  std::vector<TranscriptSink*> sinks_;
};

// Moves one request line to a player and returns its response line.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string& request_line) = 0;
};

// Decodes the request bytes and hands them to a built-in player, so the
// player sees exactly what an external process would.
class InProcessTransport : public Transport {
 public:
  InProcessTransport(std::shared_ptr<const Player> player, std::shared_ptr<const AttributeVocab> vocab);
  std::string exchange(const std::string& request_line) override;

 private:
  std::shared_ptr<const Player> player_;
  std::shared_ptr<const AttributeVocab> vocab_;
};

// Newline-delimited records over a child's stdin/stdout.
class ChildProcessTransport : public Transport {
 public:
  ChildProcessTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  ~ChildProcessTransport() override;
  ChildProcessTransport(const ChildProcessTransport&) = delete;
  ChildProcessTransport& operator=(const ChildProcessTransport&) = delete;
  std::string exchange(const std::string& request_line) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
};

// Newline-delimited records over a TCP stream.
class TcpTransport : public Transport {
 public:
  TcpTransport(const std::string& host, int port, std::chrono::milliseconds timeout);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;
  std::string exchange(const std::string& request_line) override;

 private:
  int fd_ = -1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
};

// Reads one '\n'-terminated line from fd within the timeout.
std::string read_line(int fd, std::string& buffer, std::chrono::milliseconds timeout);
void write_all(int fd, const std::string& bytes);

// The harness's only view of a player: answer(scene, question). Not safe to
// share across threads mid-request; use one handle per worker.
class PlayerHandle {
 public:
  PlayerHandle(std::unique_ptr<Transport> transport, std::shared_ptr<const AttributeVocab> vocab);

  // serialize=false calls the player directly (no wire encoding, no transcript).
  static PlayerHandle in_process(std::shared_ptr<const Player> player, bool serialize = true,
                                 std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());

  Answer answer(const SceneGraph& scene, std::span<const std::string> question,
                const std::optional<std::string>& image_path = std::nullopt);

  void set_sink(TranscriptSink* sink) { sink_ = sink; }
  std::uint64_t queries() const { return next_round_id_ - 1; }

 private:
  std::unique_ptr<Transport> transport_;
  std::shared_ptr<const Player> direct_;
  std::shared_ptr<const AttributeVocab> vocab_;
  TranscriptSink* sink_ = nullptr;
  std::uint64_t next_round_id_ = 1;
};

}  // namespace advgame
