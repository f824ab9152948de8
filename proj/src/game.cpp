#include "advgame/game.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

using nlohmann::json;

void RewardConfig::validate() const {
  if (!(dr > cr && cr > 0.0 && 0.0 > fr && fr > isr)) {
    throw Error(ErrorClass::kInvalidConfig, "reward constants must satisfy dr > cr > 0 > fr > isr");
  }
}

double calc_reward(const std::optional<Answer>& new_answer, const Answer& old_answer, const Answer& gt,
                   const RewardConfig& cfg) {
  if (!new_answer) return cfg.isr;
  if (answer_equal(*new_answer, old_answer)) return cfg.fr;
  return answer_equal(old_answer, gt) ? cfg.dr : cfg.cr;
}

// ---------------------------------------------------------------------------
// Question records and items

json question_to_json(const QuestionRecord& q) {
  return json{{"question", join_question(q.question)},
              {"program", program_to_json(q.program)},
              {"answer", q.answer},
              {"image_index", q.image_index}};
}

QuestionRecord question_from_json(const json& j) {
  try {
    QuestionRecord q;
    const auto& text = j.at("question");
    q.question = text.is_array() ? text.get<std::vector<std::string>>() : split_question(text.get<std::string>());
    q.program = program_from_json(j.at("program"));
    q.answer = j.at("answer").is_string() ? j.at("answer").get<std::string>() : j.at("answer").dump();
    q.image_index = j.value("image_index", 0);
    return q;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad question record: ") + e.what());
  }
}

std::vector<QuestionRecord> load_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open questions file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
  const json& arr = j.is_object() ? j.at("questions") : j;
  std::vector<QuestionRecord> out;
  out.reserve(arr.size());
  for (const auto& q : arr) out.push_back(question_from_json(q));
  return out;
}

void save_questions(const std::string& path, std::span<const QuestionRecord> questions) {
  json arr = json::array();
  for (const auto& q : questions) arr.push_back(question_to_json(q));
  std::ofstream out(path);
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write " + path);
  out << json{{"info", {{"format", "clevr-questions"}, {"count", questions.size()}}}, {"questions", arr}}.dump(1)
      << '\n';
}

std::vector<Item> make_items(std::span<const SceneGraph> scenes, std::span<const QuestionRecord> questions,
                             std::size_t* rejected) {
  std::map<int, const SceneGraph*> by_index;
  for (const auto& s : scenes) by_index[s.image_index] = &s;
  std::vector<Item> items;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& q = questions[i];
    auto it = by_index.find(q.image_index);
    if (it == by_index.end()) {
      ++dropped;
      continue;
    }
    const SceneGraph& scene = *it->second;
    if (!validate(q.program, *scene.vocab).empty()) {
      ++dropped;
      continue;
    }
    Answer gt = execute(q.program, scene);
    auto stored = Answer::parse(q.answer, *scene.vocab);
    if (!gt.determined() || !stored || !answer_equal(*stored, gt)) {
      ++dropped;
      continue;
    }
    items.push_back(Item{scene, q.question, q.program, gt, static_cast<int>(i)});
  }
  if (rejected) *rejected = dropped;
  return items;
}

json item_to_json(const Item& item) {
  std::string text;
  for (const auto& t : item.question) text += (text.empty() ? "" : " ") + t;
  return json{{"scene", scene_to_json(item.scene)},
              {"question", text},
              {"program", program_to_json(item.program)},
              {"answer", item.gt.to_string()},
              {"pool_index", item.pool_index}};
}

Item item_from_json(const json& j, std::shared_ptr<const AttributeVocab> vocab) {
  try {
    Item item;
    item.scene = scene_from_json(j.at("scene"), vocab);
    item.question = split_question(j.at("question").get<std::string>());
    item.program = program_from_json(j.at("program"));
    item.pool_index = j.value("pool_index", -1);
    item.gt = execute(item.program, item.scene);
    auto stored = Answer::parse(j.at("answer").get<std::string>(), *vocab);
    if (!item.gt.determined() || !stored || !answer_equal(*stored, item.gt)) {
      throw Error(ErrorClass::kParse, "stored answer disagrees with the program");
    }
    return item;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("item: ") + e.what());
  }
}

void save_minigames(const std::string& path, std::span<const MiniGame> games) {
  json arr = json::array();
  for (const auto& g : games) {
    json items = json::array();
    for (const auto& it : g.items) items.push_back(item_to_json(it));
    arr.push_back({{"id", g.id}, {"seed", g.seed}, {"items", items}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write " + path);
  out << json{{"format", "advgame-minigames/1"}, {"minigames", arr}}.dump() << '\n';
}

std::vector<MiniGame> load_minigames(const std::string& path, std::shared_ptr<const AttributeVocab> vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open mini-game file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
  std::vector<MiniGame> out;
  try {
    for (const auto& g : j.at("minigames")) {
      MiniGame m;
      m.id = g.at("id").get<int>();
      m.seed = g.at("seed").get<std::uint64_t>();
      for (const auto& it : g.at("items")) m.items.push_back(item_from_json(it, vocab));
      out.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
  return out;
}

std::vector<MiniGame> build_minigames(std::span<const Item> pool, int size, int count, std::uint64_t seed,
                                      bool shuffle_heads) {
  if (size <= 0 || count <= 0) throw Error(ErrorClass::kInvalidArgument, "mini-game size and count must be positive");
  const auto needed = static_cast<std::size_t>(size) * static_cast<std::size_t>(count);
  if (needed > pool.size()) {
    throw Error(ErrorClass::kInvalidArgument, "pool has " + std::to_string(pool.size()) + " items, " +
                                                  std::to_string(needed) + " needed");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  std::vector<MiniGame> games;
  for (int g = 0; g < count; ++g) {
    MiniGame game;
    game.id = g;
    game.seed = derive_seed(seed, static_cast<std::uint64_t>(g));
    Rng head_rng(derive_seed(game.seed, 0x68656164));
    for (int k = 0; k < size; ++k) {
      Item item = pool[order[static_cast<std::size_t>(g) * size + k]];
      // Re-verify: the answer must still come out of the executor.
      if (!answer_equal(execute(item.program, item.scene), item.gt)) {
        throw Error(ErrorClass::kInternal, "item answer does not verify");
      }
      if (shuffle_heads) head_rng.shuffle(item.scene.objects.begin(), item.scene.objects.end());
      game.items.push_back(std::move(item));
    }
    games.push_back(std::move(game));
  }
  return games;
}

std::shared_ptr<ProgramLookup> lookup_for(std::span<const Item> items) {
  auto lookup = std::make_shared<ProgramLookup>();
  for (const auto& it : items) lookup->add(it.question, it.program);
  return lookup;
}

std::shared_ptr<ProgramLookup> lookup_for(std::span<const MiniGame> games) {
  auto lookup = std::make_shared<ProgramLookup>();
  for (const auto& g : games) {
    for (const auto& it : g.items) lookup->add(it.question, it.program);
  }
  return lookup;
}

// ---------------------------------------------------------------------------
// Rounds

const char* rejection_name(Rejection r) {
  switch (r) {
    case Rejection::kNone: return "none";
    case Rejection::kScene: return "scene";
    case Rejection::kRelevance: return "relevance";
  }
  return "none";
}

namespace {

std::optional<Rejection> parse_rejection(std::string_view s) {
  for (auto r : {Rejection::kNone, Rejection::kScene, Rejection::kRelevance}) {
    if (s == rejection_name(r)) return r;
  }
  return std::nullopt;
}

}  // namespace

json displacement_to_json(const Displacement& d) {
  json arr = json::array();
  for (const auto& m : d.moves) {
    if (m) {
      arr.push_back(json::array({m->dx, m->dy}));
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

Displacement displacement_from_json(const json& j) {
  Displacement d;
  if (!j.is_array() || j.size() != static_cast<std::size_t>(kMaxObjects)) {
    throw Error(ErrorClass::kParse, "displacement must have 10 entries");
  }
  for (int h = 0; h < kMaxObjects; ++h) {
    if (!j[h].is_null()) d.moves[h] = BinOffset{j[h].at(0).get<int>(), j[h].at(1).get<int>()};
  }
  return d;
}

namespace {

json answer_json(const Answer& a) { return a.determined() ? json(a.to_string()) : json(nullptr); }

Answer answer_from(const json& j, const AttributeVocab& vocab) {
  if (j.is_null()) return Answer::undetermined();
  auto a = Answer::parse(j.get<std::string>(), vocab);
  if (!a) throw Error(ErrorClass::kParse, "bad answer in transcript: " + j.dump());
  return *a;
}

std::string describe(const SceneCheck& check) {
  std::string s;
  for (const auto& v : check.violations) {
    if (!s.empty()) s += ",";
    s += violation_kind_name(v.kind);
  }
  return s;
}

}  // namespace

json round_to_json(const RoundRecord& r) {
  return json{{"minigame", r.minigame},
              {"episode", r.episode},
              {"item", r.item},
              {"gt", answer_json(r.gt)},
              {"old_answer", answer_json(r.old_answer)},
              {"new_answer", r.new_answer ? answer_json(*r.new_answer) : json(nullptr)},
              {"rejection", rejection_name(r.rejection)},
              {"rejection_detail", r.rejection_detail},
              {"reward", r.reward},
              {"log_prob", r.log_prob},
              {"state_value", r.state_value},
              {"displacement", displacement_to_json(r.displacement)}};
}

RoundRecord round_from_json(const json& j, const AttributeVocab& vocab) {
  try {
    RoundRecord r;
    r.minigame = j.at("minigame").get<int>();
    r.episode = j.at("episode").get<long long>();
    r.item = j.at("item").get<int>();
    r.gt = answer_from(j.at("gt"), vocab);
    r.old_answer = answer_from(j.at("old_answer"), vocab);
    auto rej = parse_rejection(j.at("rejection").get<std::string>());
    if (!rej) throw Error(ErrorClass::kParse, "bad rejection kind");
    r.rejection = *rej;
    r.rejection_detail = j.value("rejection_detail", "");
    if (r.rejection == Rejection::kNone) r.new_answer = answer_from(j.at("new_answer"), vocab);
    r.reward = j.at("reward").get<double>();
    r.log_prob = j.at("log_prob").get<double>();
    r.state_value = j.at("state_value").get<double>();
    r.displacement = displacement_from_json(j.at("displacement"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad round record: ") + e.what());
  }
}

RoundRecord resolve_round(const Item& item, const Answer& old_answer, const Displacement& d,
                          PlayerHandle& player, const GameConfig& cfg) {
  RoundRecord r;
  r.gt = item.gt;
  r.old_answer = old_answer;
  r.displacement = d;
  SceneGraph moved = apply_displacement(item.scene, d, cfg.grid);
  if (!scene_is_valid(moved, cfg.constraints)) {
    r.rejection = Rejection::kScene;
    r.rejection_detail = describe(check_scene(moved, cfg.constraints));
  } else if (!check_question_relevance(item.program, moved, item.gt)) {
    r.rejection = Rejection::kRelevance;
  } else {
    r.new_answer = player.answer(moved, item.question);
  }
  r.reward = calc_reward(r.new_answer, r.old_answer, r.gt, cfg.reward);
  return r;
}

RoundOutcome play_round(const Item& item, const PolicyParameters& params, PlayerHandle& player,
                        const GameConfig& cfg, Rng& rng) {
  const Answer old_answer = player.answer(item.scene, item.question);
  RoundOutcome out;
  out.a2c.tokens = tokenize(item.scene, item.question, cfg.qvocab, cfg.grid);
  const PolicyOutput po = forward(params, out.a2c.tokens);
  const ActionSample s = sample(po.dists, rng, item.scene.size());
  out.record = resolve_round(item, old_answer, s.displacement, player, cfg);
  out.record.log_prob = s.log_prob;
  out.record.state_value = po.state_value;
  out.a2c.action = s.bins;
  out.a2c.reward = out.record.reward;
  out.a2c.state_value = po.state_value;
  out.a2c.log_prob = s.log_prob;
  return out;
}

RoundRecord play_forced_round(const Item& item, const Displacement& d, PlayerHandle& player,
                              const GameConfig& cfg) {
  const Answer old_answer = player.answer(item.scene, item.question);
  return resolve_round(item, old_answer, d, player, cfg);
}

// ---------------------------------------------------------------------------
// Transcripts

void TranscriptWriter::write(const RoundRecord& r, const std::string& phase) {
  json j = round_to_json(r);
  j["phase"] = phase;
  j["seq"] = seq_++;
  if (wall_clock_) {
    j["time_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  }
  *out_ << j.dump() << '\n';
}

std::vector<TranscriptEntry> read_transcript(const std::string& path, const AttributeVocab& vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open transcript " + path);
  std::vector<TranscriptEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorClass::kParse, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back({j.value("phase", ""), round_from_json(j, vocab)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training and evaluation

const char* optimizer_name(Optimizer o) { return o == Optimizer::kAdam ? "adam" : "sgd"; }

std::optional<Optimizer> parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "adam") return Optimizer::kAdam;
  return std::nullopt;
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (episodes < 0) problems.push_back("episodes must be nonnegative");
  if (batch_size < 0) problems.push_back("batch_size must be nonnegative");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) problems.push_back("learning_rate must be finite and nonnegative");
  if (!(entropy_coef >= 0.0) || !std::isfinite(entropy_coef)) problems.push_back("entropy_coef must be finite and nonnegative");
  if (checkpoint_every < 0) problems.push_back("checkpoint_every must be nonnegative");
  if (checkpoint_every > 0 && checkpoint_path.empty()) problems.push_back("checkpoint_every needs checkpoint_path");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }
}

TrainResult train(const MiniGame& game, PolicyParameters params, PlayerHandle& player, const GameConfig& cfg,
                  const TrainConfig& tcfg, long long start_episode, TranscriptWriter* transcript,
                  const AdamState* adam) {
  tcfg.validate();
  if (game.items.empty()) throw Error(ErrorClass::kInvalidArgument, "mini-game has no items");
  const long long size = static_cast<long long>(game.items.size());
  const long long batch = tcfg.batch_size > 0 ? tcfg.batch_size : std::min<long long>(size, 32);
  if (start_episode % batch != 0) {
    throw Error(ErrorClass::kInvalidArgument, "training can only resume at a batch boundary");
  }

  TrainResult result;
  result.adam = adam ? *adam : AdamState::for_params(params);
  long long episode = start_episode;
  while (episode < tcfg.episodes) {
    const long long b = episode / batch;
    Rng rng(derive_seed(tcfg.seed, static_cast<std::uint64_t>(b)));
    const long long n = std::min(batch, tcfg.episodes - episode);
    A2CBatch a2c;
    TracePoint tp;
    tp.batch = b;
    for (long long k = 0; k < n; ++k, ++episode) {
      const int idx = static_cast<int>(episode % size);
      RoundOutcome o = play_round(game.items[idx], params, player, cfg, rng);
      o.record.minigame = game.id;
      o.record.episode = episode;
      o.record.item = idx;
      if (transcript) transcript->write(o.record, "train");
      tp.mean_reward += o.record.reward;
      tp.consistency += o.record.changed() ? 1.0 : 0.0;
      tp.drop += (o.record.changed() && answer_equal(o.record.old_answer, o.record.gt)) ? 1.0 : 0.0;
      tp.invalid_rate += o.record.valid() ? 0.0 : 1.0;
      a2c.records.push_back(std::move(o.a2c));
    }
    const double inv = 1.0 / static_cast<double>(n);
    tp.mean_reward *= inv;
    tp.consistency *= inv;
    tp.drop *= inv;
    tp.invalid_rate *= inv;
    tp.episodes = episode;
    Gradients g = compute_gradients(params, a2c, tcfg.entropy_coef);
    tp.policy_loss = g.losses.policy;
    tp.value_loss = g.losses.value;
    if (tcfg.optimizer == Optimizer::kAdam) {
      params = adam_step(params, g.grads, tcfg.learning_rate, result.adam);
    } else {
      params = apply_gradients(params, g.grads, tcfg.learning_rate);
    }
    result.trace.push_back(tp);
    if (tcfg.checkpoint_every > 0 && (b + 1) % tcfg.checkpoint_every == 0) {
      save_policy(tcfg.checkpoint_path, params, episode,
                  tcfg.optimizer == Optimizer::kAdam ? &result.adam : nullptr);
    }
  }
  result.params = std::move(params);
  result.episodes_done = std::max(episode, start_episode);
  return result;
}

std::vector<RoundRecord> evaluate(const MiniGame& game, const PolicyParameters& params, PlayerHandle& player,
                                  const GameConfig& cfg, const EvalConfig& ecfg, TranscriptWriter* transcript) {
  std::vector<RoundRecord> out;
  Rng rng(ecfg.seed);
  long long episode = 0;
  for (int idx = 0; idx < static_cast<int>(game.items.size()); ++idx) {
    const Item& item = game.items[idx];
    const TokenSequence tokens = tokenize(item.scene, item.question, cfg.qvocab, cfg.grid);
    const PolicyOutput po = forward(params, tokens);
    for (int k = 0; k < ecfg.rounds_per_item; ++k) {
      const Answer old_answer = player.answer(item.scene, item.question);
      ActionSample s;
      if (ecfg.greedy) {
        Displacement d;
        std::array<int, kHeadOutputs> bins;
        bins.fill(-1);
        const int center = cfg.grid.center();
        for (int h = 0; h < item.scene.size(); ++h) {
          Eigen::Index bx = 0;
          Eigen::Index by = 0;
          po.dists[2 * h].maxCoeff(&bx);
          po.dists[2 * h + 1].maxCoeff(&by);
          bins[2 * h] = static_cast<int>(bx);
          bins[2 * h + 1] = static_cast<int>(by);
          d.moves[h] = BinOffset{static_cast<int>(bx) - center, static_cast<int>(by) - center};
        }
        s.displacement = d;
        s.bins = bins;
        s.log_prob = log_prob_of(po.dists, bins);
      } else {
        s = sample(po.dists, rng, item.scene.size());
      }
      RoundRecord r = resolve_round(item, old_answer, s.displacement, player, cfg);
      r.minigame = game.id;
      r.episode = episode++;
      r.item = idx;
      r.log_prob = s.log_prob;
      r.state_value = po.state_value;
      if (transcript) transcript->write(r, "eval");
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search baselines

namespace {

// In-bounds offsets per axis for one coordinate.
std::vector<int> admissible_offsets(double coord, const GameConfig& cfg) {
  std::vector<int> out;
  const int half = cfg.grid.bins / 2;
  const double w = cfg.grid.width();
  for (int k = -half; k <= half; ++k) {
    const double v = coord + k * w;
    if (!cfg.constraints.enforce_bounds || std::abs(v) <= cfg.constraints.bounds) out.push_back(k);
  }
  return out;
}

}  // namespace

SearchResult random_search(const MiniGame& game, PlayerHandle& player, const GameConfig& cfg,
                           const SearchConfig& scfg, Rng& rng) {
  SearchResult result;
  long long episode = 0;
  for (int idx = 0; idx < static_cast<int>(game.items.size()); ++idx) {
    const Item& item = game.items[idx];
    SearchItemResult ir;
    ir.item = idx;
    if (scfg.budget <= 0) {
      result.items.push_back(ir);
      continue;
    }
    // Sampling only in-bounds offsets is rejection on the bounds check
    // with the rejected draws skipped; the remaining checks reject below.
    std::vector<std::vector<int>> ox;
    std::vector<std::vector<int>> oy;
    for (const auto& o : item.scene.objects) {
      ox.push_back(admissible_offsets(o.x, cfg));
      oy.push_back(admissible_offsets(o.y, cfg));
    }
    const Answer old_answer = player.answer(item.scene, item.question);
    long long spent = 0;
    while (spent < scfg.budget && ir.attempts < scfg.max_attempts) {
      ++ir.attempts;
      Displacement d;
      for (int i = 0; i < item.scene.size(); ++i) {
        d.moves[i] = BinOffset{ox[i][rng.below(ox[i].size())], oy[i][rng.below(oy[i].size())]};
      }
      const SceneGraph moved = apply_displacement(item.scene, d, cfg.grid);
      if (!scene_is_valid(moved, cfg.constraints) || !check_question_relevance(item.program, moved, item.gt)) {
        if (scfg.rejections_consume_budget) ++spent;
        continue;
      }
      ++spent;
      ++ir.queries;
      RoundRecord r;
      r.minigame = game.id;
      r.episode = episode++;
      r.item = idx;
      r.gt = item.gt;
      r.old_answer = old_answer;
      r.displacement = d;
      r.new_answer = player.answer(moved, item.question);
      r.reward = calc_reward(r.new_answer, old_answer, item.gt, cfg.reward);
      const bool flipped = r.changed();
      result.records.push_back(std::move(r));
      if (flipped) {
        ir.success = true;
        ir.fooling = d;
        break;
      }
    }
    result.items.push_back(ir);
  }
  return result;
}

ExhaustiveResult exhaustive_search(const Item& item, PlayerHandle& player, const GameConfig& cfg,
                                   std::span<const int> movable) {
  if (movable.size() > static_cast<std::size_t>(kMaxExhaustiveMovable)) {
    throw Error(ErrorClass::kInvalidArgument, "exhaustive search supports at most 3 movable objects");
  }
  for (std::size_t a = 0; a < movable.size(); ++a) {
    if (movable[a] < 0 || movable[a] >= item.scene.size()) {
      throw Error(ErrorClass::kInvalidArgument, "movable object " + std::to_string(movable[a]) + " does not exist");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (movable[a] == movable[b]) throw Error(ErrorClass::kInvalidArgument, "movable objects repeat");
    }
  }
  ExhaustiveResult res;
  const int bins = cfg.grid.bins;
  const int half = bins / 2;
  const long long per_object = static_cast<long long>(bins) * bins;
  long long total = 1;
  for (std::size_t k = 0; k < movable.size(); ++k) total *= per_object;

  try {
    res.old_answer = player.answer(item.scene, item.question);
    for (long long code = 0; code < total; ++code) {
      Displacement d = Displacement::zero(item.scene.size());
      long long rest = code;
      for (int obj : movable) {
        const int cell = static_cast<int>(rest % per_object);
        rest /= per_object;
        d.moves[obj] = BinOffset{cell % bins - half, cell / bins - half};
      }
      ++res.enumerated;
      const SceneGraph moved = apply_displacement(item.scene, d, cfg.grid);
      if (!scene_is_valid(moved, cfg.constraints) || !check_question_relevance(item.program, moved, item.gt)) {
        continue;
      }
      ++res.valid;
      const Answer a = player.answer(moved, item.question);
      if (!answer_equal(a, res.old_answer)) res.fooling.push_back(d);
    }
  } catch (const Error& e) {
    if (e.error_class() != ErrorClass::kTransport && e.error_class() != ErrorClass::kProtocol) throw;
    res.partial = true;
    res.error = std::string(error_class_name(e.error_class())) + ": " + e.what();
  }
  res.rarity = static_cast<double>(res.fooling.size()) / static_cast<double>(total);
  return res;
}

std::vector<Item> curate_items(std::span<const Item> pool, PlayerHandle& player, const GameConfig& cfg,
                               const CurationConfig& ccfg) {
  std::vector<Item> out;
  for (const auto& item : pool) {
    if (ccfg.limit > 0 && out.size() >= ccfg.limit) break;
    if (item.scene.size() > ccfg.max_objects) continue;
    if (ccfg.require_player_correct || ccfg.require_fooling) {
      const Answer old = player.answer(item.scene, item.question);
      if (ccfg.require_player_correct && !answer_equal(old, item.gt)) continue;
    }
    if (ccfg.require_fooling) {
      bool found = false;
      for (int i = 0; i < item.scene.size() && !found; ++i) {
        const int movable[] = {i};
        auto r = exhaustive_search(item, player, cfg, movable);
        if (!r.error.empty()) throw Error(ErrorClass::kTransport, r.error);
        found = !r.fooling.empty();
      }
      if (!found) continue;
    }
    out.push_back(item);
  }
  return out;
}

}  // namespace advgame
