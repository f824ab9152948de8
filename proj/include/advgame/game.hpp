#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "advgame/enforcers.hpp"
#include "advgame/player.hpp"
#include "advgame/policy.hpp"
#include "advgame/program.hpp"
#include "advgame/rng.hpp"
#include "advgame/scene.hpp"

namespace advgame {

struct RewardConfig {
  double dr = 1.0;   // a correct answer was flipped
  double cr = 0.1;   // a wrong answer was changed
  double fr = -0.1;  // answer unchanged
  double isr = -0.8; // manipulated scene rejected

  // Requires dr > cr > 0 > fr > isr.
  void validate() const;
};

// nullopt for `new_answer` marks an invalid (rejected) scene.
double calc_reward(const std::optional<Answer>& new_answer, const Answer& old_answer, const Answer& gt,
                   const RewardConfig& cfg = {});

// One (scene, question) item with its private program and verified answer.
struct Item {
  SceneGraph scene;
  std::vector<std::string> question;
  FunctionalProgram program;
  Answer gt;
  int pool_index = -1;
};

struct QuestionRecord {
  std::vector<std::string> question;
  FunctionalProgram program;
  std::string answer;
  int image_index = 0;
};

nlohmann::json question_to_json(const QuestionRecord& q);
QuestionRecord question_from_json(const nlohmann::json& j);
std::vector<QuestionRecord> load_questions(const std::string& path);
void save_questions(const std::string& path, std::span<const QuestionRecord> questions);

// Joins questions to scenes by image_index and keeps the records whose stored
// answer agrees with the executor on that scene. `rejected`, if given,
// receives the count of records dropped.
std::vector<Item> make_items(std::span<const SceneGraph> scenes, std::span<const QuestionRecord> questions,
                             std::size_t* rejected = nullptr);

struct MiniGame {
  int id = 0;
  std::uint64_t seed = 0;
  std::vector<Item> items;
};

// Draws `count` disjoint mini-games of `size` items from a shuffled pool.
// With shuffle_heads each item's objects are reordered by a seeded
// permutation, which changes which head drives which object.
std::vector<MiniGame> build_minigames(std::span<const Item> pool, int size, int count, std::uint64_t seed,
                                      bool shuffle_heads = false);

nlohmann::json item_to_json(const Item& item);
Item item_from_json(const nlohmann::json& j, std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());
// Self-contained: items carry their scenes, programs and answers.
void save_minigames(const std::string& path, std::span<const MiniGame> games);
std::vector<MiniGame> load_minigames(const std::string& path,
                                     std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());

// Program lookup covering every item, for the built-in players.
std::shared_ptr<ProgramLookup> lookup_for(std::span<const Item> items);
std::shared_ptr<ProgramLookup> lookup_for(std::span<const MiniGame> games);

struct GameConfig {
  SceneConstraintConfig constraints;
  RewardConfig reward;
  GridSpec grid;
  QuestionVocab qvocab = QuestionVocab::standard(AttributeVocab::clevr());
};

enum class Rejection { kNone, kScene, kRelevance };
const char* rejection_name(Rejection r);

struct RoundRecord {
  int minigame = 0;
  long long episode = 0;
  int item = 0;
  Answer gt;
  Answer old_answer;
  std::optional<Answer> new_answer;  // empty when the scene was rejected
  Rejection rejection = Rejection::kNone;
  std::string rejection_detail;
  double reward = 0.0;
  double log_prob = 0.0;
  double state_value = 0.0;
  Displacement displacement;

  bool valid() const { return rejection == Rejection::kNone; }
  bool changed() const { return valid() && !answer_equal(*new_answer, old_answer); }
};

// Ten entries, each [dx, dy] or null.
nlohmann::json displacement_to_json(const Displacement& d);
Displacement displacement_from_json(const nlohmann::json& j);

nlohmann::json round_to_json(const RoundRecord& r);
RoundRecord round_from_json(const nlohmann::json& j, const AttributeVocab& vocab);

// Applies `d`, gates it through both enforcers, and queries the player on the
// new scene only when it passed. The old answer is supplied by the caller.
RoundRecord resolve_round(const Item& item, const Answer& old_answer, const Displacement& d,
                          PlayerHandle& player, const GameConfig& cfg);

struct RoundOutcome {
  RoundRecord record;
  A2CRecord a2c;
};

// One full game round: query the original, sample a manipulation, resolve it.
RoundOutcome play_round(const Item& item, const PolicyParameters& params, PlayerHandle& player,
                        const GameConfig& cfg, Rng& rng);

// Same round with the manipulation fixed instead of sampled.
RoundRecord play_forced_round(const Item& item, const Displacement& d, PlayerHandle& player,
                              const GameConfig& cfg);

// Streams round records as one JSON object per line. Records carry a
// logical sequence number; wall-clock stamps are opt-in because they break
// byte-identical reruns.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::ostream& out, bool wall_clock = false) : out_(&out), wall_clock_(wall_clock) {}
  void write(const RoundRecord& r, const std::string& phase);
  std::uint64_t written() const { return seq_; }

 private:
  std::ostream* out_;
  bool wall_clock_;
  std::uint64_t seq_ = 0;
};

struct TranscriptEntry {
  std::string phase;
  RoundRecord record;
};

std::vector<TranscriptEntry> read_transcript(const std::string& path, const AttributeVocab& vocab);

enum class Optimizer { kSgd, kAdam };
const char* optimizer_name(Optimizer o);
std::optional<Optimizer> parse_optimizer(std::string_view name);

struct TrainConfig {
  long long episodes = 2000;
  int batch_size = 0;  // 0 means min(minigame size, 32)
  double learning_rate = 1e-3;
  double entropy_coef = 0.0;
  Optimizer optimizer = Optimizer::kSgd;
  std::uint64_t seed = 0;
  // Save a checkpoint every this many batches; 0 disables.
  int checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
};

struct TracePoint {
  long long batch = 0;
  long long episodes = 0;
  double mean_reward = 0.0;
  double consistency = 0.0;
  double drop = 0.0;
  double invalid_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

struct TrainResult {
  PolicyParameters params;
  AdamState adam;  // meaningful with Optimizer::kAdam
  std::vector<TracePoint> trace;
  long long episodes_done = 0;
};

// Episode e plays item e mod size. Batch b draws from derive_seed(seed, b),
// so a run resumed at a batch boundary continues the same stream.
// `adam` resumes optimizer state; null starts from zero moments.
TrainResult train(const MiniGame& game, PolicyParameters params, PlayerHandle& player,
                  const GameConfig& cfg, const TrainConfig& tcfg, long long start_episode = 0,
                  TranscriptWriter* transcript = nullptr, const AdamState* adam = nullptr);

struct EvalConfig {
  int rounds_per_item = 10;
  bool greedy = false;  // argmax per head instead of sampling
  std::uint64_t seed = 0;
};

std::vector<RoundRecord> evaluate(const MiniGame& game, const PolicyParameters& params, PlayerHandle& player,
                                  const GameConfig& cfg, const EvalConfig& ecfg,
                                  TranscriptWriter* transcript = nullptr);

struct SearchConfig {
  long long budget = 5000;
  // Count enforcer-rejected samples against the budget too.
  bool rejections_consume_budget = false;
  // Hard cap on samples per item, rejected ones included.
  long long max_attempts = 2'000'000;
};

struct SearchItemResult {
  int item = 0;
  bool success = false;
  long long queries = 0;
  long long attempts = 0;
  std::optional<Displacement> fooling;
};

struct SearchResult {
  std::vector<SearchItemResult> items;
  // One record per manipulated-scene player query.
  std::vector<RoundRecord> records;
};

// Uniform valid manipulations until the first answer change or the budget runs out.
SearchResult random_search(const MiniGame& game, PlayerHandle& player, const GameConfig& cfg,
                           const SearchConfig& scfg, Rng& rng);

struct ExhaustiveResult {
  Answer old_answer;
  std::vector<Displacement> fooling;
  long long enumerated = 0;
  long long valid = 0;
  double rarity = 0.0;
  bool partial = false;
  std::string error;
};

inline constexpr int kMaxExhaustiveMovable = 3;

struct CurationConfig {
  int max_objects = kMaxObjects;
  // Keep items the player answers correctly before any manipulation.
  bool require_player_correct = false;
  // Keep items where moving some single object can change the answer.
  bool require_fooling = false;
  std::size_t limit = 0;  // stop after this many; 0 means no limit
};

// Filters a pool in order; every check queries `player`.
std::vector<Item> curate_items(std::span<const Item> pool, PlayerHandle& player, const GameConfig& cfg,
                               const CurationConfig& ccfg);

// Every placement of the movable objects at offsets in [-bins/2, bins/2] per
// axis; fooling means the player's answer changed on a valid scene.
ExhaustiveResult exhaustive_search(const Item& item, PlayerHandle& player, const GameConfig& cfg,
                                   std::span<const int> movable);

}  // namespace advgame
