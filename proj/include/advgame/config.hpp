#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advgame/enforcers.hpp"
#include "advgame/game.hpp"
#include "advgame/generator.hpp"
#include "advgame/grid.hpp"
#include "advgame/player.hpp"
#include "advgame/policy.hpp"

namespace advgame {

const char* margin_mode_name(MarginMode m);
std::optional<MarginMode> parse_margin_mode(std::string_view name);

// How to reach the player: a built-in one, a child process, or a TCP address.
struct PlayerLaunch {
  std::string kind = "flawed";  // oracle | flawed | command | tcp
  FlawSpec flaw = FlawSpec::relation_margin(0.6);
  std::vector<std::string> command;
  std::string host = "127.0.0.1";
  int port = 0;
  int timeout_ms = 10000;
  // Built-in players only: route every query through the wire encoding.
  bool serialize = true;
};

// Built-in players need the program lookup; external ones ignore it.
PlayerHandle make_player(const PlayerLaunch& launch, std::shared_ptr<const ProgramLookup> lookup,
                         std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  bool wall_clock = false;

  struct Paths {
    std::string scenes = "data/corpus/scenes.json";
    std::string questions = "data/corpus/questions.json";
    std::string out_dir = "runs/latest";
    std::string minigames;    // default: <out_dir>/minigames.json
    std::string transcripts;  // default: <out_dir>/transcripts
    std::string policy;       // checkpoint to resume or play from
  } paths;

  SceneConstraintConfig constraints;
  RewardConfig reward;
  GridSpec grid;

  struct PolicyDims {
    int embed_dim = 16;
    int hidden = 64;
    bool detach_critic = false;
  } policy;

  TrainConfig train;
  EvalConfig eval;
  SearchConfig search;

  struct SceneGen {
    int count = 300;
    int questions_per_scene = 10;
    int min_objects = kMinObjects;
    int max_objects = kMaxObjects;
    int attempts_per_object = 100;
    int max_restarts = 1000;
  } scenegen;

  struct MiniGames {
    int size = 10;
    int count = 20;
    bool shuffle_heads = false;
    CurationConfig curation;
  } minigame;

  struct GridDataset {
    int n_objects = 2;
    bool stationary = false;
    int stationary_cell = -1;
    HopFamily family = HopFamily::kOnehop;
    double split_percent = 50.0;
    int trials = 10;
    long long shard_size = 20000;
  } grid_dataset;

  struct Exhaustive {
    int minigame = 0;
    int item = 0;
    std::vector<int> movable = {0};
  } exhaustive;

  struct Render {
    std::string input;  // scenes file, transcript, or trace file
    std::string kind = "scene";  // scene | trace | histogram
    int index = 0;
    std::string output;
  } render;

  PlayerLaunch player;

  nlohmann::json to_json() const;
  // Every problem found, as "key: message"; empty when valid.
  std::vector<std::string> problems() const;

  GameConfig game_config() const;
  PolicyConfig policy_config() const;
  SceneGenConfig scene_gen_config() const;
  GridDatasetSpec grid_dataset_spec() const;
  std::string minigames_path() const;
  std::string transcripts_dir() const;
};

// Overlays `overrides` on the defaults. Unknown keys, wrong types and bad
// values are all collected into one Error(kInvalidConfig).
RunConfig run_config_from_json(const nlohmann::json& overrides);

// Dotted leaf keys of the default config ("train.episodes", ...).
std::vector<std::string> config_keys();

// Sets one dotted key from command-line text. Strings are taken verbatim;
// other leaves are parsed as JSON, and a string-list leaf also accepts
// whitespace-separated words. Problems are appended, not thrown.
void set_config_key(nlohmann::json& overrides, const std::string& dotted, const std::string& text,
                    std::vector<std::string>& problems);

// Reads a JSON config file into an overrides object.
nlohmann::json read_config_file(const std::string& path);

// Per-minigame seeds, all derived from the minigame's own seed.
struct GameSeeds {
  std::uint64_t init = 0;
  std::uint64_t train = 0;
  std::uint64_t eval = 0;
  std::uint64_t search = 0;
};
GameSeeds game_seeds(const MiniGame& game);

struct AdversaryRun {
  TrainResult train;
  std::vector<RoundRecord> eval;
};

// Fresh policy, training, then evaluation rounds, as configured.
AdversaryRun run_adversary(const MiniGame& game, PlayerHandle& player, const RunConfig& cfg,
                           TranscriptWriter* transcript = nullptr);

// Random-search baseline with the configured budget.
SearchResult run_search(const MiniGame& game, PlayerHandle& player, const RunConfig& cfg,
                        TranscriptWriter* transcript = nullptr);

}  // namespace advgame
