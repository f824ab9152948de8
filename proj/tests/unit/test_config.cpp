#include <gtest/gtest.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "advgame/config.hpp"
#include "advgame/error.hpp"

using namespace advgame;
using nlohmann::json;

namespace {

std::string config_error(const json& overrides) {
  try {
    run_config_from_json(overrides);
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kInvalidConfig);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  const auto cfg = run_config_from_json(json::object());
  EXPECT_TRUE(cfg.problems().empty());
  EXPECT_EQ(cfg.minigame.size, 10);
  EXPECT_EQ(cfg.minigame.count, 20);
  EXPECT_EQ(cfg.search.budget, 5000);
  EXPECT_DOUBLE_EQ(cfg.reward.isr, -0.8);
  EXPECT_EQ(cfg.player.kind, "flawed");
}

TEST(Config, OverridesApply) {
  const auto cfg = run_config_from_json({{"train", {{"episodes", 77}, {"optimizer", "adam"}}}, {"seed", 9}});
  EXPECT_EQ(cfg.train.episodes, 77);
  EXPECT_EQ(cfg.train.optimizer, Optimizer::kAdam);
  EXPECT_EQ(cfg.seed, 9u);
}

TEST(Config, EveryProblemReported) {
  const auto msg = config_error({{"train", {{"episodes", -1}, {"learning_rate", "fast"}}},
                                 {"reward", {{"dr", -5.0}}},
                                 {"no_such_key", 1}});
  EXPECT_NE(msg.find("no_such_key"), std::string::npos) << msg;
  EXPECT_NE(msg.find("train.learning_rate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("episodes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("reward"), std::string::npos) << msg;
}

TEST(Config, KeysAreDottedLeaves) {
  const auto keys = config_keys();
  for (const char* k : {"seed", "train.episodes", "constraints.min_center_dist", "player.kind", "minigame.limit"}) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
  // Every key can be round-tripped through its own default.
  const auto defaults = run_config_from_json(json::object()).to_json();
  for (const auto& k : keys) {
    EXPECT_TRUE(defaults.contains(json::json_pointer("/" + [&] {
      std::string p = k;
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }()))) << k;
  }
}

TEST(Config, SetKeyFromText) {
  json o = json::object();
  std::vector<std::string> problems;
  set_config_key(o, "train.episodes", "123", problems);
  set_config_key(o, "paths.out_dir", "runs/x", problems);
  set_config_key(o, "player.command", "python3 -m player", problems);
  set_config_key(o, "exhaustive.movable", "[0, 1]", problems);
  EXPECT_TRUE(problems.empty());
  const auto cfg = run_config_from_json(o);
  EXPECT_EQ(cfg.train.episodes, 123);
  EXPECT_EQ(cfg.paths.out_dir, "runs/x");
  EXPECT_EQ(cfg.player.command, (std::vector<std::string>{"python3", "-m", "player"}));
  EXPECT_EQ(cfg.exhaustive.movable, (std::vector<int>{0, 1}));
  set_config_key(o, "train.episodes", "lots", problems);
  set_config_key(o, "train.nope", "1", problems);
  EXPECT_EQ(problems.size(), 2u);
}

TEST(Config, DerivedPaths) {
  const auto cfg = run_config_from_json({{"paths", {{"out_dir", "o"}}}});
  EXPECT_EQ(cfg.minigames_path(), "o/minigames.json");
  EXPECT_EQ(cfg.transcripts_dir(), "o/transcripts");
}

TEST(Config, GameSeedsDistinct) {
  MiniGame g;
  g.seed = 5;
  const auto s = game_seeds(g);
  EXPECT_NE(s.init, s.train);
  EXPECT_NE(s.train, s.eval);
  EXPECT_NE(s.eval, s.search);
}
