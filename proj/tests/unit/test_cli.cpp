#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + ADVGAME_CLI + "\" " + args + " 2> \"" + err.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("advgame_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string corpus_flags() {
  const std::string src = ADVGAME_SOURCE_DIR;
  return "--paths.scenes " + src + "/data/corpus/scenes.json --paths.questions " + src +
         "/data/corpus/questions.json";
}

}  // namespace

TEST(Cli, ReportWithoutTranscriptsExitsTen) {
  const auto d = fresh_dir("empty");
  const auto r = cli("report --paths.out_dir " + d.string(), d);
  EXPECT_EQ(r.code, 10);
  const auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j.at("error"), "no-transcripts");
}

TEST(Cli, InvalidConfigExitsThree) {
  const auto d = fresh_dir("badcfg");
  std::ofstream(d / "cfg.json") << R"({"train": {"episodes": -4}, "bogus": true})";
  const auto r = cli("train --config " + (d / "cfg.json").string() + " --paths.out_dir " + d.string(), d);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("invalid-config"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("bogus"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("episodes"), std::string::npos) << r.err;
}

TEST(Cli, FlagOverridesFile) {
  const auto d = fresh_dir("precedence");
  std::ofstream(d / "cfg.json") << R"({"minigame": {"size": 3, "count": 2}})";
  const auto r = cli("minigame --config " + (d / "cfg.json").string() + " --minigame.count 1 " + corpus_flags() +
                         " --paths.out_dir " + d.string(),
                     d);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto games = nlohmann::json::parse(slurp(d / "minigames.json"));
  ASSERT_EQ(games.at("minigames").size(), 1u);
  EXPECT_EQ(games["minigames"][0]["items"].size(), 3u);
  const auto manifest = nlohmann::json::parse(slurp(d / "minigame.manifest.json"));
  EXPECT_EQ(manifest["config"]["minigame"]["count"], 1);
}

TEST(Cli, TrainingRerunIsByteIdentical) {
  std::string transcripts[2];
  for (int k = 0; k < 2; ++k) {
    const auto d = fresh_dir("rerun" + std::to_string(k));
    const std::string common = corpus_flags() + " --paths.out_dir " + d.string() +
                               " --minigame.size 3 --minigame.count 1 --train.episodes 24 --eval.rounds_per_item 2"
                               " --policy.embed_dim 4 --policy.hidden 8 --seed 11";
    ASSERT_EQ(cli("minigame " + common, d).code, 0);
    const auto r = cli("train " + common, d);
    ASSERT_EQ(r.code, 0) << r.err;
    transcripts[k] = slurp(d / "transcripts" / "adversary_0.ndjson");
  }
  EXPECT_FALSE(transcripts[0].empty());
  EXPECT_EQ(transcripts[0], transcripts[1]);
}
