// advgame: one binary for generation, games, baselines, reports and figures.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "advgame/config.hpp"
#include "advgame/error.hpp"
#include "advgame/game.hpp"
#include "advgame/generator.hpp"
#include "advgame/grid.hpp"
#include "advgame/metrics.hpp"
#include "advgame/policy.hpp"
#include "advgame/rng.hpp"
#include "advgame/viz.hpp"

#ifndef ADVGAME_VERSION
#define ADVGAME_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advgame;

namespace {

constexpr const char* kConfigEnv = "ADVGAME_CONFIG";

int exit_code_for(ErrorClass c) {
  switch (c) {
    case ErrorClass::kInvalidArgument: return 2;
    case ErrorClass::kInvalidConfig: return 3;
    case ErrorClass::kParse: return 4;
    case ErrorClass::kNotFound: return 5;
    case ErrorClass::kTransport: return 6;
    case ErrorClass::kProtocol: return 7;
    case ErrorClass::kNumeric: return 8;
    case ErrorClass::kInternal: return 9;
    case ErrorClass::kNoTranscripts: return 10;
  }
  return 9;
}

// One JSON line on stderr so callers can branch on the class.
int fail(ErrorClass c, const std::string& message) {
  std::cerr << json{{"error", error_class_name(c)}, {"message", message}}.dump() << '\n';
  return exit_code_for(c);
}

struct Run {
  std::string subcommand;
  RunConfig cfg;
  std::vector<std::string> outputs;
  json summary = json::object();
};

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorClass::kNotFound, "cannot create directory " + p.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write " + path.string());
  out << text;
}

// The resolved config plus what the run produced; no wall-clock fields, so
// reruns with the same config give the same manifest.
void write_manifest(const Run& run) {
  const fs::path path = fs::path(run.cfg.paths.out_dir) / (run.subcommand + ".manifest.json");
  json outputs = run.outputs;
  const json m{{"tool", "advgame"},
               {"version", ADVGAME_VERSION},
               {"subcommand", run.subcommand},
               {"config", run.cfg.to_json()},
               {"outputs", outputs},
               {"summary", run.summary}};
  write_text(path, m.dump(2) + "\n");
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::vector<MiniGame> load_games(const RunConfig& cfg) { return load_minigames(cfg.minigames_path()); }

fs::path policies_dir(const RunConfig& cfg) {
  return cfg.paths.policy.empty() ? fs::path(cfg.paths.out_dir) / "policies" : fs::path(cfg.paths.policy);
}

std::string game_file(const char* prefix, int id, const char* ext) {
  return std::string(prefix) + "_" + std::to_string(id) + ext;
}

json trace_to_json(const std::vector<TracePoint>& trace) {
  json arr = json::array();
  for (const auto& t : trace) {
    arr.push_back({{"batch", t.batch},
                   {"episodes", t.episodes},
                   {"mean_reward", t.mean_reward},
                   {"consistency", t.consistency},
                   {"drop", t.drop},
                   {"invalid_rate", t.invalid_rate},
                   {"policy_loss", t.policy_loss},
                   {"value_loss", t.value_loss}});
  }
  return arr;
}

// ---- subcommands ----

void cmd_gen_scenes(Run& run) {
  const auto& c = run.cfg;
  const auto scenes = generate_scenes(c.scenegen.count, derive_seed(c.seed, 1), c.scene_gen_config());
  const auto questions = generate_corpus_questions(scenes, c.scenegen.questions_per_scene, derive_seed(c.seed, 2));
  const fs::path dir(c.paths.out_dir);
  ensure_dir(dir);
  save_scenes((dir / "scenes.json").string(), scenes);
  save_questions((dir / "questions.json").string(), questions);
  run.outputs = {(dir / "scenes.json").string(), (dir / "questions.json").string()};
  run.summary = {{"scenes", scenes.size()}, {"questions", questions.size()}};
}

void cmd_gen_grid(Run& run) {
  const auto& c = run.cfg;
  const auto s = write_grid_dataset(c.grid_dataset_spec(), c.paths.out_dir, c.grid_dataset.shard_size);
  run.outputs = {(fs::path(c.paths.out_dir) / "manifest.json").string()};
  run.summary = {{"raw", s.raw},         {"movable", s.movable},
                 {"valid", s.valid},     {"invalid", s.invalid},
                 {"question_free", s.question_free}, {"questions", s.questions}};
}

void cmd_minigame(Run& run) {
  const auto& c = run.cfg;
  const auto scenes = load_scenes(c.paths.scenes);
  const auto questions = load_questions(c.paths.questions);
  std::size_t rejected = 0;
  const auto items = make_items(scenes, questions, &rejected);
  std::vector<Item> pool = items;
  const auto& cur = c.minigame.curation;
  if (cur.require_player_correct || cur.require_fooling || cur.max_objects < kMaxObjects || cur.limit > 0) {
    PlayerHandle player = make_player(c.player, lookup_for(items));
    pool = curate_items(items, player, c.game_config(), cur);
  }
  const auto games = build_minigames(pool, c.minigame.size, c.minigame.count, derive_seed(c.seed, 3),
                                     c.minigame.shuffle_heads);
  ensure_dir(fs::path(c.minigames_path()).parent_path().empty() ? fs::path(".")
                                                                : fs::path(c.minigames_path()).parent_path());
  save_minigames(c.minigames_path(), games);
  run.outputs = {c.minigames_path()};
  run.summary = {{"items", items.size()},     {"rejected_records", rejected}, {"pool", pool.size()},
                 {"minigames", games.size()}, {"size", c.minigame.size}};
}

void cmd_train(Run& run) {
  const auto& c = run.cfg;
  const auto games = load_games(c);
  const auto lookup = lookup_for(games);
  const fs::path tdir = c.transcripts_dir();
  const fs::path pdir = fs::path(c.paths.out_dir) / "policies";
  const fs::path trdir = fs::path(c.paths.out_dir) / "traces";
  ensure_dir(tdir);
  ensure_dir(pdir);
  ensure_dir(trdir);
  if (c.train.checkpoint_every > 0) ensure_dir(c.train.checkpoint_path);
  std::vector<json> rows(games.size());
  parallel_for(static_cast<int>(games.size()), c.jobs, [&](int gi) {
    const MiniGame& g = games[gi];
    PlayerHandle player = make_player(c.player, lookup);
    const GameSeeds seeds = game_seeds(g);
    const GameConfig gcfg = c.game_config();
    TrainConfig tcfg = c.train;
    tcfg.seed = seeds.train;
    if (tcfg.checkpoint_every > 0) {
      tcfg.checkpoint_path = (fs::path(c.train.checkpoint_path) / game_file("minigame", g.id, ".json")).string();
    }
    PolicyParameters params = PolicyParameters::initialize(c.policy_config(), seeds.init);
    long long start = 0;
    AdamState adam = AdamState::for_params(params);
    if (!c.paths.policy.empty()) {
      const fs::path resume = fs::path(c.paths.policy) / game_file("minigame", g.id, ".json");
      params = load_policy(resume.string(), &start, &adam);
    }
    std::ofstream tout(tdir / game_file("adversary", g.id, ".ndjson"), std::ios::binary);
    if (!tout) throw Error(ErrorClass::kNotFound, "cannot write transcripts under " + tdir.string());
    TranscriptWriter writer(tout, c.wall_clock);
    TrainResult tr = train(g, params, player, gcfg, tcfg, start, &writer, &adam);
    EvalConfig ecfg = c.eval;
    ecfg.seed = seeds.eval;
    const auto eval = evaluate(g, tr.params, player, gcfg, ecfg, &writer);
    save_policy((pdir / game_file("minigame", g.id, ".json")).string(), tr.params, tr.episodes_done,
                c.train.optimizer == Optimizer::kAdam ? &tr.adam : nullptr);
    write_text(trdir / game_file("minigame", g.id, ".json"), trace_to_json(tr.trace).dump() + "\n");
    const auto cd = consistency_and_drop(eval);
    rows[gi] = {{"minigame", g.id},
                {"episodes", tr.episodes_done},
                {"consistency", cd.consistency},
                {"drop", cd.drop},
                {"queries", player.queries()}};
  });
  run.outputs = {tdir.string(), pdir.string(), trdir.string()};
  run.summary = {{"minigames", rows}};
  for (const auto& r : rows) {
    std::cout << "minigame " << r["minigame"] << " consistency " << r["consistency"] << " drop " << r["drop"] << '\n';
  }
}

void cmd_play(Run& run) {
  const auto& c = run.cfg;
  const auto games = load_games(c);
  const auto lookup = lookup_for(games);
  const fs::path tdir = c.transcripts_dir();
  ensure_dir(tdir);
  std::vector<json> rows(games.size());
  parallel_for(static_cast<int>(games.size()), c.jobs, [&](int gi) {
    const MiniGame& g = games[gi];
    PlayerHandle player = make_player(c.player, lookup);
    const auto params = load_policy((policies_dir(c) / game_file("minigame", g.id, ".json")).string());
    std::ofstream tout(tdir / game_file("play", g.id, ".ndjson"), std::ios::binary);
    if (!tout) throw Error(ErrorClass::kNotFound, "cannot write transcripts under " + tdir.string());
    TranscriptWriter writer(tout, c.wall_clock);
    EvalConfig ecfg = c.eval;
    ecfg.seed = game_seeds(g).eval;
    // evaluate() tags rounds "eval"; play rounds are re-tagged so reports keep them apart.
    const auto recs = evaluate(g, params, player, c.game_config(), ecfg, nullptr);
    for (const auto& r : recs) writer.write(r, "play");
    const auto cd = consistency_and_drop(recs);
    rows[gi] = {{"minigame", g.id}, {"consistency", cd.consistency}, {"drop", cd.drop}};
  });
  run.outputs = {tdir.string()};
  run.summary = {{"minigames", rows}};
}

void cmd_rsg(Run& run) {
  const auto& c = run.cfg;
  const auto games = load_games(c);
  const auto lookup = lookup_for(games);
  const fs::path tdir = c.transcripts_dir();
  ensure_dir(tdir);
  std::vector<json> rows(games.size());
  parallel_for(static_cast<int>(games.size()), c.jobs, [&](int gi) {
    const MiniGame& g = games[gi];
    PlayerHandle player = make_player(c.player, lookup);
    std::ofstream tout(tdir / game_file("rsg", g.id, ".ndjson"), std::ios::binary);
    if (!tout) throw Error(ErrorClass::kNotFound, "cannot write transcripts under " + tdir.string());
    TranscriptWriter writer(tout, c.wall_clock);
    const auto r = run_search(g, player, c, &writer);
    int successes = 0;
    long long queries = 0;
    for (const auto& it : r.items) {
      successes += it.success ? 1 : 0;
      queries += it.queries;
    }
    rows[gi] = {{"minigame", g.id}, {"successes", successes}, {"queries", queries}};
  });
  run.outputs = {tdir.string()};
  run.summary = {{"minigames", rows}};
}

void cmd_exhaustive(Run& run) {
  const auto& c = run.cfg;
  const auto games = load_games(c);
  const auto& ex = c.exhaustive;
  auto g = std::find_if(games.begin(), games.end(), [&](const MiniGame& m) { return m.id == ex.minigame; });
  if (g == games.end()) throw Error(ErrorClass::kNotFound, "no mini-game " + std::to_string(ex.minigame));
  if (ex.item < 0 || ex.item >= static_cast<int>(g->items.size())) {
    throw Error(ErrorClass::kNotFound, "mini-game " + std::to_string(ex.minigame) + " has no item " +
                                           std::to_string(ex.item));
  }
  const Item& item = g->items[ex.item];
  PlayerHandle player = make_player(c.player, lookup_for(games));
  const auto r = exhaustive_search(item, player, c.game_config(), ex.movable);
  json fooling = json::array();
  for (const auto& d : r.fooling) fooling.push_back(displacement_to_json(d));
  const json out{{"minigame", ex.minigame},
                 {"item", ex.item},
                 {"movable", ex.movable},
                 {"old_answer", r.old_answer.to_string()},
                 {"enumerated", r.enumerated},
                 {"valid", r.valid},
                 {"fooling_count", r.fooling.size()},
                 {"rarity", r.rarity},
                 {"partial", r.partial},
                 {"error", r.error},
                 {"fooling", fooling}};
  const fs::path path =
      fs::path(c.paths.out_dir) / ("exhaustive_" + std::to_string(ex.minigame) + "_" + std::to_string(ex.item) + ".json");
  write_text(path, out.dump(1) + "\n");
  run.outputs = {path.string()};
  run.summary = {{"enumerated", r.enumerated}, {"valid", r.valid}, {"fooling", r.fooling.size()},
                 {"rarity", r.rarity},         {"partial", r.partial}};
  std::cout << "enumerated " << r.enumerated << " valid " << r.valid << " fooling " << r.fooling.size()
            << " rarity " << r.rarity << '\n';
  if (r.partial) throw Error(ErrorClass::kTransport, "search stopped early: " + r.error);
}

void cmd_report(Run& run) {
  const auto& c = run.cfg;
  const fs::path tdir = c.transcripts_dir();
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(tdir, ec)) {
    for (const auto& e : fs::directory_iterator(tdir)) {
      if (e.is_regular_file() && e.path().extension() == ".ndjson") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  // phase -> minigame -> records
  std::map<std::string, std::map<int, std::vector<RoundRecord>>> by_phase;
  for (const auto& f : files) {
    for (auto& e : read_transcript(f.string(), AttributeVocab::clevr())) {
      if (e.phase == "train") continue;
      by_phase[e.phase][e.record.minigame].push_back(std::move(e.record));
    }
  }
  if (by_phase.empty()) {
    throw Error(ErrorClass::kNoTranscripts, "no evaluation or search transcripts under " + tdir.string());
  }
  std::map<int, std::uint64_t> seeds;
  if (fs::exists(c.minigames_path())) {
    for (const auto& g : load_minigames(c.minigames_path())) seeds[g.id] = g.seed;
  }
  json report = json::object();
  std::string csv;
  for (const auto& [phase, games] : by_phase) {
    std::vector<TrialResult> trials;
    for (const auto& [id, recs] : games) trials.push_back(trial_from_records(recs, id, seeds[id]));
    const auto agg = aggregate(trials);
    report[phase] = report_json(agg, trials);
    csv += "# phase " + phase + "\n" + report_csv(agg, trials) + "\n";
  }
  const fs::path dir(c.paths.out_dir);
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "report.csv", csv);
  run.outputs = {(dir / "report.json").string(), (dir / "report.csv").string()};
  for (auto it = report.begin(); it != report.end(); ++it) {
    run.summary[it.key()] = {{"mean_drop", it.value()["mean_drop"]}, {"p_drop", it.value()["p_drop"]}};
  }
  std::cout << csv;
}

void cmd_render(Run& run) {
  const auto& c = run.cfg;
  const auto& r = c.render;
  if (r.input.empty()) throw Error(ErrorClass::kInvalidArgument, "render.input is required");
  std::string svg;
  std::string name;
  if (r.kind == "scene") {
    const auto scenes = load_scenes(r.input);
    if (r.index < 0 || r.index >= static_cast<int>(scenes.size())) {
      throw Error(ErrorClass::kNotFound, "no scene at index " + std::to_string(r.index));
    }
    svg = render_topdown(scenes[r.index]);
    name = "scene_" + std::to_string(r.index) + ".svg";
  } else {
    std::ifstream in(r.input);
    if (!in) throw Error(ErrorClass::kNotFound, "cannot open " + r.input);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorClass::kParse, r.input + ": " + e.what());
    }
    try {
      if (r.kind == "trace") {
        Series reward{"mean reward", {}, {}};
        Series drop{"drop", {}, {}};
        for (const auto& t : j) {
          reward.x.push_back(t.at("episodes").get<double>());
          reward.y.push_back(t.at("mean_reward").get<double>());
          drop.x.push_back(t.at("episodes").get<double>());
          drop.y.push_back(t.at("drop").get<double>());
        }
        svg = render_chart({reward, drop}, ChartKind::kLine, "training");
        name = "trace.svg";
      } else {
        // Per-trial drop histogram for each phase of a report.json.
        std::vector<Series> series;
        for (auto it = j.begin(); it != j.end(); ++it) {
          std::vector<double> drops;
          for (const auto& row : it.value().at("per_trial")) drops.push_back(row.at("drop").get<double>());
          Series s{it.key(), {}, {}};
          for (const auto& b : histogram(drops, 10)) {
            s.x.push_back((b.lo + b.hi) / 2);
            s.y.push_back(static_cast<double>(b.count));
          }
          series.push_back(std::move(s));
        }
        svg = render_chart(series, ChartKind::kHistogram, "drop per mini-game");
        name = "histogram.svg";
      }
    } catch (const json::exception& e) {
      throw Error(ErrorClass::kParse, r.input + ": " + e.what());
    }
  }
  const fs::path out = r.output.empty() ? fs::path(c.paths.out_dir) / name : fs::path(r.output);
  write_text(out, svg);
  run.outputs = {out.string()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial scene-manipulation game: generation, training, baselines, reports and figures.\n"
               "Config precedence: flag > config file > default. The config file comes from --config or $" +
               std::string(kConfigEnv) + "."};
  app.set_version_flag("--version", ADVGAME_VERSION);
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; keys mirror the dotted flags below");

  const json defaults = RunConfig{}.to_json();
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
  for (const auto& key : config_keys()) {
    json::json_pointer ptr;
    std::istringstream parts(key);
    for (std::string p; std::getline(parts, p, '.');) ptr /= p;
    const json& def = defaults.at(ptr);
    const std::string shown = def.is_string() ? def.get<std::string>() : def.dump();
    auto* opt = app.add_option("--" + key, flag_values[key], "default: " + (shown.empty() ? "\"\"" : shown));
    opt->group("Config");
    flag_opts.emplace_back(key, opt);
  }

  const std::vector<std::pair<const char*, const char*>> subs = {
      {"gen-scenes", "generate a scene corpus and template questions"},
      {"gen-grid", "enumerate a grid dataset with sharded outputs and splits"},
      {"minigame", "build mutually exclusive mini-games from the corpus"},
      {"train", "train one adversary per mini-game, then evaluate it"},
      {"play", "evaluate saved policies against the player"},
      {"rsg", "random-search baseline"},
      {"exhaustive", "enumerate every placement of up to three movable objects"},
      {"report", "aggregate transcripts into a results table"},
      {"render", "draw a scene, a training trace or a drop histogram as SVG"},
  };
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(ErrorClass::kInvalidArgument, e.what());
  }

  Run run;
  run.subcommand = app.get_subcommands().front()->get_name();
  try {
    json overrides = json::object();
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
    }
    if (!config_path.empty()) overrides = read_config_file(config_path);
    std::vector<std::string> problems;
    for (const auto& [key, opt] : flag_opts) {
      if (opt->count() > 0) set_config_key(overrides, key, flag_values[key], problems);
    }
    try {
      run.cfg = run_config_from_json(overrides);
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::kInvalidConfig) throw;
      std::istringstream parts(e.what());
      for (std::string p; std::getline(parts, p, ';');) {
        const auto b = p.find_first_not_of(' ');
        if (b != std::string::npos) problems.push_back(p.substr(b));
      }
    }
    if (!problems.empty()) {
      std::string msg;
      for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
      throw Error(ErrorClass::kInvalidConfig, msg);
    }

    static const std::map<std::string, void (*)(Run&)> handlers = {
        {"gen-scenes", cmd_gen_scenes}, {"gen-grid", cmd_gen_grid}, {"minigame", cmd_minigame},
        {"train", cmd_train},           {"play", cmd_play},         {"rsg", cmd_rsg},
        {"exhaustive", cmd_exhaustive}, {"report", cmd_report},     {"render", cmd_render},
    };
    handlers.at(run.subcommand)(run);
    write_manifest(run);
  } catch (const Error& e) {
    return fail(e.error_class(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorClass::kInternal, e.what());
  }
  return 0;
}
