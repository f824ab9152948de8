#include "advgame/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "advgame/error.hpp"
#include "advgame/rng.hpp"

namespace advgame {

using nlohmann::json;

const char* margin_mode_name(MarginMode m) { return m == MarginMode::kAnyAxis ? "any_axis" : "all_axes"; }

std::optional<MarginMode> parse_margin_mode(std::string_view name) {
  if (name == "all_axes") return MarginMode::kAllAxes;
  if (name == "any_axis") return MarginMode::kAnyAxis;
  return std::nullopt;
}

PlayerHandle make_player(const PlayerLaunch& launch, std::shared_ptr<const ProgramLookup> lookup,
                         std::shared_ptr<const AttributeVocab> vocab) {
  const auto timeout = std::chrono::milliseconds(launch.timeout_ms);
  if (launch.kind == "command") {
    return PlayerHandle(std::make_unique<ChildProcessTransport>(launch.command, timeout), vocab);
  }
  if (launch.kind == "tcp") {
    return PlayerHandle(std::make_unique<TcpTransport>(launch.host, launch.port, timeout), vocab);
  }
  if (!lookup) throw Error(ErrorClass::kInvalidArgument, "built-in player needs a program lookup");
  std::shared_ptr<const Player> p;
  if (launch.kind == "oracle") {
    p = std::make_shared<OraclePlayer>(lookup);
  } else if (launch.kind == "flawed") {
    p = std::make_shared<FlawedPlayer>(lookup, launch.flaw);
  } else {
    throw Error(ErrorClass::kInvalidConfig, "unknown player kind '" + launch.kind + "'");
  }
  return PlayerHandle::in_process(std::move(p), launch.serialize, std::move(vocab));
}

json RunConfig::to_json() const {
  const auto& c = constraints;
  return json{
      {"seed", seed},
      {"jobs", jobs},
      {"wall_clock", wall_clock},
      {"paths",
       {{"scenes", paths.scenes},
        {"questions", paths.questions},
        {"out_dir", paths.out_dir},
        {"minigames", paths.minigames},
        {"transcripts", paths.transcripts},
        {"policy", paths.policy}}},
      {"constraints",
       {{"min_center_dist", c.min_center_dist},
        {"direction_margin", c.direction_margin},
        {"margin_mode", margin_mode_name(c.margin_mode)},
        {"min_visibility", c.min_visibility},
        {"large_radius", c.large_radius},
        {"small_radius_ratio", c.small_radius_ratio},
        {"bounds", c.bounds},
        {"min_objects", c.min_objects},
        {"max_objects", c.max_objects},
        {"enforce_bounds", c.enforce_bounds}}},
      {"reward", {{"dr", reward.dr}, {"cr", reward.cr}, {"fr", reward.fr}, {"isr", reward.isr}}},
      {"grid", {{"bins", grid.bins}, {"lo", grid.lo}, {"hi", grid.hi}}},
      {"policy",
       {{"embed_dim", policy.embed_dim}, {"hidden", policy.hidden}, {"detach_critic", policy.detach_critic}}},
      {"train",
       {{"episodes", train.episodes},
        {"batch_size", train.batch_size},
        {"learning_rate", train.learning_rate},
        {"entropy_coef", train.entropy_coef},
        {"optimizer", optimizer_name(train.optimizer)},
        {"checkpoint_every", train.checkpoint_every},
        {"checkpoint_path", train.checkpoint_path}}},
      {"eval", {{"rounds_per_item", eval.rounds_per_item}, {"greedy", eval.greedy}}},
      {"search",
       {{"budget", search.budget},
        {"rejections_consume_budget", search.rejections_consume_budget},
        {"max_attempts", search.max_attempts}}},
      {"scenegen",
       {{"count", scenegen.count},
        {"questions_per_scene", scenegen.questions_per_scene},
        {"min_objects", scenegen.min_objects},
        {"max_objects", scenegen.max_objects},
        {"attempts_per_object", scenegen.attempts_per_object},
        {"max_restarts", scenegen.max_restarts}}},
      {"minigame",
       {{"size", minigame.size},
        {"count", minigame.count},
        {"shuffle_heads", minigame.shuffle_heads},
        {"max_objects", minigame.curation.max_objects},
        {"require_player_correct", minigame.curation.require_player_correct},
        {"require_fooling", minigame.curation.require_fooling},
        {"limit", minigame.curation.limit}}},
      {"grid_dataset",
       {{"n_objects", grid_dataset.n_objects},
        {"stationary", grid_dataset.stationary},
        {"stationary_cell", grid_dataset.stationary_cell},
        {"family", hop_family_name(grid_dataset.family)},
        {"split_percent", grid_dataset.split_percent},
        {"trials", grid_dataset.trials},
        {"shard_size", grid_dataset.shard_size}}},
      {"exhaustive",
       {{"minigame", exhaustive.minigame}, {"item", exhaustive.item}, {"movable", exhaustive.movable}}},
      {"render",
       {{"input", render.input}, {"kind", render.kind}, {"index", render.index}, {"output", render.output}}},
      {"player",
       {{"kind", player.kind},
        {"flaw",
         {{"kind", flaw_kind_name(player.flaw.kind)},
          {"tau", player.flaw.tau},
          {"k", player.flaw.k},
          {"cell_size", player.flaw.cell_size}}},
        {"command", player.command},
        {"host", player.host},
        {"port", player.port},
        {"timeout_ms", player.timeout_ms},
        {"serialize", player.serialize}}},
  };
}

namespace {

void collect(std::vector<std::string>& out, const char* section, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    std::istringstream parts(e.what());
    std::string part;
    while (std::getline(parts, part, ';')) {
      const auto b = part.find_first_not_of(' ');
      if (b != std::string::npos) out.push_back(std::string(section) + ": " + part.substr(b));
    }
  }
}

bool same_kind(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

// Overlays `v` onto `def`, recording unknown keys and type mismatches.
void overlay(json& def, const json& v, const std::string& prefix, std::vector<std::string>& problems) {
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!def.contains(it.key())) {
      problems.push_back(key + ": unknown key");
      continue;
    }
    json& slot = def[it.key()];
    if (!same_kind(slot, it.value())) {
      problems.push_back(key + ": expected " + std::string(slot.type_name()) + ", got " +
                         std::string(it.value().type_name()));
      continue;
    }
    if (slot.is_object()) {
      overlay(slot, it.value(), key, problems);
    } else {
      if (slot.is_number_unsigned() && it.value().is_number_integer() && it.value().get<long long>() < 0) {
        problems.push_back(key + ": must be nonnegative");
        continue;
      }
      slot = it.value();
    }
  }
}

void leaves(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      leaves(it.value(), key, out);
    } else {
      out.push_back(key);
    }
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out, const std::string& where, std::vector<std::string>& problems) {
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    problems.push_back(where + "." + key + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  if (jobs < 1) out.push_back("jobs: must be at least 1");
  collect(out, "constraints", [&] { constraints.validate(); });
  collect(out, "reward", [&] { reward.validate(); });
  collect(out, "grid", [&] { grid.validate(); });
  collect(out, "policy", [&] { policy_config().validate(); });
  collect(out, "train", [&] { train.validate(); });
  if (eval.rounds_per_item < 1) out.push_back("eval.rounds_per_item: must be at least 1");
  if (search.budget < 1) out.push_back("search.budget: must be at least 1");
  if (search.max_attempts < search.budget) out.push_back("search.max_attempts: must be at least search.budget");
  if (scenegen.count < 0) out.push_back("scenegen.count: must be nonnegative");
  if (scenegen.questions_per_scene < 0) out.push_back("scenegen.questions_per_scene: must be nonnegative");
  collect(out, "scenegen", [&] { scene_gen_config().validate(); });
  if (minigame.size < 1) out.push_back("minigame.size: must be at least 1");
  if (minigame.count < 1) out.push_back("minigame.count: must be at least 1");
  if (minigame.curation.max_objects < 1) out.push_back("minigame.max_objects: must be at least 1");
  collect(out, "grid_dataset", [&] { grid_dataset_spec().validate(); });
  if (grid_dataset.shard_size < 1) out.push_back("grid_dataset.shard_size: must be at least 1");
  if (exhaustive.movable.empty() || static_cast<int>(exhaustive.movable.size()) > kMaxExhaustiveMovable) {
    out.push_back("exhaustive.movable: needs 1 to " + std::to_string(kMaxExhaustiveMovable) + " object indices");
  }
  if (render.kind != "scene" && render.kind != "trace" && render.kind != "histogram") {
    out.push_back("render.kind: must be scene, trace or histogram");
  }
  const auto& p = player;
  if (p.kind != "oracle" && p.kind != "flawed" && p.kind != "command" && p.kind != "tcp") {
    out.push_back("player.kind: must be oracle, flawed, command or tcp");
  }
  if (p.kind == "command" && p.command.empty()) out.push_back("player.command: required for a command player");
  if (p.kind == "tcp" && (p.port <= 0 || p.port > 65535)) out.push_back("player.port: must be in 1..65535");
  if (p.timeout_ms <= 0) out.push_back("player.timeout_ms: must be positive");
  if (p.flaw.kind == FlawSpec::Kind::kRelationMargin && !(p.flaw.tau >= 0.0)) {
    out.push_back("player.flaw.tau: must be nonnegative");
  }
  if (p.flaw.kind == FlawSpec::Kind::kNearestK && p.flaw.k < 1) out.push_back("player.flaw.k: must be at least 1");
  if (p.flaw.kind == FlawSpec::Kind::kQuantizedPerception && !(p.flaw.cell_size >= 0.0)) {
    out.push_back("player.flaw.cell_size: must be nonnegative");
  }
  return out;
}

GameConfig RunConfig::game_config() const {
  GameConfig g;
  g.constraints = constraints;
  g.reward = reward;
  g.grid = grid;
  return g;
}

PolicyConfig RunConfig::policy_config() const {
  const GameConfig g = game_config();
  PolicyConfig p = PolicyConfig::for_vocab(AttributeVocab::clevr(), g.qvocab, grid);
  p.embed_dim = policy.embed_dim;
  p.hidden = policy.hidden;
  p.detach_critic = policy.detach_critic;
  return p;
}

SceneGenConfig RunConfig::scene_gen_config() const {
  SceneGenConfig s;
  s.min_objects = scenegen.min_objects;
  s.max_objects = scenegen.max_objects;
  s.constraints = constraints;
  s.attempts_per_object = scenegen.attempts_per_object;
  s.max_restarts = scenegen.max_restarts;
  return s;
}

GridDatasetSpec RunConfig::grid_dataset_spec() const {
  GridDatasetSpec s;
  s.n_objects = grid_dataset.n_objects;
  s.stationary = grid_dataset.stationary;
  s.stationary_cell = grid_dataset.stationary_cell;
  s.family = grid_dataset.family;
  s.split_percent = grid_dataset.split_percent;
  s.trials = grid_dataset.trials;
  s.seed = seed;
  s.grid = grid;
  s.constraints = constraints;
  return s;
}

std::string RunConfig::minigames_path() const {
  return paths.minigames.empty() ? (std::filesystem::path(paths.out_dir) / "minigames.json").string()
                                 : paths.minigames;
}

std::string RunConfig::transcripts_dir() const {
  return paths.transcripts.empty() ? (std::filesystem::path(paths.out_dir) / "transcripts").string()
                                   : paths.transcripts;
}

RunConfig run_config_from_json(const json& overrides) {
  std::vector<std::string> problems;
  json m = RunConfig{}.to_json();
  if (!overrides.is_object()) {
    throw Error(ErrorClass::kInvalidConfig, "config must be a JSON object");
  }
  overlay(m, overrides, "", problems);

  RunConfig c;
  get_to(m, "seed", c.seed, "", problems);
  get_to(m, "jobs", c.jobs, "", problems);
  get_to(m, "wall_clock", c.wall_clock, "", problems);

  const json& pa = m["paths"];
  get_to(pa, "scenes", c.paths.scenes, "paths", problems);
  get_to(pa, "questions", c.paths.questions, "paths", problems);
  get_to(pa, "out_dir", c.paths.out_dir, "paths", problems);
  get_to(pa, "minigames", c.paths.minigames, "paths", problems);
  get_to(pa, "transcripts", c.paths.transcripts, "paths", problems);
  get_to(pa, "policy", c.paths.policy, "paths", problems);

  const json& co = m["constraints"];
  auto& k = c.constraints;
  get_to(co, "min_center_dist", k.min_center_dist, "constraints", problems);
  get_to(co, "direction_margin", k.direction_margin, "constraints", problems);
  std::string mode;
  get_to(co, "margin_mode", mode, "constraints", problems);
  if (auto mm = parse_margin_mode(mode)) {
    k.margin_mode = *mm;
  } else {
    problems.push_back("constraints.margin_mode: must be all_axes or any_axis");
  }
  get_to(co, "min_visibility", k.min_visibility, "constraints", problems);
  get_to(co, "large_radius", k.large_radius, "constraints", problems);
  get_to(co, "small_radius_ratio", k.small_radius_ratio, "constraints", problems);
  get_to(co, "bounds", k.bounds, "constraints", problems);
  get_to(co, "min_objects", k.min_objects, "constraints", problems);
  get_to(co, "max_objects", k.max_objects, "constraints", problems);
  get_to(co, "enforce_bounds", k.enforce_bounds, "constraints", problems);

  const json& re = m["reward"];
  get_to(re, "dr", c.reward.dr, "reward", problems);
  get_to(re, "cr", c.reward.cr, "reward", problems);
  get_to(re, "fr", c.reward.fr, "reward", problems);
  get_to(re, "isr", c.reward.isr, "reward", problems);

  const json& gr = m["grid"];
  get_to(gr, "bins", c.grid.bins, "grid", problems);
  get_to(gr, "lo", c.grid.lo, "grid", problems);
  get_to(gr, "hi", c.grid.hi, "grid", problems);

  const json& po = m["policy"];
  get_to(po, "embed_dim", c.policy.embed_dim, "policy", problems);
  get_to(po, "hidden", c.policy.hidden, "policy", problems);
  get_to(po, "detach_critic", c.policy.detach_critic, "policy", problems);

  const json& tr = m["train"];
  get_to(tr, "episodes", c.train.episodes, "train", problems);
  get_to(tr, "batch_size", c.train.batch_size, "train", problems);
  get_to(tr, "learning_rate", c.train.learning_rate, "train", problems);
  get_to(tr, "entropy_coef", c.train.entropy_coef, "train", problems);
  std::string opt;
  get_to(tr, "optimizer", opt, "train", problems);
  if (auto o = parse_optimizer(opt)) {
    c.train.optimizer = *o;
  } else {
    problems.push_back("train.optimizer: must be sgd or adam");
  }
  get_to(tr, "checkpoint_every", c.train.checkpoint_every, "train", problems);
  get_to(tr, "checkpoint_path", c.train.checkpoint_path, "train", problems);

  get_to(m["eval"], "rounds_per_item", c.eval.rounds_per_item, "eval", problems);
  get_to(m["eval"], "greedy", c.eval.greedy, "eval", problems);

  const json& se = m["search"];
  get_to(se, "budget", c.search.budget, "search", problems);
  get_to(se, "rejections_consume_budget", c.search.rejections_consume_budget, "search", problems);
  get_to(se, "max_attempts", c.search.max_attempts, "search", problems);

  const json& sg = m["scenegen"];
  get_to(sg, "count", c.scenegen.count, "scenegen", problems);
  get_to(sg, "questions_per_scene", c.scenegen.questions_per_scene, "scenegen", problems);
  get_to(sg, "min_objects", c.scenegen.min_objects, "scenegen", problems);
  get_to(sg, "max_objects", c.scenegen.max_objects, "scenegen", problems);
  get_to(sg, "attempts_per_object", c.scenegen.attempts_per_object, "scenegen", problems);
  get_to(sg, "max_restarts", c.scenegen.max_restarts, "scenegen", problems);

  const json& mg = m["minigame"];
  get_to(mg, "size", c.minigame.size, "minigame", problems);
  get_to(mg, "count", c.minigame.count, "minigame", problems);
  get_to(mg, "shuffle_heads", c.minigame.shuffle_heads, "minigame", problems);
  get_to(mg, "max_objects", c.minigame.curation.max_objects, "minigame", problems);
  get_to(mg, "require_player_correct", c.minigame.curation.require_player_correct, "minigame", problems);
  get_to(mg, "require_fooling", c.minigame.curation.require_fooling, "minigame", problems);
  get_to(mg, "limit", c.minigame.curation.limit, "minigame", problems);

  const json& gd = m["grid_dataset"];
  get_to(gd, "n_objects", c.grid_dataset.n_objects, "grid_dataset", problems);
  get_to(gd, "stationary", c.grid_dataset.stationary, "grid_dataset", problems);
  get_to(gd, "stationary_cell", c.grid_dataset.stationary_cell, "grid_dataset", problems);
  std::string family;
  get_to(gd, "family", family, "grid_dataset", problems);
  if (auto f = parse_hop_family(family)) {
    c.grid_dataset.family = *f;
  } else {
    problems.push_back("grid_dataset.family: must be onehop, twohop or mixhop");
  }
  get_to(gd, "split_percent", c.grid_dataset.split_percent, "grid_dataset", problems);
  get_to(gd, "trials", c.grid_dataset.trials, "grid_dataset", problems);
  get_to(gd, "shard_size", c.grid_dataset.shard_size, "grid_dataset", problems);

  const json& ex = m["exhaustive"];
  get_to(ex, "minigame", c.exhaustive.minigame, "exhaustive", problems);
  get_to(ex, "item", c.exhaustive.item, "exhaustive", problems);
  get_to(ex, "movable", c.exhaustive.movable, "exhaustive", problems);

  const json& rd = m["render"];
  get_to(rd, "input", c.render.input, "render", problems);
  get_to(rd, "kind", c.render.kind, "render", problems);
  get_to(rd, "index", c.render.index, "render", problems);
  get_to(rd, "output", c.render.output, "render", problems);

  const json& pl = m["player"];
  get_to(pl, "kind", c.player.kind, "player", problems);
  std::string fk;
  get_to(pl["flaw"], "kind", fk, "player.flaw", problems);
  if (auto f = parse_flaw_kind(fk)) {
    c.player.flaw.kind = *f;
  } else {
    problems.push_back("player.flaw.kind: unknown flaw '" + fk + "'");
  }
  get_to(pl["flaw"], "tau", c.player.flaw.tau, "player.flaw", problems);
  get_to(pl["flaw"], "k", c.player.flaw.k, "player.flaw", problems);
  get_to(pl["flaw"], "cell_size", c.player.flaw.cell_size, "player.flaw", problems);
  get_to(pl, "command", c.player.command, "player", problems);
  get_to(pl, "host", c.player.host, "player", problems);
  get_to(pl, "port", c.player.port, "player", problems);
  get_to(pl, "timeout_ms", c.player.timeout_ms, "player", problems);
  get_to(pl, "serialize", c.player.serialize, "player", problems);

  for (auto& p : c.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  leaves(RunConfig{}.to_json(), "", out);
  return out;
}

void set_config_key(json& overrides, const std::string& dotted, const std::string& text,
                    std::vector<std::string>& problems) {
  const json defaults = RunConfig{}.to_json();
  json::json_pointer ptr;
  std::istringstream parts(dotted);
  std::string part;
  while (std::getline(parts, part, '.')) ptr /= part;
  if (!defaults.contains(ptr) || defaults.at(ptr).is_object()) {
    problems.push_back(dotted + ": unknown key");
    return;
  }
  const json& def = defaults.at(ptr);
  if (def.is_string()) {
    overrides[ptr] = text;
    return;
  }
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded() && def.is_array()) {
    std::istringstream words(text);
    json arr = json::array();
    for (std::string w; words >> w;) arr.push_back(w);
    v = arr;
  }
  if (v.is_discarded()) {
    problems.push_back(dotted + ": cannot parse '" + text + "'");
    return;
  }
  overrides[ptr] = v;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open config file " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
}

GameSeeds game_seeds(const MiniGame& game) {
  return GameSeeds{derive_seed(game.seed, 1), derive_seed(game.seed, 2), derive_seed(game.seed, 3),
                   derive_seed(game.seed, 4)};
}

AdversaryRun run_adversary(const MiniGame& game, PlayerHandle& player, const RunConfig& cfg,
                           TranscriptWriter* transcript) {
  const GameSeeds seeds = game_seeds(game);
  const GameConfig gcfg = cfg.game_config();
  TrainConfig tcfg = cfg.train;
  tcfg.seed = seeds.train;
  AdversaryRun run;
  run.train = train(game, PolicyParameters::initialize(cfg.policy_config(), seeds.init), player, gcfg, tcfg, 0,
                    transcript);
  EvalConfig ecfg = cfg.eval;
  ecfg.seed = seeds.eval;
  run.eval = evaluate(game, run.train.params, player, gcfg, ecfg, transcript);
  return run;
}

SearchResult run_search(const MiniGame& game, PlayerHandle& player, const RunConfig& cfg,
                        TranscriptWriter* transcript) {
  Rng rng(game_seeds(game).search);
  SearchResult r = random_search(game, player, cfg.game_config(), cfg.search, rng);
  if (transcript) {
    for (const auto& rec : r.records) transcript->write(rec, "rsg");
  }
  return r;
}

}  // namespace advgame
