#include "advgame/grid.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"
#include "grid_templates_data.hpp"

namespace advgame {

using nlohmann::json;

const char* hop_family_name(HopFamily f) {
  switch (f) {
    case HopFamily::kOnehop: return "onehop";
    case HopFamily::kTwohop: return "twohop";
    case HopFamily::kMixhop: return "mixhop";
  }
  return "onehop";
}

std::optional<HopFamily> parse_hop_family(std::string_view name) {
  for (auto f : {HopFamily::kOnehop, HopFamily::kTwohop, HopFamily::kMixhop}) {
    if (name == hop_family_name(f)) return f;
  }
  return std::nullopt;
}

void GridDatasetSpec::validate() const {
  std::vector<std::string> problems;
  try {
    grid.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (n_objects < 2 || n_objects > 4) problems.push_back("n_objects must be 2, 3 or 4");
  if (n_objects == 4 && !stationary) problems.push_back("four-object datasets need a stationary object");
  if (stationary && (stationary_cell < -1 || stationary_cell >= grid.bins * grid.bins)) {
    problems.push_back("stationary_cell outside the grid");
  }
  if (!(split_percent > 0.0 && split_percent < 100.0)) problems.push_back("split_percent must be in (0, 100)");
  if (trials <= 0) problems.push_back("trials must be positive");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }
}

int GridDatasetSpec::pinned_cell() const {
  return stationary_cell >= 0 ? stationary_cell : grid.center() * grid.bins + grid.center();
}

namespace {

long long ipow(long long b, int e) {
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

long long raw_config_count(const GridDatasetSpec& spec) { return ipow(spec.cells(), spec.n_objects); }

long long movable_config_count(const GridDatasetSpec& spec) { return ipow(spec.cells(), spec.movable()); }

std::vector<int> decode_config(long long id, const GridDatasetSpec& spec) {
  if (id < 0 || id >= movable_config_count(spec)) {
    throw Error(ErrorClass::kInvalidArgument, "configuration id " + std::to_string(id) + " out of range");
  }
  std::vector<int> cells(static_cast<std::size_t>(spec.movable()));
  for (auto& c : cells) {
    c = static_cast<int>(id % spec.cells());
    id /= spec.cells();
  }
  return cells;
}

long long encode_config(const std::vector<int>& cells, const GridDatasetSpec& spec) {
  if (static_cast<int>(cells.size()) != spec.movable()) {
    throw Error(ErrorClass::kInvalidArgument, "wrong number of cells for this dataset");
  }
  long long id = 0;
  for (auto it = cells.rbegin(); it != cells.rend(); ++it) {
    if (*it < 0 || *it >= spec.cells()) throw Error(ErrorClass::kInvalidArgument, "cell index out of range");
    id = id * spec.cells() + *it;
  }
  return id;
}

const GridTemplates& GridTemplates::bundled() {
  static const GridTemplates t = from_json(json::parse(detail::kBundledGridTemplates));
  return t;
}

GridTemplates GridTemplates::from_json(const json& j) {
  try {
    GridTemplates t;
    t.version = j.at("version").get<std::string>();
    auto read = [&](const char* fam, std::vector<GridTemplate>& into) {
      for (const auto& e : j.at("families").at(fam)) {
        into.push_back({e.at("id").get<std::string>(), e.at("hops").get<int>(), tokens_of(e.at("text").get<std::string>())});
      }
    };
    read("onehop", t.onehop);
    read("twohop", t.twohop);
    if (t.onehop.empty() || t.twohop.empty()) throw Error(ErrorClass::kInvalidConfig, "template families may not be empty");
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad template file: ") + e.what());
  }
}

std::vector<SceneObject> grid_identities(const GridDatasetSpec& spec) {
  const auto& v = *AttributeVocab::shared_clevr();
  Rng rng(derive_seed(spec.seed, 0x6964));
  std::vector<int> colors(v.colors.size());
  std::iota(colors.begin(), colors.end(), 0);
  rng.shuffle(colors.begin(), colors.end());
  std::vector<SceneObject> objs(static_cast<std::size_t>(spec.n_objects));
  for (int i = 0; i < spec.n_objects; ++i) {
    objs[i].color = colors[i];
    objs[i].shape = static_cast<int>(rng.below(v.shapes.size()));
    objs[i].size = static_cast<int>(rng.below(v.sizes.size()));
    objs[i].material = static_cast<int>(rng.below(v.materials.size()));
    objs[i].rotation = 0.0;
  }
  return objs;
}

GridItem make_grid_item(long long config_id, const GridDatasetSpec& spec) {
  GridItem item;
  item.config_id = config_id;
  std::vector<int> cells = decode_config(config_id, spec);
  if (spec.stationary) cells.push_back(spec.pinned_cell());
  item.scene.objects = grid_identities(spec);
  item.scene.image_index = static_cast<int>(config_id);
  for (int i = 0; i < spec.n_objects; ++i) {
    auto& o = item.scene.objects[i];
    o.x = bin_center(cells[i] % spec.grid.bins, spec.grid);
    o.y = bin_center(cells[i] / spec.grid.bins, spec.grid);
  }
  SceneConstraintConfig cfg = spec.constraints;
  cfg.min_objects = std::min(cfg.min_objects, spec.n_objects);
  item.valid = scene_is_valid(item.scene, cfg);
  return item;
}

void enumerate_configs(const GridDatasetSpec& spec, const std::function<void(GridItem&&)>& visit, long long begin,
                       long long end) {
  spec.validate();
  const long long total = movable_config_count(spec);
  if (end < 0 || end > total) end = total;
  for (long long id = std::max(0LL, begin); id < end; ++id) visit(make_grid_item(id, spec));
}

namespace {

std::vector<std::string> relation_text(Relation r) {
  switch (r) {
    case Relation::kLeft: return {"left", "of"};
    case Relation::kRight: return {"right", "of"};
    case Relation::kFront: return {"in", "front", "of"};
    case Relation::kBehind: return {"behind"};
  }
  return {};
}

constexpr AttributeKind kQueryKinds[] = {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize,
                                         AttributeKind::kMaterial};

std::optional<QuestionRecord> instantiate(const GridItem& item, const GridTemplate& t, int anchor,
                                          const std::vector<Relation>& rels, AttributeKind k) {
  const auto& s = item.scene;
  FunctionalProgram p;
  auto add = [&](std::string fn, std::vector<int> in, std::vector<std::string> vals = {}) {
    p.nodes.push_back({std::move(fn), std::move(in), std::move(vals)});
    return static_cast<int>(p.nodes.size()) - 1;
  };
  int cur = add("scene", {});
  cur = add("filter_color", {cur}, {s.name_of(anchor, AttributeKind::kColor)});
  cur = add("filter_shape", {cur}, {s.name_of(anchor, AttributeKind::kShape)});
  cur = add("unique", {cur});
  for (int h = 0; h < t.hops; ++h) {
    cur = add("relate", {cur}, {relation_name(rels[h])});
    cur = add("unique", {cur});
  }
  add(std::string("query_") + attribute_kind_name(k), {cur});
  const Answer a = execute(p, s);
  if (!a.determined()) return std::nullopt;

  QuestionRecord q;
  for (const auto& tok : t.text) {
    if (tok == "<K>") {
      q.question.push_back(attribute_kind_name(k));
    } else if (tok == "<A>") {
      q.question.push_back(s.name_of(anchor, AttributeKind::kColor));
      q.question.push_back(s.name_of(anchor, AttributeKind::kShape));
    } else if (tok == "<R1>" || tok == "<R2>") {
      const auto w = relation_text(rels[tok == "<R1>" ? 0 : 1]);
      q.question.insert(q.question.end(), w.begin(), w.end());
    } else {
      q.question.push_back(tok);
    }
  }
  q.program = std::move(p);
  q.answer = a.to_string();
  q.image_index = s.image_index;
  return q;
}

}  // namespace

std::vector<QuestionRecord> make_questions(const GridItem& item, HopFamily family, Rng& rng,
                                           const GridTemplates& templates) {
  std::vector<QuestionRecord> out;
  if (!item.valid) return out;
  const int n = item.scene.size();
  for (int anchor = 0; anchor < n; ++anchor) {
    const bool two = family == HopFamily::kTwohop || (family == HopFamily::kMixhop && rng.below(2) == 1);
    const auto& pool = two ? templates.twohop : templates.onehop;
    const GridTemplate& t = pool[rng.below(pool.size())];
    const AttributeKind k = kQueryKinds[rng.below(4)];
    for (Relation r1 : kAllRelations) {
      if (t.hops == 1) {
        if (auto q = instantiate(item, t, anchor, {r1}, k)) out.push_back(std::move(*q));
        continue;
      }
      for (Relation r2 : kAllRelations) {
        if (auto q = instantiate(item, t, anchor, {r1, r2}, k)) out.push_back(std::move(*q));
      }
    }
  }
  return out;
}

std::vector<Split> split(std::size_t n, double percent, std::span<const std::uint64_t> seeds) {
  if (!(percent > 0.0 && percent < 100.0)) throw Error(ErrorClass::kInvalidArgument, "split percent must be in (0, 100)");
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * percent / 100.0));
  std::vector<Split> out;
  for (auto seed : seeds) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx.begin(), idx.end());
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::uint64_t> trial_seeds(const GridDatasetSpec& spec) {
  std::vector<std::uint64_t> seeds;
  for (int t = 0; t < spec.trials; ++t) seeds.push_back(derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(t)));
  return seeds;
}

json grid_spec_to_json(const GridDatasetSpec& spec) {
  return json{{"n_objects", spec.n_objects},
              {"stationary", spec.stationary},
              {"stationary_cell", spec.stationary ? spec.pinned_cell() : -1},
              {"family", hop_family_name(spec.family)},
              {"split_percent", spec.split_percent},
              {"trials", spec.trials},
              {"seed", spec.seed},
              {"bins", spec.grid.bins},
              {"lo", spec.grid.lo},
              {"hi", spec.grid.hi}};
}

GridDatasetSummary write_grid_dataset(const GridDatasetSpec& spec, const std::string& dir, long long shard_size) {
  spec.validate();
  if (shard_size <= 0) throw Error(ErrorClass::kInvalidArgument, "shard size must be positive");
  std::filesystem::create_directories(dir);
  GridDatasetSummary sum;
  sum.raw = raw_config_count(spec);
  sum.movable = movable_config_count(spec);

  Rng qrng(derive_seed(spec.seed, 0x71));
  std::vector<long long> dataset;  // config ids of items with questions
  json shards = json::array();
  std::vector<SceneGraph> scenes;
  std::vector<QuestionRecord> questions;
  int shard = 0;
  auto flush = [&] {
    if (scenes.empty()) return;
    const std::string sp = "scenes_" + std::to_string(shard) + ".json";
    const std::string qp = "questions_" + std::to_string(shard) + ".json";
    save_scenes(dir + "/" + sp, scenes);
    save_questions(dir + "/" + qp, questions);
    shards.push_back({{"scenes", sp}, {"questions", qp}, {"items", scenes.size()}});
    scenes.clear();
    questions.clear();
    ++shard;
  };
  std::vector<long long> invalid_ids;
  enumerate_configs(spec, [&](GridItem&& item) {
    if (!item.valid) {
      ++sum.invalid;
      invalid_ids.push_back(item.config_id);
      return;
    }
    ++sum.valid;
    auto qs = make_questions(item, spec.family, qrng);
    if (qs.empty()) {
      ++sum.question_free;
      return;
    }
    sum.questions += static_cast<long long>(qs.size());
    dataset.push_back(item.config_id);
    scenes.push_back(std::move(item.scene));
    questions.insert(questions.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
    if (static_cast<long long>(scenes.size()) >= shard_size) flush();
  });
  flush();

  const auto seeds = trial_seeds(spec);
  const auto splits = split(dataset.size(), spec.split_percent, seeds);
  json split_json = json::array();
  for (std::size_t t = 0; t < splits.size(); ++t) {
    std::vector<long long> train_ids;
    for (auto i : splits[t].train) train_ids.push_back(dataset[i]);
    split_json.push_back({{"trial", t}, {"seed", seeds[t]}, {"train", train_ids}, {"test_count", splits[t].test.size()}});
  }
  json manifest = {{"format", "advgame-grid-dataset"},
                   {"spec", grid_spec_to_json(spec)},
                   {"template_version", GridTemplates::bundled().version},
                   {"counts",
                    {{"raw", sum.raw},
                     {"movable", sum.movable},
                     {"valid", sum.valid},
                     {"invalid", sum.invalid},
                     {"question_free", sum.question_free},
                     {"items", dataset.size()},
                     {"questions", sum.questions}}},
                   {"objects", json::array()},
                   {"invalid_ids", invalid_ids},
                   {"shards", shards},
                   {"splits", split_json}};
  for (const auto& o : grid_identities(spec)) {
    const auto& v = *AttributeVocab::shared_clevr();
    manifest["objects"].push_back({{"shape", v.shapes[o.shape]},
                                   {"color", v.colors[o.color]},
                                   {"size", v.sizes[o.size]},
                                   {"material", v.materials[o.material]}});
  }
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write manifest in " + dir);
  out << manifest.dump(1) << '\n';
  return sum;
}

}  // namespace advgame
