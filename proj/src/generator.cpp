#include "advgame/generator.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

#include "advgame/error.hpp"

namespace advgame {

void SceneGenConfig::validate() const {
  constraints.validate();
  std::vector<std::string> problems;
  if (min_objects < kMinObjects || max_objects > kMaxObjects || min_objects > max_objects) {
    problems.push_back("object counts must satisfy 3 <= min_objects <= max_objects <= 10");
  }
  if (attempts_per_object <= 0) problems.push_back("attempts_per_object must be positive");
  if (max_restarts <= 0) problems.push_back("max_restarts must be positive");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }
}

SceneGraph generate_scene(Rng& rng, const SceneGenConfig& cfg, int image_index,
                          std::shared_ptr<const AttributeVocab> vocab) {
  cfg.validate();
  const int n = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  SceneConstraintConfig partial = cfg.constraints;
  partial.min_objects = 0;
  const double b = cfg.constraints.bounds;

  for (int restart = 0; restart < cfg.max_restarts; ++restart) {
    SceneGraph scene;
    scene.vocab = vocab;
    scene.image_index = image_index;
    scene.image_filename = "scene_" + std::to_string(image_index) + ".png";
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      SceneObject o;
      o.shape = static_cast<int>(rng.below(vocab->shapes.size()));
      o.color = static_cast<int>(rng.below(vocab->colors.size()));
      o.size = static_cast<int>(rng.below(vocab->sizes.size()));
      o.material = static_cast<int>(rng.below(vocab->materials.size()));
      o.rotation = rng.uniform(0.0, 360.0);
      ok = false;
      for (int a = 0; a < cfg.attempts_per_object; ++a) {
        o.x = rng.uniform(-b, b);
        o.y = rng.uniform(-b, b);
        scene.objects.push_back(o);
        if (scene_is_valid(scene, partial)) {
          ok = true;
          break;
        }
        scene.objects.pop_back();
      }
    }
    if (ok && scene_is_valid(scene, cfg.constraints)) {
      for (auto& o : scene.objects) o.z = vocab->sizes[o.size] == "small" ? 0.35 : 0.7;
      return scene;
    }
  }
  throw Error(ErrorClass::kInternal, "scene generation exhausted its restarts");
}

std::vector<SceneGraph> generate_scenes(int count, std::uint64_t seed, const SceneGenConfig& cfg,
                                        std::shared_ptr<const AttributeVocab> vocab) {
  std::vector<SceneGraph> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(generate_scene(rng, cfg, i, vocab));
  }
  return out;
}

namespace {

constexpr AttributeKind kKinds[] = {AttributeKind::kSize, AttributeKind::kColor, AttributeKind::kMaterial,
                                    AttributeKind::kShape};

const char* filter_name(AttributeKind k) {
  switch (k) {
    case AttributeKind::kShape: return "filter_shape";
    case AttributeKind::kColor: return "filter_color";
    case AttributeKind::kSize: return "filter_size";
    case AttributeKind::kMaterial: return "filter_material";
  }
  return "";
}

std::string suffix(AttributeKind k) { return attribute_kind_name(k); }

struct Filter {
  AttributeKind kind;
  int value;
};

// A noun phrase and the filters that realise it.
struct Description {
  std::vector<Filter> filters;
};

std::vector<std::string> phrase(const Description& d, const AttributeVocab& v, bool plural) {
  std::vector<std::string> words;
  std::optional<int> shape;
  for (auto kind : {AttributeKind::kSize, AttributeKind::kColor, AttributeKind::kMaterial}) {
    for (const auto& f : d.filters) {
      if (f.kind == kind) words.push_back(v.names(kind)[f.value]);
    }
  }
  for (const auto& f : d.filters) {
    if (f.kind == AttributeKind::kShape) shape = f.value;
  }
  if (shape) {
    words.push_back(v.shapes[*shape] + (plural ? "s" : ""));
  } else {
    words.push_back(plural ? "things" : "thing");
  }
  return words;
}

std::vector<int> apply_filters(const SceneGraph& s, const std::vector<int>& cands, const Description& d) {
  std::vector<int> out;
  for (int i : cands) {
    bool keep = true;
    for (const auto& f : d.filters) keep = keep && s.objects[i].attribute(f.kind) == f.value;
    if (keep) out.push_back(i);
  }
  return out;
}

// Filters that single out `target` among `cands`, added in random kind order.
std::optional<Description> unique_description(const SceneGraph& s, const std::vector<int>& cands, int target,
                                              Rng& rng) {
  std::vector<AttributeKind> order(std::begin(kKinds), std::end(kKinds));
  rng.shuffle(order.begin(), order.end());
  Description d;
  for (auto k : order) {
    if (apply_filters(s, cands, d).size() == 1) break;
    d.filters.push_back({k, s.objects[target].attribute(k)});
  }
  if (apply_filters(s, cands, d).size() != 1) return std::nullopt;
  return d;
}

// Zero to two attributes copied from a random object.
Description loose_description(const SceneGraph& s, const std::vector<int>& cands, Rng& rng) {
  Description d;
  const int src = cands.empty() ? static_cast<int>(rng.below(s.objects.size())) : cands[rng.below(cands.size())];
  std::vector<AttributeKind> order(std::begin(kKinds), std::end(kKinds));
  rng.shuffle(order.begin(), order.end());
  const int n = static_cast<int>(rng.below(3));
  for (int i = 0; i < n; ++i) d.filters.push_back({order[i], s.objects[src].attribute(order[i])});
  return d;
}

class Builder {
 public:
  int add(std::string fn, std::vector<int> inputs, std::vector<std::string> values = {}) {
    program.nodes.push_back({std::move(fn), std::move(inputs), std::move(values)});
    return static_cast<int>(program.nodes.size()) - 1;
  }
  int filters(int input, const Description& d, const AttributeVocab& v) {
    int cur = input;
    for (const auto& f : d.filters) cur = add(filter_name(f.kind), {cur}, {v.names(f.kind)[f.value]});
    return cur;
  }
  FunctionalProgram program;
};

std::vector<std::string> relation_words(Relation r) {
  switch (r) {
    case Relation::kLeft: return {"left", "of"};
    case Relation::kRight: return {"right", "of"};
    case Relation::kFront: return {"in", "front", "of"};
    case Relation::kBehind: return {"behind"};
  }
  return {};
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

struct Draft {
  std::vector<std::string> words;
  FunctionalProgram program;
};

std::vector<int> all_ids(const SceneGraph& s) {
  std::vector<int> ids(static_cast<std::size_t>(s.size()));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// Relation set computed by the executor's rule, for choosing anchors.
std::vector<int> related(const SceneGraph& s, Relation r, int anchor) { return compute_relation(s, r, anchor); }

std::optional<Draft> draft(const SceneGraph& s, int tmpl, Rng& rng) {
  const auto& v = *s.vocab;
  const auto ids = all_ids(s);
  Builder b;
  Draft d;
  auto rel = [&] { return kAllRelations[rng.below(4)]; };
  auto pick_kind = [&](const Description& exclude) {
    std::vector<AttributeKind> ks;
    for (auto k : kKinds) {
      bool used = false;
      for (const auto& f : exclude.filters) used = used || f.kind == k;
      if (!used) ks.push_back(k);
    }
    if (ks.empty()) ks.assign(std::begin(kKinds), std::end(kKinds));
    return ks[rng.below(ks.size())];
  };

  switch (tmpl) {
    case 0: {  // how many D are there ?
      auto dd = loose_description(s, ids, rng);
      int x = b.filters(b.add("scene", {}), dd, v);
      b.add("count", {x});
      d.words = {"how", "many"};
      append(d.words, phrase(dd, v, true));
      append(d.words, {"are", "there", "?"});
      break;
    }
    case 1: {  // are there any D ?
      auto dd = loose_description(s, ids, rng);
      int x = b.filters(b.add("scene", {}), dd, v);
      b.add("exist", {x});
      d.words = {"are", "there", "any"};
      append(d.words, phrase(dd, v, true));
      d.words.push_back("?");
      break;
    }
    case 2: {  // what K is the U ?
      const int t = ids[rng.below(ids.size())];
      auto u = unique_description(s, ids, t, rng);
      if (!u) return std::nullopt;
      const auto k = pick_kind(*u);
      int x = b.add("unique", {b.filters(b.add("scene", {}), *u, v)});
      b.add("query_" + suffix(k), {x});
      d.words = {"what", attribute_kind_name(k), "is", "the"};
      append(d.words, phrase(*u, v, false));
      d.words.push_back("?");
      break;
    }
    case 3:    // what K is the D2 REL the U ?
    case 4:    // how many D2 are REL the U ?
    case 5: {  // are there any D2 REL the U ?
      const int t = ids[rng.below(ids.size())];
      auto u = unique_description(s, ids, t, rng);
      if (!u) return std::nullopt;
      const Relation r = rel();
      const auto set = related(s, r, t);
      int anchor = b.add("unique", {b.filters(b.add("scene", {}), *u, v)});
      int rs = b.add("relate", {anchor}, {relation_name(r)});
      if (tmpl == 3) {
        if (set.empty()) return std::nullopt;
        const int t2 = set[rng.below(set.size())];
        auto u2 = unique_description(s, set, t2, rng);
        if (!u2) return std::nullopt;
        const auto k = pick_kind(*u2);
        int x = b.add("unique", {b.filters(rs, *u2, v)});
        b.add("query_" + suffix(k), {x});
        d.words = {"what", attribute_kind_name(k), "is", "the"};
        append(d.words, phrase(*u2, v, false));
        append(d.words, {"that", "is"});
        append(d.words, relation_words(r));
        d.words.push_back("the");
        append(d.words, phrase(*u, v, false));
        d.words.push_back("?");
      } else {
        auto dd = loose_description(s, set, rng);
        int x = b.filters(rs, dd, v);
        b.add(tmpl == 4 ? "count" : "exist", {x});
        d.words = tmpl == 4 ? std::vector<std::string>{"how", "many"} : std::vector<std::string>{"are", "there", "any"};
        append(d.words, phrase(dd, v, true));
        if (tmpl == 4) d.words.push_back("are");
        append(d.words, relation_words(r));
        d.words.push_back("the");
        append(d.words, phrase(*u, v, false));
        d.words.push_back("?");
      }
      break;
    }
    case 6: {  // how many other things are the same K as the U ?
      const int t = ids[rng.below(ids.size())];
      auto u = unique_description(s, ids, t, rng);
      if (!u) return std::nullopt;
      const auto k = pick_kind(*u);
      int x = b.add("unique", {b.filters(b.add("scene", {}), *u, v)});
      b.add("count", {b.add("same_" + suffix(k), {x})});
      d.words = {"how", "many", "other", "things", "are", "the", "same", attribute_kind_name(k), "as", "the"};
      append(d.words, phrase(*u, v, false));
      d.words.push_back("?");
      break;
    }
    case 7: {  // are there more / fewer / an equal number of D1 than D2 ?
      auto d1 = loose_description(s, ids, rng);
      auto d2 = loose_description(s, ids, rng);
      int c1 = b.add("count", {b.filters(b.add("scene", {}), d1, v)});
      int c2 = b.add("count", {b.filters(b.add("scene", {}), d2, v)});
      const int which = static_cast<int>(rng.below(3));
      static const char* fns[] = {"greater_than", "less_than", "equal_integer"};
      b.add(fns[which], {c1, c2});
      d.words = {"are", "there"};
      if (which == 0) d.words.push_back("more");
      if (which == 1) d.words.push_back("fewer");
      if (which == 2) append(d.words, {"an", "equal", "number", "of"});
      append(d.words, phrase(d1, v, true));
      d.words.push_back(which == 2 ? "and" : "than");
      append(d.words, phrase(d2, v, true));
      d.words.push_back("?");
      break;
    }
    case 8: {  // how many things are D1 or D2 ?
      auto d1 = loose_description(s, ids, rng);
      auto d2 = loose_description(s, ids, rng);
      int a = b.filters(b.add("scene", {}), d1, v);
      int c = b.filters(b.add("scene", {}), d2, v);
      b.add("count", {b.add("union", {a, c})});
      d.words = {"how", "many", "things", "are"};
      append(d.words, phrase(d1, v, true));
      d.words.push_back("or");
      append(d.words, phrase(d2, v, true));
      d.words.push_back("?");
      break;
    }
    case 9: {  // how many D2 are REL1 the U1 and REL2 the U2 ?
      const int t1 = ids[rng.below(ids.size())];
      const int t2 = ids[rng.below(ids.size())];
      if (t1 == t2) return std::nullopt;
      auto u1 = unique_description(s, ids, t1, rng);
      auto u2 = unique_description(s, ids, t2, rng);
      if (!u1 || !u2) return std::nullopt;
      const Relation r1 = rel();
      const Relation r2 = rel();
      int a1 = b.add("unique", {b.filters(b.add("scene", {}), *u1, v)});
      int s1 = b.add("relate", {a1}, {relation_name(r1)});
      int a2 = b.add("unique", {b.filters(b.add("scene", {}), *u2, v)});
      int s2 = b.add("relate", {a2}, {relation_name(r2)});
      int both = b.add("intersect", {s1, s2});
      auto dd = loose_description(s, ids, rng);
      b.add("count", {b.filters(both, dd, v)});
      d.words = {"how", "many"};
      append(d.words, phrase(dd, v, true));
      d.words.push_back("are");
      append(d.words, relation_words(r1));
      d.words.push_back("the");
      append(d.words, phrase(*u1, v, false));
      d.words.push_back("and");
      append(d.words, relation_words(r2));
      d.words.push_back("the");
      append(d.words, phrase(*u2, v, false));
      d.words.push_back("?");
      break;
    }
    case 10: {  // is the U1 the same K as the U2 ?
      const int t1 = ids[rng.below(ids.size())];
      const int t2 = ids[rng.below(ids.size())];
      if (t1 == t2) return std::nullopt;
      auto u1 = unique_description(s, ids, t1, rng);
      auto u2 = unique_description(s, ids, t2, rng);
      if (!u1 || !u2) return std::nullopt;
      const auto k = kKinds[rng.below(4)];
      int q1 = b.add("query_" + suffix(k), {b.add("unique", {b.filters(b.add("scene", {}), *u1, v)})});
      int q2 = b.add("query_" + suffix(k), {b.add("unique", {b.filters(b.add("scene", {}), *u2, v)})});
      b.add("equal_" + suffix(k), {q1, q2});
      d.words = {"is", "the"};
      append(d.words, phrase(*u1, v, false));
      append(d.words, {"the", "same", attribute_kind_name(k), "as", "the"});
      append(d.words, phrase(*u2, v, false));
      d.words.push_back("?");
      break;
    }
    default: {  // what K is the D3 REL2 the D2 REL1 the U ?
      const int t = ids[rng.below(ids.size())];
      auto u = unique_description(s, ids, t, rng);
      if (!u) return std::nullopt;
      const Relation r1 = rel();
      const auto set1 = related(s, r1, t);
      if (set1.empty()) return std::nullopt;
      const int m = set1[rng.below(set1.size())];
      auto um = unique_description(s, set1, m, rng);
      if (!um) return std::nullopt;
      const Relation r2 = rel();
      const auto set2 = related(s, r2, m);
      if (set2.empty()) return std::nullopt;
      const int e = set2[rng.below(set2.size())];
      auto ue = unique_description(s, set2, e, rng);
      if (!ue) return std::nullopt;
      const auto k = pick_kind(*ue);
      int a = b.add("unique", {b.filters(b.add("scene", {}), *u, v)});
      int mid = b.add("unique", {b.filters(b.add("relate", {a}, {relation_name(r1)}), *um, v)});
      int end = b.add("unique", {b.filters(b.add("relate", {mid}, {relation_name(r2)}), *ue, v)});
      b.add("query_" + suffix(k), {end});
      d.words = {"what", attribute_kind_name(k), "is", "the"};
      append(d.words, phrase(*ue, v, false));
      append(d.words, {"that", "is"});
      append(d.words, relation_words(r2));
      d.words.push_back("the");
      append(d.words, phrase(*um, v, false));
      append(d.words, {"that", "is"});
      append(d.words, relation_words(r1));
      d.words.push_back("the");
      append(d.words, phrase(*u, v, false));
      d.words.push_back("?");
      break;
    }
  }
  d.program = std::move(b.program);
  return d;
}

constexpr int kTemplates = 12;

}  // namespace

std::vector<QuestionRecord> generate_questions(const SceneGraph& scene, int count, Rng& rng) {
  std::vector<QuestionRecord> out;
  std::set<std::string> seen;
  const int max_tries = count * 40;
  for (int tries = 0; tries < max_tries && static_cast<int>(out.size()) < count; ++tries) {
    auto d = draft(scene, static_cast<int>(rng.below(kTemplates)), rng);
    if (!d || d->words.size() > static_cast<std::size_t>(kQuestionTokens)) continue;
    if (!validate(d->program, *scene.vocab).empty()) continue;
    const Answer a = execute(d->program, scene);
    if (!a.determined()) continue;
    if (!seen.insert(join_question(d->words)).second) continue;
    out.push_back(QuestionRecord{std::move(d->words), std::move(d->program), a.to_string(), scene.image_index});
  }
  return out;
}

std::vector<QuestionRecord> generate_corpus_questions(std::span<const SceneGraph> scenes, int per_scene,
                                                      std::uint64_t seed) {
  std::vector<QuestionRecord> out;
  for (const auto& s : scenes) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s.image_index)));
    auto qs = generate_questions(s, per_scene, rng);
    out.insert(out.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  return out;
}

}  // namespace advgame
