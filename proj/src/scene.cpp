#include "advgame/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

using nlohmann::json;

const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::kInvalidArgument: return "invalid-argument";
    case ErrorClass::kInvalidConfig: return "invalid-config";
    case ErrorClass::kParse: return "parse";
    case ErrorClass::kNotFound: return "not-found";
    case ErrorClass::kTransport: return "transport";
    case ErrorClass::kProtocol: return "protocol";
    case ErrorClass::kNumeric: return "numeric";
    case ErrorClass::kInternal: return "internal";
    case ErrorClass::kNoTranscripts: return "no-transcripts";
  }
  return "internal";
}

const char* attribute_kind_name(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::kShape: return "shape";
    case AttributeKind::kColor: return "color";
    case AttributeKind::kSize: return "size";
    case AttributeKind::kMaterial: return "material";
  }
  return "?";
}

AttributeVocab AttributeVocab::clevr() {
  return AttributeVocab{
      {"cube", "sphere", "cylinder"},
      {"gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"},
      {"small", "large"},
      {"rubber", "metal"},
  };
}

std::shared_ptr<const AttributeVocab> AttributeVocab::shared_clevr() {
  static const auto vocab = std::make_shared<const AttributeVocab>(clevr());
  return vocab;
}

const std::vector<std::string>& AttributeVocab::names(AttributeKind kind) const {
  switch (kind) {
    case AttributeKind::kShape: return shapes;
    case AttributeKind::kColor: return colors;
    case AttributeKind::kSize: return sizes;
    case AttributeKind::kMaterial: return materials;
  }
  throw Error(ErrorClass::kInternal, "bad attribute kind");
}

std::optional<int> AttributeVocab::index_of(AttributeKind kind, std::string_view name) const {
  const auto& list = names(kind);
  auto it = std::find(list.begin(), list.end(), name);
  if (it == list.end()) return std::nullopt;
  return static_cast<int>(it - list.begin());
}

std::optional<AttributeKind> AttributeVocab::kind_of(std::string_view name) const {
  for (auto kind : {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize,
                    AttributeKind::kMaterial}) {
    if (index_of(kind, name)) return kind;
  }
  return std::nullopt;
}

void AttributeVocab::validate() const {
  std::set<std::string> seen;
  for (auto kind : {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize,
                    AttributeKind::kMaterial}) {
    const auto& list = names(kind);
    if (list.empty()) {
      throw Error(ErrorClass::kInvalidConfig,
                  std::string("empty vocabulary for ") + attribute_kind_name(kind));
    }
    for (const auto& n : list) {
      if (!seen.insert(n).second) {
        throw Error(ErrorClass::kInvalidConfig, "duplicate vocabulary name '" + n + "'");
      }
    }
  }
}

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::kLeft: return "left";
    case Relation::kRight: return "right";
    case Relation::kFront: return "front";
    case Relation::kBehind: return "behind";
  }
  return "?";
}

std::optional<Relation> parse_relation(std::string_view name) {
  for (auto r : kAllRelations) {
    if (name == relation_name(r)) return r;
  }
  return std::nullopt;
}

Vec2 Directions::of(Relation r) const {
  switch (r) {
    case Relation::kLeft: return left();
    case Relation::kRight: return right;
    case Relation::kFront: return front();
    case Relation::kBehind: return behind;
  }
  throw Error(ErrorClass::kInvalidArgument, "unknown direction");
}

int SceneObject::attribute(AttributeKind kind) const {
  switch (kind) {
    case AttributeKind::kShape: return shape;
    case AttributeKind::kColor: return color;
    case AttributeKind::kSize: return size;
    case AttributeKind::kMaterial: return material;
  }
  return -1;
}

const std::string& SceneGraph::name_of(int obj, AttributeKind kind) const {
  return vocab->names(kind).at(static_cast<std::size_t>(objects.at(obj).attribute(kind)));
}

std::vector<std::string> scene_problems(const SceneGraph& scene) {
  std::vector<std::string> problems;
  if (scene.size() < kMinObjects || scene.size() > kMaxObjects) {
    problems.push_back("scene has " + std::to_string(scene.size()) +
                       " objects; expected between 3 and 10");
  }
  for (int i = 0; i < scene.size(); ++i) {
    const auto& o = scene.objects[i];
    for (auto kind : {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize,
                      AttributeKind::kMaterial}) {
      int v = o.attribute(kind);
      if (v < 0 || v >= static_cast<int>(scene.vocab->names(kind).size())) {
        problems.push_back("object " + std::to_string(i) + " has invalid " +
                           attribute_kind_name(kind) + " index " + std::to_string(v));
      }
    }
    if (!(o.rotation >= 0.0 && o.rotation < 360.0)) {
      problems.push_back("object " + std::to_string(i) + " rotation outside [0, 360)");
    }
    if (!std::isfinite(o.x) || !std::isfinite(o.y)) {
      problems.push_back("object " + std::to_string(i) + " has a non-finite position");
    }
  }
  return problems;
}

void GridSpec::validate() const {
  if (bins < 2) throw Error(ErrorClass::kInvalidConfig, "grid needs at least 2 bins per axis");
  if (!(hi > lo)) throw Error(ErrorClass::kInvalidConfig, "grid upper bound must exceed lower bound");
}

int discretize(double coord, const GridSpec& grid) {
  if (!std::isfinite(coord)) {
    throw Error(ErrorClass::kInvalidArgument, "cannot discretize a non-finite coordinate");
  }
  auto bin = static_cast<long long>(std::floor((coord - grid.lo) / grid.width()));
  return static_cast<int>(std::clamp<long long>(bin, 0, grid.bins - 1));
}

double bin_center(int bin, const GridSpec& grid) {
  if (bin < 0 || bin >= grid.bins) {
    throw Error(ErrorClass::kInvalidArgument, "bin " + std::to_string(bin) + " out of range");
  }
  return grid.lo + (bin + 0.5) * grid.width();
}

Displacement Displacement::zero(int n_objects) {
  Displacement d;
  for (int i = 0; i < n_objects && i < kMaxObjects; ++i) d.moves[i] = BinOffset{};
  return d;
}

SceneGraph apply_displacement(const SceneGraph& scene, const Displacement& d, const GridSpec& grid) {
  SceneGraph out = scene;
  const double w = grid.width();
  for (int i = 0; i < out.size() && i < kMaxObjects; ++i) {
    if (!d.moves[i]) continue;
    out.objects[i].x += d.moves[i]->dx * w;
    out.objects[i].y += d.moves[i]->dy * w;
  }
  return out;
}

std::vector<int> compute_relation(const SceneGraph& scene, Relation direction, int anchor) {
  if (anchor < 0 || anchor >= scene.size()) {
    throw Error(ErrorClass::kInvalidArgument, "relation anchor " + std::to_string(anchor) +
                                                  " does not exist");
  }
  const Vec2 dir = scene.directions.of(direction);
  const Vec2 origin = scene.objects[anchor].position();
  std::vector<int> out;
  for (int j = 0; j < scene.size(); ++j) {
    if (j == anchor) continue;
    if (dot(scene.objects[j].position() - origin, dir) > 0.0) out.push_back(j);
  }
  return out;
}

namespace {

const std::vector<std::string>& template_words() {
  static const std::vector<std::string> words = {
      "<unk>", "?", ";", ",", "a", "an", "the", "is", "are", "there", "any", "other", "things",
      "thing", "object", "objects", "of", "to", "as", "same", "what", "how", "many", "number",
      "does", "do", "it", "that", "has", "have", "size", "color", "material", "shape", "made",
      "either", "or", "and", "both", "than", "more", "fewer", "equal", "greater", "less", "left",
      "right", "front", "behind", "in", "on", "side", "is", "what's", "its", "which", "ball",
      "block", "cylinders", "cubes", "spheres", "balls", "blocks", "shiny", "matte", "big",
      "tiny", "metallic",
  };
  return words;
}

}  // namespace

QuestionVocab QuestionVocab::standard(const AttributeVocab& attrs) {
  QuestionVocab v;
  std::set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (seen.insert(w).second) v.words_.push_back(w);
  };
  for (const auto& w : template_words()) add(w);
  for (auto kind : {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize,
                    AttributeKind::kMaterial}) {
    for (const auto& w : attrs.names(kind)) {
      add(w);
      add(w + "s");
    }
  }
  return v;
}

int QuestionVocab::encode(std::string_view word) const {
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto it = std::find(words_.begin(), words_.end(), lower);
  return it == words_.end() ? 0 : static_cast<int>(it - words_.begin());
}

std::vector<std::string> split_question(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '?' || c == ';' || c == ',') {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::string join_question(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

TokenSequence tokenize(const SceneGraph& scene, std::span<const std::string> question,
                       const QuestionVocab& qvocab, const GridSpec& grid) {
  if (question.size() > static_cast<std::size_t>(kQuestionTokens)) {
    throw Error(ErrorClass::kInvalidArgument,
                "question has " + std::to_string(question.size()) + " tokens; limit is 50");
  }
  if (scene.size() > kMaxObjects) {
    throw Error(ErrorClass::kInvalidArgument, "scene has more than 10 objects");
  }
  TokenSequence seq;
  seq.ids.fill(kPadToken);
  seq.n_objects = scene.size();
  seq.n_question = static_cast<int>(question.size());
  for (int i = 0; i < scene.size(); ++i) {
    const auto& o = scene.objects[i];
    int* slot = seq.ids.data() + i * kAttributeSlots;
    slot[0] = discretize(o.x, grid);
    slot[1] = discretize(o.y, grid);
    slot[2] = o.shape;
    slot[3] = o.color;
    slot[4] = o.size;
    slot[5] = o.material;
  }
  for (std::size_t q = 0; q < question.size(); ++q) {
    seq.ids[kObjectTokens + q] = qvocab.encode(question[q]);
  }
  return seq;
}

namespace {

Vec2 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() < 2) throw Error(ErrorClass::kParse, "direction must be an array");
  return {j[0].get<double>(), j[1].get<double>()};
}

int attr_index(const json& obj, const char* key, AttributeKind kind, const AttributeVocab& vocab) {
  if (!obj.contains(key)) throw Error(ErrorClass::kParse, std::string("object missing '") + key + "'");
  auto name = obj.at(key).get<std::string>();
  auto idx = vocab.index_of(kind, name);
  if (!idx) throw Error(ErrorClass::kParse, "unknown " + std::string(key) + " '" + name + "'");
  return *idx;
}

}  // namespace

json scene_to_json(const SceneGraph& scene) {
  json objects = json::array();
  for (int i = 0; i < scene.size(); ++i) {
    const auto& o = scene.objects[i];
    objects.push_back({
        {"shape", scene.name_of(i, AttributeKind::kShape)},
        {"color", scene.name_of(i, AttributeKind::kColor)},
        {"size", scene.name_of(i, AttributeKind::kSize)},
        {"material", scene.name_of(i, AttributeKind::kMaterial)},
        {"3d_coords", {o.x, o.y, o.z}},
        {"rotation", o.rotation},
    });
  }
  const auto& d = scene.directions;
  json j = {
      {"image_index", scene.image_index},
      {"objects", std::move(objects)},
      {"directions",
       {
           {"right", {d.right.x, d.right.y, 0.0}},
           {"left", {d.left().x, d.left().y, 0.0}},
           {"behind", {d.behind.x, d.behind.y, 0.0}},
           {"front", {d.front().x, d.front().y, 0.0}},
       }},
  };
  if (!scene.image_filename.empty()) j["image_filename"] = scene.image_filename;
  return j;
}

SceneGraph scene_from_json(const json& j, std::shared_ptr<const AttributeVocab> vocab) {
  try {
    SceneGraph scene;
    scene.vocab = std::move(vocab);
    scene.image_index = j.value("image_index", 0);
    scene.image_filename = j.value("image_filename", std::string{});
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      obj.shape = attr_index(o, "shape", AttributeKind::kShape, *scene.vocab);
      obj.color = attr_index(o, "color", AttributeKind::kColor, *scene.vocab);
      obj.size = attr_index(o, "size", AttributeKind::kSize, *scene.vocab);
      obj.material = attr_index(o, "material", AttributeKind::kMaterial, *scene.vocab);
      const auto& c = o.at("3d_coords");
      obj.x = c.at(0).get<double>();
      obj.y = c.at(1).get<double>();
      obj.z = c.size() > 2 ? c.at(2).get<double>() : 0.0;
      obj.rotation = o.value("rotation", 0.0);
      scene.objects.push_back(obj);
    }
    if (j.contains("directions")) {
      const auto& d = j.at("directions");
      if (d.contains("right")) {
        scene.directions.right = vec_from_json(d.at("right"));
      } else if (d.contains("left")) {
        scene.directions.right = -vec_from_json(d.at("left"));
      }
      if (d.contains("behind")) {
        scene.directions.behind = vec_from_json(d.at("behind"));
      } else if (d.contains("front")) {
        scene.directions.behind = -vec_from_json(d.at("front"));
      }
    }
    return scene;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad scene record: ") + e.what());
  }
}

std::vector<SceneGraph> load_scenes(const std::string& path, std::shared_ptr<const AttributeVocab> vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open scene file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
  const json& list = j.is_array() ? j : j.at("scenes");
  std::vector<SceneGraph> scenes;
  scenes.reserve(list.size());
  for (const auto& s : list) scenes.push_back(scene_from_json(s, vocab));
  return scenes;
}

void save_scenes(const std::string& path, std::span<const SceneGraph> scenes) {
  json list = json::array();
  for (const auto& s : scenes) list.push_back(scene_to_json(s));
  std::ofstream out(path);
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write scene file " + path);
  out << json{{"info", {{"format", "clevr-scenes"}, {"version", "1.0"}}}, {"scenes", list}}.dump(1)
      << '\n';
}

}  // namespace advgame
