#include "advgame/program.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

using nlohmann::json;

const char* value_type_name(ValueType t) {
  switch (t) {
    case ValueType::kObjectSet: return "ObjectSet";
    case ValueType::kObject: return "Object";
    case ValueType::kInteger: return "Integer";
    case ValueType::kBool: return "Bool";
    case ValueType::kShape: return "Shape";
    case ValueType::kColor: return "Color";
    case ValueType::kSize: return "Size";
    case ValueType::kMaterial: return "Material";
  }
  return "?";
}

namespace {

struct AttrInfo {
  const char* suffix;
  AttributeKind kind;
  ValueType type;
  SideInput side;
};

constexpr AttrInfo kAttrs[] = {
    {"size", AttributeKind::kSize, ValueType::kSize, SideInput::kSize},
    {"color", AttributeKind::kColor, ValueType::kColor, SideInput::kColor},
    {"material", AttributeKind::kMaterial, ValueType::kMaterial, SideInput::kMaterial},
    {"shape", AttributeKind::kShape, ValueType::kShape, SideInput::kShape},
};

AttributeKind kind_for_side(SideInput side) {
  switch (side) {
    case SideInput::kShape: return AttributeKind::kShape;
    case SideInput::kColor: return AttributeKind::kColor;
    case SideInput::kSize: return AttributeKind::kSize;
    case SideInput::kMaterial: return AttributeKind::kMaterial;
    default: break;
  }
  throw Error(ErrorClass::kInternal, "side input has no attribute kind");
}

AttributeKind kind_for_type(ValueType t) {
  switch (t) {
    case ValueType::kShape: return AttributeKind::kShape;
    case ValueType::kColor: return AttributeKind::kColor;
    case ValueType::kSize: return AttributeKind::kSize;
    case ValueType::kMaterial: return AttributeKind::kMaterial;
    default: break;
  }
  throw Error(ErrorClass::kInternal, "value type is not an attribute");
}

bool is_answer_type(ValueType t) {
  return t != ValueType::kObjectSet && t != ValueType::kObject;
}

}  // namespace

FunctionCatalog::FunctionCatalog() {
  using V = ValueType;
  entries_.push_back({"scene", {}, SideInput::kNone, V::kObjectSet});
  for (const auto& a : kAttrs) {
    entries_.push_back({std::string("filter_") + a.suffix, {V::kObjectSet}, a.side, V::kObjectSet});
  }
  entries_.push_back({"unique", {V::kObjectSet}, SideInput::kNone, V::kObject});
  entries_.push_back({"relate", {V::kObject}, SideInput::kRelation, V::kObjectSet});
  for (const auto& a : kAttrs) {
    entries_.push_back({std::string("same_") + a.suffix, {V::kObject}, SideInput::kNone, V::kObjectSet});
  }
  entries_.push_back({"count", {V::kObjectSet}, SideInput::kNone, V::kInteger});
  entries_.push_back({"exist", {V::kObjectSet}, SideInput::kNone, V::kBool});
  for (const auto& a : kAttrs) {
    entries_.push_back({std::string("query_") + a.suffix, {V::kObject}, SideInput::kNone, a.type});
  }
  entries_.push_back({"equal_integer", {V::kInteger, V::kInteger}, SideInput::kNone, V::kBool});
  entries_.push_back({"less_than", {V::kInteger, V::kInteger}, SideInput::kNone, V::kBool});
  entries_.push_back({"greater_than", {V::kInteger, V::kInteger}, SideInput::kNone, V::kBool});
  for (const auto& a : kAttrs) {
    entries_.push_back({std::string("equal_") + a.suffix, {a.type, a.type}, SideInput::kNone, V::kBool});
  }
  entries_.push_back({"union", {V::kObjectSet, V::kObjectSet}, SideInput::kNone, V::kObjectSet});
  entries_.push_back({"intersect", {V::kObjectSet, V::kObjectSet}, SideInput::kNone, V::kObjectSet});
}

const FunctionCatalog& FunctionCatalog::standard() {
  static const FunctionCatalog catalog;
  return catalog;
}

const FunctionSpec* FunctionCatalog::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

Answer Answer::boolean(bool v) {
  Answer a;
  a.kind_ = Kind::kBool;
  a.int_value_ = v ? 1 : 0;
  return a;
}

Answer Answer::integer(int v) {
  Answer a;
  a.kind_ = Kind::kInteger;
  a.int_value_ = v;
  return a;
}

Answer Answer::attribute(std::string name) {
  Answer a;
  a.kind_ = Kind::kAttribute;
  a.text_ = std::move(name);
  return a;
}

std::string Answer::to_string() const {
  switch (kind_) {
    case Kind::kUndetermined: return "undetermined";
    case Kind::kBool: return int_value_ ? "yes" : "no";
    case Kind::kInteger: return std::to_string(int_value_);
    case Kind::kAttribute: return text_;
  }
  return "undetermined";
}

std::optional<Answer> Answer::parse(std::string_view text, const AttributeVocab& vocab) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return std::nullopt;
  auto end = text.find_last_not_of(" \t\r\n");
  std::string s(text.substr(begin, end - begin + 1));
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "yes") return boolean(true);
  if (s == "no") return boolean(false);
  if (std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v > kMaxObjects) return std::nullopt;
    return integer(v);
  }
  if (vocab.kind_of(s)) return attribute(s);
  return std::nullopt;
}

bool answer_equal(const Answer& a, const Answer& b) {
  if (!a.determined() || !b.determined()) return false;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Answer::Kind::kBool:
    case Answer::Kind::kInteger: return a.as_integer() == b.as_integer();
    case Answer::Kind::kAttribute: return a.as_attribute() == b.as_attribute();
    case Answer::Kind::kUndetermined: return false;
  }
  return false;
}

std::vector<ProgramError> validate(const FunctionalProgram& program, const AttributeVocab& vocab) {
  using K = ProgramError::Kind;
  std::vector<ProgramError> errors;
  if (program.nodes.empty()) {
    errors.push_back({K::kEmpty, -1, "program has no nodes"});
    return errors;
  }
  const auto& catalog = FunctionCatalog::standard();
  std::vector<std::optional<ValueType>> types(program.nodes.size());
  for (std::size_t i = 0; i < program.nodes.size(); ++i) {
    const auto& node = program.nodes[i];
    const int idx = static_cast<int>(i);
    if (i == 0 && node.function != "scene") {
      errors.push_back({K::kStructure, 0, "node 0 must be 'scene'"});
    }
    const auto* spec = catalog.find(node.function);
    if (!spec) {
      errors.push_back({K::kUnknownFunction, idx, "unknown function '" + node.function + "'"});
      continue;
    }
    if (node.inputs.size() != spec->inputs.size()) {
      errors.push_back({K::kArity, idx,
                        node.function + " takes " + std::to_string(spec->inputs.size()) +
                            " inputs, got " + std::to_string(node.inputs.size())});
    }
    const std::size_t want_side = spec->side == SideInput::kNone ? 0 : 1;
    if (node.value_inputs.size() != want_side) {
      errors.push_back({K::kArity, idx,
                        node.function + " takes " + std::to_string(want_side) +
                            " value inputs, got " + std::to_string(node.value_inputs.size())});
    } else if (want_side == 1) {
      const auto& v = node.value_inputs[0];
      if (spec->side == SideInput::kRelation) {
        if (!parse_relation(v)) errors.push_back({K::kVocab, idx, "unknown relation '" + v + "'"});
      } else if (!vocab.index_of(kind_for_side(spec->side), v)) {
        errors.push_back({K::kVocab, idx,
                          "'" + v + "' is not a known " +
                              attribute_kind_name(kind_for_side(spec->side))});
      }
    }
    bool inputs_ok = true;
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const int src = node.inputs[k];
      if (src < 0 || src >= idx) {
        errors.push_back({K::kStructure, idx,
                          "input " + std::to_string(src) + " does not reference an earlier node"});
        inputs_ok = false;
        continue;
      }
      if (k < spec->inputs.size() && types[src] && *types[src] != spec->inputs[k]) {
        errors.push_back({K::kType, idx,
                          node.function + " input " + std::to_string(k) + " expects " +
                              value_type_name(spec->inputs[k]) + ", got " +
                              value_type_name(*types[src])});
        inputs_ok = false;
      }
    }
    if (inputs_ok) types[i] = spec->output;
  }
  const int out = program.output_index();
  if (out < 0 || out >= static_cast<int>(program.nodes.size())) {
    errors.push_back({K::kOutput, -1, "output index out of range"});
  } else if (types[out] && !is_answer_type(*types[out])) {
    errors.push_back({K::kOutput, out,
                      std::string("output node yields ") + value_type_name(*types[out]) +
                          ", not an answer"});
  }
  return errors;
}

std::optional<ValueType> output_type(const FunctionalProgram& program) {
  const int out = program.output_index();
  if (out < 0 || out >= static_cast<int>(program.nodes.size())) return std::nullopt;
  const auto* spec = FunctionCatalog::standard().find(program.nodes[out].function);
  if (!spec) return std::nullopt;
  return spec->output;
}

Perception Perception::truth(const SceneGraph& scene) {
  Perception p;
  p.positions.reserve(scene.objects.size());
  for (const auto& o : scene.objects) p.positions.push_back(o.position());
  p.visible.assign(scene.objects.size(), true);
  p.judge = [](double projection) { return projection > 0.0; };
  return p;
}

namespace {

struct Value {
  ValueType type = ValueType::kObjectSet;
  std::vector<int> set;
  int scalar = 0;  // object id, integer, bool, or attribute index
};

[[noreturn]] void internal(const std::string& msg) {
  throw Error(ErrorClass::kInternal, "executor: " + msg);
}

}  // namespace

Answer execute(const FunctionalProgram& program, const SceneGraph& scene) {
  return execute(program, scene, Perception::truth(scene));
}

Answer execute(const FunctionalProgram& program, const SceneGraph& scene, const Perception& perception) {
  const auto& catalog = FunctionCatalog::standard();
  const auto& vocab = *scene.vocab;
  const int n = scene.size();
  std::vector<Value> values(program.nodes.size());

  for (std::size_t i = 0; i < program.nodes.size(); ++i) {
    const auto& node = program.nodes[i];
    const auto* spec = catalog.find(node.function);
    if (!spec) internal("unknown function '" + node.function + "'");
    if (node.inputs.size() != spec->inputs.size()) internal("arity mismatch at " + node.function);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      int src = node.inputs[k];
      if (src < 0 || src >= static_cast<int>(i) || values[src].type != spec->inputs[k]) {
        internal("type mismatch at node " + std::to_string(i));
      }
    }
    auto in = [&](std::size_t k) -> const Value& { return values[node.inputs[k]]; };
    Value out;
    out.type = spec->output;
    const std::string& fn = node.function;

    if (fn == "scene") {
      for (int j = 0; j < n; ++j) {
        if (perception.visible[j]) out.set.push_back(j);
      }
    } else if (fn.starts_with("filter_")) {
      auto kind = kind_for_side(spec->side);
      auto want = vocab.index_of(kind, node.value_inputs.at(0));
      if (!want) internal("unknown filter value");
      for (int j : in(0).set) {
        if (perception.visible[j] && scene.objects[j].attribute(kind) == *want) out.set.push_back(j);
      }
    } else if (fn == "unique") {
      if (in(0).set.size() != 1) return Answer::undetermined();
      out.scalar = in(0).set.front();
    } else if (fn == "relate") {
      auto rel = parse_relation(node.value_inputs.at(0));
      if (!rel) internal("unknown relation");
      const Vec2 dir = scene.directions.of(*rel);
      const int anchor = in(0).scalar;
      const Vec2 origin = perception.positions[anchor];
      for (int j = 0; j < n; ++j) {
        if (j == anchor || !perception.visible[j]) continue;
        if (perception.judge(dot(perception.positions[j] - origin, dir))) out.set.push_back(j);
      }
    } else if (fn.starts_with("same_")) {
      auto kind = AttributeKind::kShape;
      for (const auto& a : kAttrs) {
        if (fn.compare(5, std::string::npos, a.suffix) == 0) kind = a.kind;
      }
      const int anchor = in(0).scalar;
      const int want = scene.objects[anchor].attribute(kind);
      for (int j = 0; j < n; ++j) {
        if (j != anchor && perception.visible[j] && scene.objects[j].attribute(kind) == want) {
          out.set.push_back(j);
        }
      }
    } else if (fn == "count") {
      out.scalar = static_cast<int>(in(0).set.size());
    } else if (fn == "exist") {
      out.scalar = in(0).set.empty() ? 0 : 1;
    } else if (fn.starts_with("query_")) {
      out.scalar = scene.objects[in(0).scalar].attribute(kind_for_type(spec->output));
    } else if (fn == "equal_integer") {
      out.scalar = in(0).scalar == in(1).scalar;
    } else if (fn == "less_than") {
      out.scalar = in(0).scalar < in(1).scalar;
    } else if (fn == "greater_than") {
      out.scalar = in(0).scalar > in(1).scalar;
    } else if (fn.starts_with("equal_")) {
      out.scalar = in(0).scalar == in(1).scalar;
    } else if (fn == "union") {
      std::set_union(in(0).set.begin(), in(0).set.end(), in(1).set.begin(), in(1).set.end(),
                     std::back_inserter(out.set));
    } else if (fn == "intersect") {
      std::set_intersection(in(0).set.begin(), in(0).set.end(), in(1).set.begin(),
                            in(1).set.end(), std::back_inserter(out.set));
    } else {
      internal("no semantics for '" + fn + "'");
    }
    values[i] = std::move(out);
  }

  const int idx = program.output_index();
  if (idx < 0 || idx >= static_cast<int>(values.size())) internal("output index out of range");
  const Value& result = values[idx];
  switch (result.type) {
    case ValueType::kInteger: return Answer::integer(result.scalar);
    case ValueType::kBool: return Answer::boolean(result.scalar != 0);
    case ValueType::kShape:
    case ValueType::kColor:
    case ValueType::kSize:
    case ValueType::kMaterial:
      return Answer::attribute(vocab.names(kind_for_type(result.type)).at(result.scalar));
    default: internal("program output is not an answer");
  }
}

json program_to_json(const FunctionalProgram& program) {
  json nodes = json::array();
  for (const auto& n : program.nodes) {
    nodes.push_back({{"function", n.function}, {"inputs", n.inputs}, {"value_inputs", n.value_inputs}});
  }
  return nodes;
}

FunctionalProgram program_from_json(const json& j) {
  try {
    FunctionalProgram p;
    for (const auto& n : j) {
      ProgramNode node;
      node.function = n.contains("function") ? n.at("function").get<std::string>()
                                             : n.at("type").get<std::string>();
      node.inputs = n.value("inputs", std::vector<int>{});
      if (n.contains("value_inputs")) {
        node.value_inputs = n.at("value_inputs").get<std::vector<std::string>>();
      } else if (n.contains("side_inputs")) {
        node.value_inputs = n.at("side_inputs").get<std::vector<std::string>>();
      }
      p.nodes.push_back(std::move(node));
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad program record: ") + e.what());
  }
}

}  // namespace advgame
