#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "advgame/scene.hpp"

namespace advgame {

enum class ValueType {
  kObjectSet,
  kObject,
  kInteger,
  kBool,
  kShape,
  kColor,
  kSize,
  kMaterial,
};

const char* value_type_name(ValueType t);

// What a node's value_inputs name: nothing, an attribute value, or a relation.
enum class SideInput { kNone, kShape, kColor, kSize, kMaterial, kRelation };

struct FunctionSpec {
  std::string name;
  std::vector<ValueType> inputs;
  SideInput side = SideInput::kNone;
  ValueType output;
};

// The CLEVR function set.
class FunctionCatalog {
 public:
  static const FunctionCatalog& standard();
  const FunctionSpec* find(std::string_view name) const;
  const std::vector<FunctionSpec>& entries() const { return entries_; }

 private:
  FunctionCatalog();
  std::vector<FunctionSpec> entries_;
};

struct ProgramNode {
  std::string function;
  std::vector<int> inputs;
  std::vector<std::string> value_inputs;
};

struct FunctionalProgram {
  std::vector<ProgramNode> nodes;
  int output = -1;  // -1 means the last node

  int output_index() const { return output < 0 ? static_cast<int>(nodes.size()) - 1 : output; }
};

class Answer {
 public:
  enum class Kind { kUndetermined, kBool, kInteger, kAttribute };

  Answer() = default;
  static Answer undetermined() { return Answer(); }
  static Answer boolean(bool v);
  static Answer integer(int v);
  static Answer attribute(std::string name);

  Kind kind() const { return kind_; }
  bool determined() const { return kind_ != Kind::kUndetermined; }
  bool as_bool() const { return int_value_ != 0; }
  int as_integer() const { return int_value_; }
  const std::string& as_attribute() const { return text_; }

  // "yes" / "no" / decimal / attribute name; "undetermined" for the empty case.
  std::string to_string() const;

  // Protocol grammar: yes | no | integer 0..10 | attribute name, matched
  // case-insensitively after trimming. nullopt when out of grammar.
  static std::optional<Answer> parse(std::string_view text, const AttributeVocab& vocab);

 private:
  Kind kind_ = Kind::kUndetermined;
  int int_value_ = 0;
  std::string text_;
};

// Equality on variant and payload. Undetermined equals nothing, itself included.
bool answer_equal(const Answer& a, const Answer& b);

struct ProgramError {
  enum class Kind { kEmpty, kStructure, kUnknownFunction, kArity, kType, kVocab, kOutput };
  Kind kind;
  int node;  // -1 for whole-program problems
  std::string message;
};

std::vector<ProgramError> validate(const FunctionalProgram& program, const AttributeVocab& vocab);

// How a player perceives a scene. The default perception is the ground truth;
// flawed players substitute positions, visibility or the relation judgement.
struct Perception {
  std::vector<Vec2> positions;
  std::vector<bool> visible;
  // Given the signed projection of (other - anchor) on a direction vector,
  // decides whether `other` is in the relation set.
  std::function<bool(double)> judge;

  static Perception truth(const SceneGraph& scene);
};

Answer execute(const FunctionalProgram& program, const SceneGraph& scene);
Answer execute(const FunctionalProgram& program, const SceneGraph& scene, const Perception& perception);

// Result type of the program's output node; nullopt when invalid.
std::optional<ValueType> output_type(const FunctionalProgram& program);

// CLEVR program records: [{"function", "inputs", "value_inputs"}, ...].
nlohmann::json program_to_json(const FunctionalProgram& program);
FunctionalProgram program_from_json(const nlohmann::json& j);

}  // namespace advgame
