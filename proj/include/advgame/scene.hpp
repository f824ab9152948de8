#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace advgame {

inline constexpr int kMaxObjects = 10;
inline constexpr int kMinObjects = 3;
inline constexpr int kAttributeSlots = 6;  // x, y, shape, color, size, material
inline constexpr int kObjectTokens = kMaxObjects * kAttributeSlots;
inline constexpr int kQuestionTokens = 50;
inline constexpr int kTotalTokens = kObjectTokens + kQuestionTokens;
inline constexpr int kPadToken = -1;

enum class AttributeKind { kShape, kColor, kSize, kMaterial };

const char* attribute_kind_name(AttributeKind kind);

struct AttributeVocab {
  std::vector<std::string> shapes;
  std::vector<std::string> colors;
  std::vector<std::string> sizes;
  std::vector<std::string> materials;

  // cube/sphere/cylinder, the 8 CLEVR colors, small/large, rubber/metal.
  static AttributeVocab clevr();
  static std::shared_ptr<const AttributeVocab> shared_clevr();

  const std::vector<std::string>& names(AttributeKind kind) const;
  std::optional<int> index_of(AttributeKind kind, std::string_view name) const;
  // Kind whose list contains `name`, if any.
  std::optional<AttributeKind> kind_of(std::string_view name) const;

  // Throws Error(kInvalidConfig) on empty lists or duplicate names.
  void validate() const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a);

enum class Relation { kLeft, kRight, kFront, kBehind };

inline constexpr std::array<Relation, 4> kAllRelations = {Relation::kLeft, Relation::kRight,
                                                          Relation::kFront, Relation::kBehind};

const char* relation_name(Relation r);
std::optional<Relation> parse_relation(std::string_view name);

struct Directions {
  Vec2 right{1.0, 0.0};
  Vec2 behind{0.0, 1.0};

  Vec2 left() const { return -right; }
  Vec2 front() const { return -behind; }
  Vec2 of(Relation r) const;
};

struct SceneObject {
  int shape = 0;
  int color = 0;
  int size = 0;
  int material = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;  // carried for file round-trips, never used
  double rotation = 0.0;

  Vec2 position() const { return {x, y}; }
  int attribute(AttributeKind kind) const;
};

struct SceneGraph {
  std::vector<SceneObject> objects;
  Directions directions;
  std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr();
  int image_index = 0;
  std::string image_filename;

  int size() const { return static_cast<int>(objects.size()); }
  const std::string& name_of(int obj, AttributeKind kind) const;
};

// Structural problems of a scene as read from disk: out-of-range vocab
// indices, fewer than 3 / more than 10 objects, rotation outside [0, 360).
std::vector<std::string> scene_problems(const SceneGraph& scene);

struct GridSpec {
  int bins = 7;
  double lo = -3.0;
  double hi = 3.0;

  double width() const { return (hi - lo) / bins; }
  // Bin index that corresponds to a zero displacement.
  int center() const { return bins / 2; }
  void validate() const;
};

int discretize(double coord, const GridSpec& grid);
double bin_center(int bin, const GridSpec& grid);

struct BinOffset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(BinOffset, BinOffset) = default;
};

// One entry per actor head; head i moves object i. Entries for heads
// without an object are ignored.
struct Displacement {
  std::array<std::optional<BinOffset>, kMaxObjects> moves{};

  static Displacement zero(int n_objects);
  friend bool operator==(const Displacement&, const Displacement&) = default;
};

SceneGraph apply_displacement(const SceneGraph& scene, const Displacement& d, const GridSpec& grid);

// Ids j != anchor with dot(p_j - p_anchor, direction) > 0, ascending.
std::vector<int> compute_relation(const SceneGraph& scene, Relation direction, int anchor);

// Word-level vocabulary for question tokens. Unknown words map to <unk>.
class QuestionVocab {
 public:
  // Template words plus every attribute and relation name.
  static QuestionVocab standard(const AttributeVocab& attrs);

  int encode(std::string_view word) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
};

std::vector<std::string> split_question(std::string_view text);
std::string join_question(std::span<const std::string> tokens);

struct TokenSequence {
  // Object block: slot 6*i + k is attribute k of object i (x bin, y bin,
  // shape, color, size, material). Question block follows.
  std::array<int, kTotalTokens> ids{};
  int n_objects = 0;
  int n_question = 0;

  std::span<const int> object_tokens() const { return {ids.data(), kObjectTokens}; }
  std::span<const int> question_tokens() const {
    return {ids.data() + kObjectTokens, kQuestionTokens};
  }
};

TokenSequence tokenize(const SceneGraph& scene, std::span<const std::string> question,
                       const QuestionVocab& qvocab, const GridSpec& grid);

// CLEVR scene records.
nlohmann::json scene_to_json(const SceneGraph& scene);
SceneGraph scene_from_json(const nlohmann::json& j,
                           std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());
std::vector<SceneGraph> load_scenes(const std::string& path,
                                    std::shared_ptr<const AttributeVocab> vocab = AttributeVocab::shared_clevr());
void save_scenes(const std::string& path, std::span<const SceneGraph> scenes);

}  // namespace advgame
