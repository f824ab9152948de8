#pragma once

#include <string>
#include <vector>

#include "advgame/program.hpp"
#include "advgame/scene.hpp"

namespace advgame {

enum class MarginMode {
  // Reject a pair only when it sits inside the margin band on every axis.
  kAllAxes,
  // Reject a pair that sits inside the band on any axis (strict reading).
  kAnyAxis,
};

struct SceneConstraintConfig {
  double min_center_dist = 0.25;
  double direction_margin = 0.4;
  MarginMode margin_mode = MarginMode::kAllAxes;
  // Minimum unoccluded fraction of an object's footprint disc.
  double min_visibility = 0.5;
  double large_radius = 0.7;
  double small_radius_ratio = 0.4;
  double bounds = 3.0;
  int min_objects = kMinObjects;
  int max_objects = kMaxObjects;
  bool enforce_bounds = true;

  // Every check disabled; any displacement passes.
  static SceneConstraintConfig permissive();
  // Throws Error(kInvalidConfig) listing every negative threshold.
  void validate() const;
};

struct Violation {
  enum class Kind { kBounds, kDistance, kMargin, kVisibility, kCount };
  Kind kind;
  std::vector<int> objects;
  double measured = 0.0;
  double threshold = 0.0;
};

const char* violation_kind_name(Violation::Kind kind);

struct SceneCheck {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

// Runs every check and reports every violation.
SceneCheck check_scene(const SceneGraph& scene, const SceneConstraintConfig& cfg);

// Same verdict as check_scene(...).valid(), stopping at the first violation.
bool scene_is_valid(const SceneGraph& scene, const SceneConstraintConfig& cfg);

double object_radius(const SceneGraph& scene, int obj, const SceneConstraintConfig& cfg);

// Fraction of the object's disc not covered by the discs of objects strictly
// in front of it, or sharing its center. 1.0 with no overlap.
double visibility_proxy(const SceneGraph& scene, int obj, const SceneConstraintConfig& cfg = {});

bool check_question_relevance(const FunctionalProgram& program, const SceneGraph& new_scene,
                              const Answer& gt);

}  // namespace advgame
