#include "advgame/enforcers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "advgame/error.hpp"

namespace advgame {

namespace {

constexpr int kVisibilityRings = 256;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Interval {
  double lo;
  double hi;
};

// Angular measure of the union of arcs, each given on [0, 2pi).
double union_length(std::vector<Interval>& arcs) {
  if (arcs.empty()) return 0.0;
  std::sort(arcs.begin(), arcs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  double total = 0.0;
  double cur_lo = arcs[0].lo;
  double cur_hi = arcs[0].hi;
  for (std::size_t i = 1; i < arcs.size(); ++i) {
    if (arcs[i].lo <= cur_hi) {
      cur_hi = std::max(cur_hi, arcs[i].hi);
    } else {
      total += cur_hi - cur_lo;
      cur_lo = arcs[i].lo;
      cur_hi = arcs[i].hi;
    }
  }
  return std::min(kTwoPi, total + (cur_hi - cur_lo));
}

void push_arc(std::vector<Interval>& arcs, double center, double half) {
  double lo = center - half;
  double hi = center + half;
  while (lo < 0.0) {
    lo += kTwoPi;
    hi += kTwoPi;
  }
  while (lo >= kTwoPi) {
    lo -= kTwoPi;
    hi -= kTwoPi;
  }
  if (hi <= kTwoPi) {
    arcs.push_back({lo, hi});
  } else {
    arcs.push_back({lo, kTwoPi});
    arcs.push_back({0.0, hi - kTwoPi});
  }
}

struct Occluder {
  Vec2 offset;  // occluder center relative to the object center
  double radius;
};

// Exact angular coverage per ring, midpoint rule over radius.
double uncovered_fraction(double radius, const std::vector<Occluder>& occluders) {
  if (occluders.empty()) return 1.0;
  const double dr = radius / kVisibilityRings;
  double visible_area = 0.0;
  std::vector<Interval> arcs;
  for (int k = 0; k < kVisibilityRings; ++k) {
    const double rho = (k + 0.5) * dr;
    arcs.clear();
    bool full = false;
    for (const auto& occ : occluders) {
      const double d = norm(occ.offset);
      if (d + rho <= occ.radius) {
        full = true;
        break;
      }
      if (rho + occ.radius <= d || rho >= d + occ.radius) continue;
      double c = (rho * rho + d * d - occ.radius * occ.radius) / (2.0 * rho * d);
      c = std::clamp(c, -1.0, 1.0);
      push_arc(arcs, std::atan2(occ.offset.y, occ.offset.x), std::acos(c));
    }
    const double covered = full ? kTwoPi : union_length(arcs);
    visible_area += (kTwoPi - covered) * rho * dr;
  }
  return std::clamp(visible_area / (std::numbers::pi * radius * radius), 0.0, 1.0);
}

std::vector<Occluder> occluders_of(const SceneGraph& scene, int obj, const SceneConstraintConfig& cfg) {
  std::vector<Occluder> out;
  const Vec2 p = scene.objects[obj].position();
  const double r = object_radius(scene, obj, cfg);
  const Vec2 front = scene.directions.front();
  for (int j = 0; j < scene.size(); ++j) {
    if (j == obj) continue;
    const Vec2 off = scene.objects[j].position() - p;
    // Coincident centers cover each other.
    if (dot(off, front) <= 0.0 && !(off.x == 0.0 && off.y == 0.0)) continue;
    const double rj = object_radius(scene, j, cfg);
    if (norm(off) >= r + rj) continue;
    out.push_back({off, rj});
  }
  return out;
}

template <class Sink>
void run_checks(const SceneGraph& scene, const SceneConstraintConfig& cfg, Sink&& sink) {
  using K = Violation::Kind;
  const int n = scene.size();
  if (n < cfg.min_objects || n > cfg.max_objects) {
    if (!sink(Violation{K::kCount, {}, static_cast<double>(n),
                        static_cast<double>(n < cfg.min_objects ? cfg.min_objects : cfg.max_objects)})) {
      return;
    }
  }
  if (cfg.enforce_bounds) {
    for (int i = 0; i < n; ++i) {
      const auto& o = scene.objects[i];
      const double extent = std::max(std::abs(o.x), std::abs(o.y));
      if (extent > cfg.bounds && !sink(Violation{K::kBounds, {i}, extent, cfg.bounds})) return;
    }
  }
  const Vec2 right = scene.directions.right;
  const Vec2 behind = scene.directions.behind;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec2 diff = scene.objects[j].position() - scene.objects[i].position();
      const double dist = norm(diff);
      if (dist < cfg.min_center_dist && !sink(Violation{K::kDistance, {i, j}, dist, cfg.min_center_dist})) {
        return;
      }
      if (cfg.direction_margin > 0.0) {
        const double sx = std::abs(dot(diff, right));
        const double sy = std::abs(dot(diff, behind));
        const bool bad = cfg.margin_mode == MarginMode::kAllAxes
                             ? (sx < cfg.direction_margin && sy < cfg.direction_margin)
                             : (sx < cfg.direction_margin || sy < cfg.direction_margin);
        const double measured =
            cfg.margin_mode == MarginMode::kAllAxes ? std::max(sx, sy) : std::min(sx, sy);
        if (bad && !sink(Violation{K::kMargin, {i, j}, measured, cfg.direction_margin})) return;
      }
    }
  }
  if (cfg.min_visibility > 0.0) {
    for (int i = 0; i < n; ++i) {
      const double v = visibility_proxy(scene, i, cfg);
      if (v < cfg.min_visibility && !sink(Violation{K::kVisibility, {i}, v, cfg.min_visibility})) return;
    }
  }
}

}  // namespace

SceneConstraintConfig SceneConstraintConfig::permissive() {
  SceneConstraintConfig cfg;
  cfg.min_center_dist = 0.0;
  cfg.direction_margin = 0.0;
  cfg.min_visibility = 0.0;
  cfg.enforce_bounds = false;
  cfg.min_objects = 0;
  cfg.max_objects = kMaxObjects;
  return cfg;
}

void SceneConstraintConfig::validate() const {
  std::vector<std::string> problems;
  auto nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0)) problems.push_back(std::string(name) + " must be nonnegative");
  };
  nonneg(min_center_dist, "min_center_dist");
  nonneg(direction_margin, "direction_margin");
  nonneg(min_visibility, "min_visibility");
  nonneg(bounds, "bounds");
  if (!(large_radius > 0.0)) problems.push_back("large_radius must be positive");
  if (!(small_radius_ratio > 0.0)) problems.push_back("small_radius_ratio must be positive");
  if (min_visibility > 1.0) problems.push_back("min_visibility must not exceed 1");
  if (min_objects < 0 || max_objects < min_objects || max_objects > kMaxObjects) {
    problems.push_back("object count range must satisfy 0 <= min_objects <= max_objects <= 10");
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kInvalidConfig, msg);
  }
}

const char* violation_kind_name(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kBounds: return "bounds";
    case Violation::Kind::kDistance: return "distance";
    case Violation::Kind::kMargin: return "margin";
    case Violation::Kind::kVisibility: return "visibility";
    case Violation::Kind::kCount: return "count";
  }
  return "?";
}

double object_radius(const SceneGraph& scene, int obj, const SceneConstraintConfig& cfg) {
  const bool small = scene.name_of(obj, AttributeKind::kSize) == "small";
  return small ? cfg.large_radius * cfg.small_radius_ratio : cfg.large_radius;
}

double visibility_proxy(const SceneGraph& scene, int obj, const SceneConstraintConfig& cfg) {
  if (obj < 0 || obj >= scene.size()) {
    throw Error(ErrorClass::kInvalidArgument, "visibility of missing object " + std::to_string(obj));
  }
  return uncovered_fraction(object_radius(scene, obj, cfg), occluders_of(scene, obj, cfg));
}

SceneCheck check_scene(const SceneGraph& scene, const SceneConstraintConfig& cfg) {
  SceneCheck result;
  run_checks(scene, cfg, [&](Violation v) {
    result.violations.push_back(std::move(v));
    return true;
  });
  return result;
}

bool scene_is_valid(const SceneGraph& scene, const SceneConstraintConfig& cfg) {
  bool valid = true;
  run_checks(scene, cfg, [&](const Violation&) {
    valid = false;
    return false;
  });
  return valid;
}

bool check_question_relevance(const FunctionalProgram& program, const SceneGraph& new_scene,
                              const Answer& gt) {
  return answer_equal(execute(program, new_scene), gt);
}

}  // namespace advgame
