#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "advgame/enforcers.hpp"
#include "advgame/error.hpp"
#include "advgame/generator.hpp"
#include "advgame/rng.hpp"
#include "fixtures.hpp"

using namespace advgame;
using advgame::testing::make_scene;
using advgame::testing::program;

namespace {

SceneConstraintConfig distance_only() {
  SceneConstraintConfig c = SceneConstraintConfig::permissive();
  c.min_center_dist = 0.25;
  return c;
}

bool has(const SceneCheck& c, Violation::Kind k) {
  for (const auto& v : c.violations) {
    if (v.kind == k) return true;
  }
  return false;
}

// The generator's margin loop, written out over the four cardinal
// directions: a direction "separates" a pair when the projection is at
// least the margin.
bool margin_rejects(Vec2 a, Vec2 b, double margin, MarginMode mode) {
  const std::array<Vec2, 4> dirs = {Vec2{-1, 0}, Vec2{1, 0}, Vec2{0, -1}, Vec2{0, 1}};
  const Vec2 d = b - a;
  bool all_close = true;
  bool any_close_axis = false;
  for (int k = 0; k < 4; ++k) {
    const double proj = dot(d, dirs[k]);
    if (proj >= margin) all_close = false;
    // An axis is close when neither of its two directions separates.
    if (k % 2 == 1) {
      const double other = dot(d, dirs[k - 1]);
      if (proj < margin && other < margin) any_close_axis = true;
    }
  }
  return mode == MarginMode::kAllAxes ? all_close : any_close_axis;
}

}  // namespace

TEST(Distance, ThresholdIsQuarterUnit) {
  auto close = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 0.24, 0.0}});
  auto far = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 0.26, 0.0}});
  const auto cfg = distance_only();
  EXPECT_TRUE(has(check_scene(close, cfg), Violation::Kind::kDistance));
  EXPECT_TRUE(check_scene(far, cfg).valid());
}

TEST(Margin, AppliesWhenConfigured) {
  auto pair = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 0.26, 0.0}});
  auto cfg = distance_only();
  cfg.direction_margin = 0.4;
  for (auto mode : {MarginMode::kAllAxes, MarginMode::kAnyAxis}) {
    cfg.margin_mode = mode;
    const bool expect = margin_rejects(pair.objects[0].position(), pair.objects[1].position(), 0.4, mode);
    EXPECT_EQ(has(check_scene(pair, cfg), Violation::Kind::kMargin), expect);
  }
}

TEST(Margin, AgreesWithDirectionLoopOracle) {
  Rng rng(3);
  auto cfg = SceneConstraintConfig::permissive();
  cfg.direction_margin = 0.4;
  for (auto mode : {MarginMode::kAllAxes, MarginMode::kAnyAxis}) {
    cfg.margin_mode = mode;
    for (int t = 0; t < 5000; ++t) {
      auto s = make_scene({{"cube", "red", "large", "metal", rng.uniform(-1, 1), rng.uniform(-1, 1)},
                           {"sphere", "blue", "large", "rubber", rng.uniform(-1, 1), rng.uniform(-1, 1)}});
      const bool expect = margin_rejects(s.objects[0].position(), s.objects[1].position(), 0.4, mode);
      EXPECT_EQ(has(check_scene(s, cfg), Violation::Kind::kMargin), expect);
    }
  }
}

TEST(Margin, StrictModeRejectsMore) {
  // Far apart in x, aligned in y: only the strict reading rejects.
  auto s = make_scene({{"cube", "red", "large", "metal", -1.0, 0.0}, {"sphere", "blue", "large", "rubber", 1.0, 0.1}});
  auto cfg = SceneConstraintConfig::permissive();
  cfg.direction_margin = 0.4;
  cfg.margin_mode = MarginMode::kAllAxes;
  EXPECT_TRUE(check_scene(s, cfg).valid());
  cfg.margin_mode = MarginMode::kAnyAxis;
  EXPECT_FALSE(check_scene(s, cfg).valid());
}

TEST(Bounds, OutsideThreeRejected) {
  auto s = make_scene({{"cube", "red", "large", "metal", 3.2, 0.0}, {"sphere", "blue", "large", "rubber", -1.0, 0.0}});
  auto cfg = SceneConstraintConfig::permissive();
  cfg.enforce_bounds = true;
  EXPECT_TRUE(has(check_scene(s, cfg), Violation::Kind::kBounds));
  cfg.enforce_bounds = false;
  EXPECT_TRUE(check_scene(s, cfg).valid());
}

TEST(Permissive, EveryDisplacementPasses) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                       {"sphere", "blue", "small", "rubber", 0.0, 0.0},
                       {"cylinder", "gray", "large", "rubber", 2.9, 2.9}});
  const auto cfg = SceneConstraintConfig::permissive();
  for (int dx = -3; dx <= 3; ++dx) {
    for (int dy = -3; dy <= 3; ++dy) {
      Displacement d = Displacement::zero(3);
      d.moves[2] = BinOffset{dx, dy};
      EXPECT_TRUE(scene_is_valid(apply_displacement(s, d, GridSpec{}), cfg));
    }
  }
}

TEST(CheckScene, ReportsEveryViolation) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                       {"sphere", "blue", "large", "rubber", 0.1, 0.0},
                       {"cylinder", "gray", "large", "rubber", 3.5, 0.0}});
  auto c = check_scene(s, SceneConstraintConfig{});
  EXPECT_TRUE(has(c, Violation::Kind::kDistance));
  EXPECT_TRUE(has(c, Violation::Kind::kBounds));
  EXPECT_TRUE(has(c, Violation::Kind::kMargin));
  EXPECT_FALSE(scene_is_valid(s, SceneConstraintConfig{}));
}

TEST(CheckScene, MonotoneInThresholds) {
  Rng rng(9);
  SceneConstraintConfig tight;
  SceneConstraintConfig loose = tight;
  loose.min_center_dist = 0.1;
  loose.direction_margin = 0.2;
  loose.min_visibility = 0.2;
  for (int t = 0; t < 500; ++t) {
    SceneGraph s;
    for (int i = 0; i < 4; ++i) {
      SceneObject o;
      o.size = static_cast<int>(rng.below(2));
      o.x = rng.uniform(-3, 3);
      o.y = rng.uniform(-3, 3);
      s.objects.push_back(o);
    }
    if (scene_is_valid(s, tight)) {
      EXPECT_TRUE(scene_is_valid(s, loose));
    }
  }
}

TEST(CheckScene, ObjectCountLimits) {
  auto two = make_scene({{"cube", "red", "large", "metal", -2.0, -2.0}, {"sphere", "blue", "large", "rubber", 2.0, 2.0}});
  EXPECT_TRUE(has(check_scene(two, SceneConstraintConfig{}), Violation::Kind::kCount));
}

TEST(ConfigValidate, ListsEveryProblem) {
  SceneConstraintConfig c;
  c.min_center_dist = -1;
  c.bounds = -2;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("min_center_dist"), std::string::npos);
    EXPECT_NE(m.find("bounds"), std::string::npos);
  }
}

TEST(Visibility, IsolatedObjectFullyVisible) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 2.5, 2.5}});
  EXPECT_DOUBLE_EQ(visibility_proxy(s, 0), 1.0);
}

TEST(Visibility, CoincidentSameSizeFullyHidden) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 0.0, 0.0}});
  EXPECT_NEAR(visibility_proxy(s, 0), 0.0, 1e-12);
}

TEST(Visibility, BehindObjectDoesNotOcclude) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "large", "rubber", 0.3, 0.3}});
  EXPECT_DOUBLE_EQ(visibility_proxy(s, 0), 1.0);
}

// Area-sampling oracle: uniform points in the object's disc, counted as
// hidden when inside any disc of an object in front of it.
TEST(Visibility, MatchesMonteCarloOracle) {
  struct Case {
    double ox, oy;
    const char* size;
  };
  const SceneConstraintConfig cfg;
  for (const Case& c : {Case{0.7, -0.1, "large"}, Case{0.3, -0.5, "large"}, Case{-0.2, -0.4, "small"},
                        Case{0.0, -0.9, "large"}}) {
    auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                         {"sphere", "blue", c.size, "rubber", c.ox, c.oy},
                         {"cylinder", "gray", "small", "rubber", -0.6, -0.3}});
    const double r = 0.7;
    Rng rng(1234);
    long inside = 0;
    long visible = 0;
    while (inside < 100000) {
      const double px = rng.uniform(-r, r);
      const double py = rng.uniform(-r, r);
      if (px * px + py * py > r * r) continue;
      ++inside;
      bool hidden = false;
      for (int j = 1; j < 3; ++j) {
        const auto& o = s.objects[j];
        if (o.y >= 0.0) continue;  // only objects in front (smaller y)
        const double rj = s.name_of(j, AttributeKind::kSize) == "small" ? 0.28 : 0.7;
        const double dx = px - o.x;
        const double dy = py - o.y;
        if (dx * dx + dy * dy <= rj * rj) hidden = true;
      }
      if (!hidden) ++visible;
    }
    const double mc = static_cast<double>(visible) / inside;
    const double proxy = visibility_proxy(s, 0, cfg);
    EXPECT_GT(proxy, 0.0);
    EXPECT_LT(proxy, 1.0);
    EXPECT_NEAR(proxy, mc, 0.006) << "occluder at " << c.ox << "," << c.oy;
  }
}

TEST(Relevance, IdentityKeepsAnswer) {
  auto s = make_scene({{"cube", "red", "large", "metal", -2.0, 0.0},
                       {"sphere", "blue", "large", "rubber", 0.0, 0.0},
                       {"cylinder", "green", "large", "rubber", -2.5, 2.0}});
  auto p = program({{"scene", {}, {}}, {"filter_shape", {0}, {"cube"}}, {"count", {1}, {}}});
  EXPECT_TRUE(check_question_relevance(p, s, execute(p, s)));
}

TEST(Relevance, AmbiguousUniqueFails) {
  auto s = make_scene({{"cube", "red", "large", "metal", -2.0, 0.0},
                       {"sphere", "blue", "large", "rubber", 0.0, 0.0},
                       {"cylinder", "green", "large", "rubber", -2.5, 2.0}});
  auto p = program({{"scene", {}, {}},
                    {"filter_color", {0}, {"red"}},
                    {"unique", {1}, {}},
                    {"relate", {2}, {"right"}},
                    {"unique", {3}, {}},
                    {"query_shape", {4}, {}}});
  const Answer gt = execute(p, s);
  ASSERT_TRUE(gt.determined());
  s.objects[2].x = 1.5;  // now two objects are right of the red cube
  EXPECT_FALSE(check_question_relevance(p, s, gt));
}

TEST(Relevance, UnreferencedDistractorAnywhere) {
  auto s = make_scene({{"cube", "red", "large", "metal", -2.0, 0.0},
                       {"cube", "blue", "large", "rubber", 0.0, -2.0},
                       {"sphere", "green", "small", "rubber", 1.0, 1.0}});
  auto p = program({{"scene", {}, {}}, {"filter_shape", {0}, {"cube"}}, {"count", {1}, {}}});
  const Answer gt = execute(p, s);
  for (int dx = -3; dx <= 3; ++dx) {
    for (int dy = -3; dy <= 3; ++dy) {
      Displacement d = Displacement::zero(3);
      d.moves[2] = BinOffset{dx, dy};
      EXPECT_TRUE(check_question_relevance(p, apply_displacement(s, d, GridSpec{}), gt));
    }
  }
}

TEST(Generator, ScenesPassDefaultChecks) {
  const auto scenes = generate_scenes(100, 5, SceneGenConfig{});
  for (const auto& s : scenes) {
    EXPECT_TRUE(check_scene(s, SceneConstraintConfig{}).valid());
    EXPECT_GE(s.size(), kMinObjects);
    EXPECT_LE(s.size(), kMaxObjects);
  }
}
