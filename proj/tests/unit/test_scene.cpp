#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"
#include "advgame/rng.hpp"
#include "advgame/scene.hpp"
#include "fixtures.hpp"

using namespace advgame;
using advgame::testing::make_scene;

TEST(Grid, DiscretizeEdgesAndMidpoint) {
  GridSpec g;
  EXPECT_EQ(discretize(-3.0, g), 0);
  EXPECT_EQ(discretize(3.0, g), 6);
  EXPECT_EQ(discretize(0.0, g), 3);
}

TEST(Grid, BinCenters) {
  GridSpec g;
  EXPECT_DOUBLE_EQ(bin_center(3, g), 0.0);
  EXPECT_NEAR(bin_center(0, g), -3.0 + 3.0 / 7.0, 1e-12);
  for (int b = 0; b < 7; ++b) EXPECT_EQ(discretize(bin_center(b, g), g), b);
}

TEST(Grid, ClampsOutsideRange) {
  GridSpec g;
  EXPECT_EQ(discretize(-10.0, g), 0);
  EXPECT_EQ(discretize(10.0, g), 6);
}

TEST(Displacement, ZeroIsIdentity) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.1, -1.2},
                       {"sphere", "blue", "small", "rubber", 1.5, 2.0},
                       {"cylinder", "gray", "large", "rubber", -2.0, 0.5}});
  auto moved = apply_displacement(s, Displacement::zero(3), GridSpec{});
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(moved.objects[i].x, s.objects[i].x);
    EXPECT_EQ(moved.objects[i].y, s.objects[i].y);
  }
}

TEST(Displacement, OneBinIsOneWidth) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                       {"sphere", "blue", "small", "rubber", 1.5, 2.0},
                       {"cylinder", "gray", "large", "rubber", -2.0, 0.5}});
  Displacement d = Displacement::zero(3);
  d.moves[0] = BinOffset{1, 0};
  auto moved = apply_displacement(s, d, GridSpec{});
  EXPECT_NEAR(moved.objects[0].x, 6.0 / 7.0, 1e-12);
  EXPECT_EQ(moved.objects[0].y, 0.0);
}

TEST(Displacement, EntriesBeyondObjectsIgnored) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                       {"sphere", "blue", "small", "rubber", 1.5, 2.0},
                       {"cylinder", "gray", "large", "rubber", -2.0, 0.5}});
  Displacement d = Displacement::zero(3);
  for (int h = 3; h < kMaxObjects; ++h) d.moves[h] = BinOffset{3, -3};
  auto moved = apply_displacement(s, d, GridSpec{});
  ASSERT_EQ(moved.size(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(moved.objects[i].x, s.objects[i].x);
}

TEST(Relations, SignOfDotProduct) {
  auto s = make_scene({{"cube", "red", "large", "metal", -1.0, 0.0}, {"sphere", "blue", "small", "rubber", 1.0, 0.0}});
  EXPECT_EQ(compute_relation(s, Relation::kRight, 0), std::vector<int>{1});
  EXPECT_TRUE(compute_relation(s, Relation::kLeft, 0).empty());
}

TEST(Relations, CollinearMiddleAnchor) {
  auto s = make_scene({{"cube", "red", "large", "metal", -1.0, 0.0},
                       {"sphere", "blue", "small", "rubber", 0.0, 0.0},
                       {"cylinder", "gray", "large", "rubber", 1.0, 0.0}});
  EXPECT_EQ(compute_relation(s, Relation::kLeft, 1), std::vector<int>{0});
  EXPECT_EQ(compute_relation(s, Relation::kRight, 1), std::vector<int>{2});
}

TEST(Relations, TiesExcludedFromBothSides) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "blue", "small", "rubber", 0.0, 2.0}});
  EXPECT_TRUE(compute_relation(s, Relation::kLeft, 0).empty());
  EXPECT_TRUE(compute_relation(s, Relation::kRight, 0).empty());
  EXPECT_EQ(compute_relation(s, Relation::kBehind, 0), std::vector<int>{1});
}

// Brute-force oracle: the relation sets must partition by projection sign.
TEST(Relations, AgreeWithProjectionOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    SceneGraph s;
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 7));
    for (int i = 0; i < n; ++i) {
      SceneObject o;
      o.x = rng.uniform(-3.0, 3.0);
      o.y = rng.uniform(-3.0, 3.0);
      s.objects.push_back(o);
    }
    for (int a = 0; a < n; ++a) {
      for (Relation r : kAllRelations) {
        std::vector<int> expect;
        for (int j = 0; j < n; ++j) {
          if (j == a) continue;
          const double dx = s.objects[j].x - s.objects[a].x;
          const double dy = s.objects[j].y - s.objects[a].y;
          double proj = 0.0;
          switch (r) {
            case Relation::kLeft: proj = -dx; break;
            case Relation::kRight: proj = dx; break;
            case Relation::kFront: proj = -dy; break;
            case Relation::kBehind: proj = dy; break;
          }
          if (proj > 0.0) expect.push_back(j);
        }
        EXPECT_EQ(compute_relation(s, r, a), expect);
      }
    }
  }
}

TEST(Tokens, PaddingCounts) {
  QuestionVocab qv = QuestionVocab::standard(AttributeVocab::clevr());
  SceneGraph ten;
  for (int i = 0; i < 10; ++i) {
    SceneObject o;
    o.x = -2.7 + 0.6 * i;
    ten.objects.push_back(o);
  }
  auto t10 = tokenize(ten, {}, qv, GridSpec{});
  EXPECT_EQ(std::count(t10.object_tokens().begin(), t10.object_tokens().end(), kPadToken), 0);
  EXPECT_EQ(std::count(t10.question_tokens().begin(), t10.question_tokens().end(), kPadToken), 50);

  auto three = make_scene({{"cube", "red", "large", "metal", -1.0, 0.0},
                           {"sphere", "blue", "small", "rubber", 0.0, 0.0},
                           {"cylinder", "gray", "large", "rubber", 1.0, 0.0}});
  auto t3 = tokenize(three, advgame::testing::words("how many cubes are there ?"), qv, GridSpec{});
  EXPECT_EQ(std::count(t3.object_tokens().begin(), t3.object_tokens().end(), kPadToken), 42);
  EXPECT_EQ(t3.n_objects, 3);
  EXPECT_EQ(t3.n_question, 6);
}

TEST(Tokens, UnknownWordsShareOneId) {
  QuestionVocab qv = QuestionVocab::standard(AttributeVocab::clevr());
  EXPECT_EQ(qv.encode("zebra"), qv.encode("quasar"));
  EXPECT_NE(qv.encode("cube"), qv.encode("zebra"));
}

TEST(SceneJson, RoundTrip) {
  auto s = make_scene({{"cube", "red", "large", "metal", 0.25, -1.5},
                       {"sphere", "cyan", "small", "rubber", 1.75, 2.0},
                       {"cylinder", "yellow", "large", "rubber", -2.0, 0.5}});
  s.image_index = 42;
  s.image_filename = "x.png";
  auto back = scene_from_json(scene_to_json(s));
  ASSERT_EQ(back.size(), 3);
  EXPECT_EQ(back.image_index, 42);
  EXPECT_EQ(back.image_filename, "x.png");
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back.objects[i].x, s.objects[i].x);
    EXPECT_EQ(back.objects[i].y, s.objects[i].y);
    for (auto k : {AttributeKind::kShape, AttributeKind::kColor, AttributeKind::kSize, AttributeKind::kMaterial}) {
      EXPECT_EQ(back.name_of(i, k), s.name_of(i, k));
    }
  }
}

TEST(SceneJson, UnknownAttributeIsParseError) {
  auto j = scene_to_json(make_scene({{"cube", "red", "large", "metal", 0.0, 0.0},
                                     {"sphere", "cyan", "small", "rubber", 1.0, 2.0},
                                     {"cylinder", "yellow", "large", "rubber", -2.0, 0.5}}));
  j["objects"][0]["color"] = "magenta";
  try {
    scene_from_json(j);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kParse);
  }
}

TEST(SceneJson, MissingFileIsNotFound) {
  try {
    load_scenes("/nonexistent/scenes.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kNotFound);
  }
}

TEST(SceneProblems, CountLimits) {
  auto two = make_scene({{"cube", "red", "large", "metal", 0.0, 0.0}, {"sphere", "cyan", "small", "rubber", 1.0, 2.0}});
  EXPECT_FALSE(scene_problems(two).empty());
}
