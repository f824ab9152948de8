#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "advgame/program.hpp"
#include "fixtures.hpp"

using namespace advgame;
using advgame::testing::make_scene;
using advgame::testing::program;

namespace {

SceneGraph two_objects() {
  return make_scene({{"cube", "red", "large", "metal", -1.0, 0.0}, {"sphere", "blue", "small", "rubber", 1.0, 0.0}});
}

bool has_kind(const std::vector<ProgramError>& errs, ProgramError::Kind k) {
  for (const auto& e : errs) {
    if (e.kind == k) return true;
  }
  return false;
}

}  // namespace

TEST(Validate, MinimalProgramOk) {
  auto p = program({{"scene", {}, {}}, {"count", {0}, {}}});
  EXPECT_TRUE(validate(p, AttributeVocab::clevr()).empty());
}

TEST(Validate, ArityError) {
  auto p = program({{"scene", {}, {}}, {"scene", {}, {}}, {"count", {0, 1}, {}}});
  EXPECT_TRUE(has_kind(validate(p, AttributeVocab::clevr()), ProgramError::Kind::kArity));
}

TEST(Validate, VocabError) {
  auto p = program({{"scene", {}, {}}, {"filter_color", {0}, {"magenta"}}, {"count", {1}, {}}});
  EXPECT_TRUE(has_kind(validate(p, AttributeVocab::clevr()), ProgramError::Kind::kVocab));
}

TEST(Validate, UnknownFunctionAndEmpty) {
  EXPECT_TRUE(has_kind(validate(program({}), AttributeVocab::clevr()), ProgramError::Kind::kEmpty));
  auto p = program({{"scene", {}, {}}, {"teleport", {0}, {}}});
  EXPECT_TRUE(has_kind(validate(p, AttributeVocab::clevr()), ProgramError::Kind::kUnknownFunction));
}

TEST(Validate, TypeError) {
  auto p = program({{"scene", {}, {}}, {"count", {0}, {}}, {"exist", {1}, {}}});
  EXPECT_TRUE(has_kind(validate(p, AttributeVocab::clevr()), ProgramError::Kind::kType));
}

TEST(Execute, CountCubes) {
  auto p = program({{"scene", {}, {}}, {"filter_shape", {0}, {"cube"}}, {"count", {1}, {}}});
  auto a = execute(p, two_objects());
  ASSERT_EQ(a.kind(), Answer::Kind::kInteger);
  EXPECT_EQ(a.as_integer(), 1);
}

TEST(Execute, ExistOverEmptyIsNo) {
  auto p = program({{"scene", {}, {}}, {"filter_color", {0}, {"green"}}, {"exist", {1}, {}}});
  auto a = execute(p, two_objects());
  ASSERT_EQ(a.kind(), Answer::Kind::kBool);
  EXPECT_FALSE(a.as_bool());
}

TEST(Execute, UniqueOfTwoIsUndetermined) {
  auto p = program({{"scene", {}, {}}, {"unique", {0}, {}}, {"query_color", {1}, {}}});
  EXPECT_FALSE(execute(p, two_objects()).determined());
}

TEST(Execute, RelateThenQuery) {
  auto p = program({{"scene", {}, {}},
                    {"filter_shape", {0}, {"cube"}},
                    {"unique", {1}, {}},
                    {"relate", {2}, {"right"}},
                    {"unique", {3}, {}},
                    {"query_color", {4}, {}}});
  auto a = execute(p, two_objects());
  ASSERT_EQ(a.kind(), Answer::Kind::kAttribute);
  EXPECT_EQ(a.as_attribute(), "blue");
}

TEST(Execute, CompareAndSetOps) {
  auto s = make_scene({{"cube", "red", "large", "metal", -2.0, 0.0},
                       {"cube", "blue", "small", "rubber", 0.0, 1.0},
                       {"sphere", "blue", "large", "rubber", 2.0, -1.0}});
  auto gt = program({{"scene", {}, {}},
                     {"filter_shape", {0}, {"cube"}},
                     {"count", {1}, {}},
                     {"scene", {}, {}},
                     {"filter_shape", {3}, {"sphere"}},
                     {"count", {4}, {}},
                     {"greater_than", {2, 5}, {}}});
  EXPECT_TRUE(execute(gt, s).as_bool());
  auto uni = program({{"scene", {}, {}},
                      {"filter_shape", {0}, {"cube"}},
                      {"scene", {}, {}},
                      {"filter_color", {2}, {"blue"}},
                      {"union", {1, 3}, {}},
                      {"count", {4}, {}}});
  EXPECT_EQ(execute(uni, s).as_integer(), 3);
  auto inter = program({{"scene", {}, {}},
                        {"filter_shape", {0}, {"cube"}},
                        {"scene", {}, {}},
                        {"filter_color", {2}, {"blue"}},
                        {"intersect", {1, 3}, {}},
                        {"count", {4}, {}}});
  EXPECT_EQ(execute(inter, s).as_integer(), 1);
}

TEST(Execute, SameAttributeExcludesSelf) {
  auto s = make_scene({{"cube", "red", "large", "metal", -2.0, 0.0},
                       {"cube", "blue", "small", "rubber", 0.0, 1.0},
                       {"sphere", "blue", "large", "rubber", 2.0, -1.0}});
  auto p = program({{"scene", {}, {}},
                    {"filter_color", {0}, {"red"}},
                    {"unique", {1}, {}},
                    {"same_shape", {2}, {}},
                    {"count", {3}, {}}});
  EXPECT_EQ(execute(p, s).as_integer(), 1);
}

TEST(Answers, Equality) {
  EXPECT_TRUE(answer_equal(Answer::boolean(true), Answer::boolean(true)));
  EXPECT_FALSE(answer_equal(Answer::integer(2), Answer::attribute("cube")));
  EXPECT_FALSE(answer_equal(Answer::undetermined(), Answer::undetermined()));
}

TEST(Answers, ParseGrammar) {
  const auto v = AttributeVocab::clevr();
  EXPECT_TRUE(answer_equal(*Answer::parse(" YES\n", v), Answer::boolean(true)));
  EXPECT_TRUE(answer_equal(*Answer::parse("no", v), Answer::boolean(false)));
  EXPECT_TRUE(answer_equal(*Answer::parse("7", v), Answer::integer(7)));
  EXPECT_TRUE(answer_equal(*Answer::parse("Cylinder", v), Answer::attribute("cylinder")));
  EXPECT_FALSE(Answer::parse("11", v));
  EXPECT_FALSE(Answer::parse("-1", v));
  EXPECT_FALSE(Answer::parse("banana", v));
  EXPECT_FALSE(Answer::parse("", v));
}

TEST(ProgramJson, RoundTrip) {
  auto p = program({{"scene", {}, {}}, {"filter_shape", {0}, {"cube"}}, {"count", {1}, {}}});
  auto back = program_from_json(program_to_json(p));
  ASSERT_EQ(back.nodes.size(), 3u);
  EXPECT_EQ(back.nodes[1].function, "filter_shape");
  EXPECT_EQ(back.nodes[1].value_inputs, std::vector<std::string>{"cube"});
  EXPECT_EQ(back.nodes[2].inputs, std::vector<int>{1});
}

TEST(OutputType, FromLastNode) {
  EXPECT_EQ(output_type(program({{"scene", {}, {}}, {"count", {0}, {}}})), ValueType::kInteger);
  EXPECT_FALSE(output_type(program({{"scene", {}, {}}, {"nope", {0}, {}}})));
}
