#include <gtest/gtest.h>

#include <set>

#include "advgame/enforcers.hpp"
#include "advgame/error.hpp"
#include "advgame/generator.hpp"
#include "advgame/rng.hpp"

using namespace advgame;

TEST(SceneGen, ScenesSatisfyConstraints) {
  SceneGenConfig cfg;
  const auto scenes = generate_scenes(30, 5, cfg);
  ASSERT_EQ(scenes.size(), 30u);
  for (const auto& s : scenes) {
    EXPECT_GE(s.size(), kMinObjects);
    EXPECT_LE(s.size(), kMaxObjects);
    EXPECT_TRUE(check_scene(s, cfg.constraints).valid());
  }
}

TEST(SceneGen, Seeded) {
  SceneGenConfig cfg;
  const auto a = generate_scenes(5, 9, cfg);
  const auto b = generate_scenes(5, 9, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (int j = 0; j < a[i].size(); ++j) EXPECT_EQ(a[i].objects[j].x, b[i].objects[j].x);
  }
}

TEST(SceneGen, BadBoundsRejected) {
  SceneGenConfig cfg;
  cfg.min_objects = 8;
  cfg.max_objects = 4;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(QuestionGen, DeterminateAndShort) {
  SceneGenConfig cfg;
  const auto scenes = generate_scenes(20, 2, cfg);
  const auto qs = generate_corpus_questions(scenes, 10, 3);
  EXPECT_GT(qs.size(), 100u);
  std::set<std::pair<int, std::string>> seen;
  for (const auto& q : qs) {
    const auto& scene = scenes.at(static_cast<std::size_t>(q.image_index));
    const Answer a = execute(q.program, scene);
    ASSERT_TRUE(a.determined());
    EXPECT_EQ(a.to_string(), q.answer);
    EXPECT_LE(static_cast<int>(q.question.size()), kQuestionTokens);
    EXPECT_TRUE(validate(q.program, AttributeVocab::clevr()).empty());
    std::string text;
    for (const auto& w : q.question) text += w + " ";
    EXPECT_TRUE(seen.insert({q.image_index, text}).second) << text;
  }
}

TEST(QuestionGen, WordsAreInVocabulary) {
  SceneGenConfig cfg;
  const auto scenes = generate_scenes(10, 4, cfg);
  const auto qv = QuestionVocab::standard(AttributeVocab::clevr());
  const int unk = qv.encode("zzzz-not-a-word");
  for (const auto& q : generate_corpus_questions(scenes, 10, 1)) {
    for (const auto& w : q.question) EXPECT_NE(qv.encode(w), unk) << w;
  }
}
