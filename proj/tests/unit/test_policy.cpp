#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "advgame/error.hpp"
#include "advgame/policy.hpp"
#include "advgame/rng.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace advgame;
using advgame::testing::make_scene;

namespace {

PolicyConfig small_config() {
  PolicyConfig c = PolicyConfig::for_vocab(AttributeVocab::clevr(), QuestionVocab::standard(AttributeVocab::clevr()),
                                           GridSpec{});
  c.embed_dim = 4;
  c.hidden = 8;
  return c;
}

TokenSequence sample_tokens() {
  auto s = make_scene({{"cube", "red", "large", "metal", -1.0, 0.0},
                       {"sphere", "blue", "small", "rubber", 1.0, 0.0},
                       {"cylinder", "gray", "large", "rubber", 0.0, 2.0}});
  return tokenize(s, split_question("is there a cube ?"), QuestionVocab::standard(AttributeVocab::clevr()),
                  GridSpec{});
}

bool params_equal(const PolicyParameters& a, const PolicyParameters& b) {
  std::vector<const Eigen::MatrixXd*> bs;
  b.for_each_tensor([&](const char*, const Eigen::MatrixXd& m) { bs.push_back(&m); });
  bool eq = true;
  std::size_t i = 0;
  a.for_each_tensor([&](const char*, const Eigen::MatrixXd& m) { eq = eq && m == *bs[i++]; });
  return eq;
}

}  // namespace

TEST(Forward, InitialPolicyIsUniform) {
  auto p = PolicyParameters::initialize(small_config(), 1);
  auto out = forward(p, sample_tokens());
  for (const auto& d : out.dists) {
    ASSERT_EQ(d.size(), 7);
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(d(j), 1.0 / 7.0, 1e-12);
  }
}

TEST(Forward, DistributionsNormalized) {
  auto p = advgame::testing::jittered_params(small_config(), 2);
  auto out = forward(p, sample_tokens());
  EXPECT_EQ(out.dists.size(), 20u);
  for (const auto& d : out.dists) EXPECT_NEAR(d.sum(), 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(out.state_value));
}

TEST(Forward, PaddingContentIgnored) {
  auto p = advgame::testing::jittered_params(small_config(), 3);
  TokenSequence a = sample_tokens();
  TokenSequence b = a;
  for (int i = a.n_objects * kAttributeSlots; i < kObjectTokens; ++i) b.ids[i] = 1;
  for (int i = kObjectTokens + a.n_question; i < kTotalTokens; ++i) b.ids[i] = 2;
  auto oa = forward(p, a);
  auto ob = forward(p, b);
  EXPECT_EQ(oa.state_value, ob.state_value);
  for (int k = 0; k < kHeadOutputs; ++k) EXPECT_EQ(oa.dists[k], ob.dists[k]);
}

TEST(Sample, PointMassHasZeroLogProb) {
  std::array<Eigen::VectorXd, kHeadOutputs> dists;
  for (auto& d : dists) {
    d = Eigen::VectorXd::Zero(7);
    d(5) = 1.0;
  }
  Rng rng(1);
  auto s = sample(dists, rng);
  EXPECT_DOUBLE_EQ(s.log_prob, 0.0);
  for (int h = 0; h < kHeads; ++h) EXPECT_EQ(s.displacement.moves[h], (BinOffset{2, 2}));
}

TEST(Sample, UniformLogProb) {
  std::array<Eigen::VectorXd, kHeadOutputs> dists;
  for (auto& d : dists) d = Eigen::VectorXd::Constant(7, 1.0 / 7.0);
  Rng rng(1);
  EXPECT_NEAR(sample(dists, rng).log_prob, 20.0 * std::log(1.0 / 7.0), 1e-9);
  EXPECT_NEAR(20.0 * std::log(1.0 / 7.0), -38.918, 1e-3);
}

TEST(Sample, InactiveHeadsMasked) {
  std::array<Eigen::VectorXd, kHeadOutputs> dists;
  for (auto& d : dists) d = Eigen::VectorXd::Constant(7, 1.0 / 7.0);
  Rng rng(4);
  auto s = sample(dists, rng, 3);
  EXPECT_NEAR(s.log_prob, 6.0 * std::log(1.0 / 7.0), 1e-9);
  for (int h = 3; h < kHeads; ++h) {
    EXPECT_FALSE(s.displacement.moves[h]);
    EXPECT_EQ(s.bins[2 * h], -1);
  }
  EXPECT_DOUBLE_EQ(log_prob_of(dists, s.bins), s.log_prob);
  EXPECT_EQ(bins_for(s.displacement, 7), s.bins);
}

TEST(Losses, DirectSubstitution) {
  A2CBatch b;
  A2CRecord r;
  r.reward = 1.0;
  r.state_value = 0.5;
  r.log_prob = -2.0;
  b.records.push_back(r);
  auto l = a2c_losses(b);
  EXPECT_DOUBLE_EQ(l.policy, 1.0);
  EXPECT_DOUBLE_EQ(l.value, 0.25);
}

TEST(Losses, ZeroAdvantageZeroPolicyLoss) {
  A2CBatch b;
  for (double v : {0.3, -0.8, 1.0}) {
    A2CRecord r;
    r.reward = v;
    r.state_value = v;
    r.log_prob = -5.0;
    b.records.push_back(r);
  }
  EXPECT_DOUBLE_EQ(a2c_losses(b).policy, 0.0);
}

TEST(Step, ZeroLearningRateLeavesParams) {
  auto p = advgame::testing::jittered_params(small_config(), 5);
  auto batch = advgame::testing::random_batch(p, 6, 4);
  EXPECT_TRUE(params_equal(backward_and_step(p, batch, 0.0), p));
}

TEST(Step, DescentLowersObjective) {
  auto p = advgame::testing::jittered_params(small_config(), 7);
  auto batch = advgame::testing::random_batch(p, 8, 6);
  auto g = compute_gradients(p, batch);
  auto next = apply_gradients(p, g.grads, 1e-4);
  EXPECT_LT(a2c_objective(next, batch, g.advantages).total, a2c_objective(p, batch, g.advantages).total);
}

TEST(Step, NonFiniteGradientRejected) {
  auto p = PolicyParameters::initialize(small_config(), 1);
  auto g = PolicyParameters::zeros_like(p);
  g.trunk_b1(0, 0) = std::nan("");
  try {
    apply_gradients(p, g, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kNumeric);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  auto p = advgame::testing::jittered_params(small_config(), 11);
  auto batch = advgame::testing::random_batch(p, 12, 5);
  for (const auto& e : advgame::testing::gradient_check(p, batch, 0.0, 1e-5, 3)) {
    EXPECT_LE(e.max_rel, 1e-4) << e.name;
  }
}

TEST(Gradients, EntropyBonusMatchesFiniteDifferences) {
  auto p = advgame::testing::jittered_params(small_config(), 13);
  auto batch = advgame::testing::random_batch(p, 14, 5);
  for (const auto& e : advgame::testing::gradient_check(p, batch, 0.05, 1e-5, 3)) {
    EXPECT_LE(e.max_rel, 1e-4) << e.name;
  }
}

TEST(Gradients, EntropyTermLowersTotal) {
  auto p = advgame::testing::jittered_params(small_config(), 15);
  auto batch = advgame::testing::random_batch(p, 16, 4);
  auto g = compute_gradients(p, batch);
  auto plain = a2c_objective(p, batch, g.advantages, 0.0);
  auto bonus = a2c_objective(p, batch, g.advantages, 0.1);
  EXPECT_GT(plain.entropy, 0.0);
  EXPECT_NEAR(bonus.total, plain.total - 0.1 * plain.entropy, 1e-9);
}

TEST(Adam, FirstStepMovesBySignTimesRate) {
  auto p = advgame::testing::jittered_params(small_config(), 17);
  auto g = PolicyParameters::zeros_like(p);
  g.trunk_b1(0, 0) = 3.0;
  g.trunk_b1(1, 0) = -0.5;
  auto state = AdamState::for_params(p);
  auto next = adam_step(p, g, 0.01, state);
  // Bias-corrected first step: m/v^0.5 = sign(g).
  EXPECT_NEAR(next.trunk_b1(0, 0), p.trunk_b1(0, 0) - 0.01, 1e-8);
  EXPECT_NEAR(next.trunk_b1(1, 0), p.trunk_b1(1, 0) + 0.01, 1e-8);
  EXPECT_EQ(next.trunk_b1(2, 0), p.trunk_b1(2, 0));
  EXPECT_EQ(state.steps, 1);
}

TEST(Checkpoint, RoundTripWithOptimizerState) {
  auto p = advgame::testing::jittered_params(small_config(), 19);
  auto state = AdamState::for_params(p);
  auto g = PolicyParameters::zeros_like(p);
  g.head_b(0, 0) = 1.0;
  adam_step(p, g, 0.01, state);
  const auto path = (std::filesystem::temp_directory_path() / "advgame_policy_rt.json").string();
  save_policy(path, p, 1234, &state);
  long long episodes = 0;
  AdamState back_state;
  auto back = load_policy(path, &episodes, &back_state);
  EXPECT_EQ(episodes, 1234);
  EXPECT_TRUE(params_equal(back, p));
  EXPECT_TRUE(params_equal(back_state.m, state.m));
  EXPECT_TRUE(params_equal(back_state.v, state.v));
  EXPECT_EQ(back_state.steps, 1);
  std::filesystem::remove(path);
}

TEST(ActionSpace, Sizes) {
  EXPECT_EQ(action_space_size(1, GridSpec{}), "49");
  EXPECT_EQ(action_space_size(2, GridSpec{}), "2401");
  EXPECT_EQ(action_space_size(10, GridSpec{}), "79792266297612001");
}
