#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "advgame/policy.hpp"
#include "advgame/rng.hpp"
#include "advgame/scene.hpp"

namespace advgame::testing {

struct TensorError {
  std::string name;
  double max_rel = 0.0;  // max |analytic - numeric| / max(|analytic|, |numeric|) over the tensor
  std::size_t checked = 0;
};

// Initialized parameters with every tensor jittered, so no gradient path is
// trivially zero (the actor head starts at zero).
inline PolicyParameters jittered_params(const PolicyConfig& cfg, std::uint64_t seed) {
  PolicyParameters p = PolicyParameters::initialize(cfg, seed);
  Rng rng(seed ^ 0x5eedULL);
  p.for_each_tensor([&](const char*, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += rng.uniform(-0.2, 0.2);
  });
  return p;
}

// A fixed batch over random scenes of different sizes; actions and rewards
// are random but valid.
inline A2CBatch random_batch(const PolicyParameters& params, std::uint64_t seed, int records) {
  Rng rng(seed);
  const GridSpec grid;
  const QuestionVocab qv = QuestionVocab::standard(AttributeVocab::clevr());
  const std::vector<std::string> q = split_question("what color is the cube left of the small sphere ?");
  const double rewards[] = {1.0, 0.1, -0.1, -0.8};
  A2CBatch batch;
  for (int r = 0; r < records; ++r) {
    SceneGraph s;
    const int n = 3 + r % 8;
    for (int i = 0; i < n; ++i) {
      SceneObject o;
      o.shape = static_cast<int>(rng.below(3));
      o.color = static_cast<int>(rng.below(8));
      o.size = static_cast<int>(rng.below(2));
      o.material = static_cast<int>(rng.below(2));
      o.x = rng.uniform(-3, 3);
      o.y = rng.uniform(-3, 3);
      s.objects.push_back(o);
    }
    A2CRecord rec;
    rec.tokens = tokenize(s, q, qv, grid);
    const auto out = forward(params, rec.tokens);
    rec.action.fill(-1);
    for (int h = 0; h < n; ++h) {
      rec.action[2 * h] = static_cast<int>(rng.below(grid.bins));
      rec.action[2 * h + 1] = static_cast<int>(rng.below(grid.bins));
    }
    rec.log_prob = log_prob_of(out.dists, rec.action);
    rec.state_value = out.state_value;
    rec.reward = rewards[rng.below(4)];
    batch.records.push_back(rec);
  }
  return batch;
}

// Central differences on a2c_objective with the advantages held fixed.
// stride > 1 checks every stride-th element of each tensor.
inline std::vector<TensorError> gradient_check(const PolicyParameters& params, const A2CBatch& batch,
                                               double entropy_coef, double eps, std::size_t stride = 1) {
  const Gradients g = compute_gradients(params, batch, entropy_coef);
  std::vector<const Eigen::MatrixXd*> analytic;
  g.grads.for_each_tensor([&](const char*, const Eigen::MatrixXd& m) { analytic.push_back(&m); });
  std::vector<TensorError> out;
  PolicyParameters work = params;
  std::size_t t = 0;
  work.for_each_tensor([&](const char* name, Eigen::MatrixXd& m) {
    const Eigen::MatrixXd& a = *analytic[t++];
    TensorError e{name, 0.0, 0};
    double max_diff = 0.0;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < m.size(); i += static_cast<Eigen::Index>(stride)) {
      const double orig = m.data()[i];
      m.data()[i] = orig + eps;
      const double up = a2c_objective(work, batch, g.advantages, entropy_coef).total;
      m.data()[i] = orig - eps;
      const double down = a2c_objective(work, batch, g.advantages, entropy_coef).total;
      m.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      max_diff = std::max(max_diff, std::abs(numeric - a.data()[i]));
      scale = std::max({scale, std::abs(numeric), std::abs(a.data()[i])});
      ++e.checked;
    }
    e.max_rel = scale > 0.0 ? max_diff / scale : 0.0;
    out.push_back(e);
  });
  return out;
}

}  // namespace advgame::testing
