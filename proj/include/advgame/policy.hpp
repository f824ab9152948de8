#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "advgame/rng.hpp"
#include "advgame/scene.hpp"

namespace advgame {

inline constexpr int kHeads = kMaxObjects;
inline constexpr int kHeadOutputs = 2 * kHeads;  // an x and a y distribution per head
inline constexpr double kCriticScale = 1.2;

struct PolicyConfig {
  int embed_dim = 16;
  int hidden = 64;
  int bins = 7;
  int shapes = 3;
  int colors = 8;
  int sizes = 2;
  int materials = 2;
  int question_vocab = 1;
  // Stops critic gradients at the shared trunk.
  bool detach_critic = false;

  static PolicyConfig for_vocab(const AttributeVocab& attrs, const QuestionVocab& qvocab,
                                const GridSpec& grid);
  void validate() const;
};

// All tensors are dense matrices; biases are single-column matrices.
struct PolicyParameters {
  PolicyConfig config;

  // Embedding tables, one row per token value.
  Eigen::MatrixXd emb_x, emb_y, emb_shape, emb_color, emb_size, emb_material, emb_question;
  // Type embedding per object attribute slot (rows 0..5) and for question tokens (row 6).
  Eigen::MatrixXd emb_type;

  Eigen::MatrixXd trunk_w1, trunk_b1, trunk_w2, trunk_b2;
  Eigen::MatrixXd actor_w, actor_b;
  // Rows [2hN, 2hN+N) hold head h's x logits, the next N rows its y logits.
  Eigen::MatrixXd head_w, head_b;
  Eigen::MatrixXd critic_w1, critic_b1, critic_w2, critic_b2, critic_w3, critic_b3;

  // Uniform in +-1/sqrt(fan_in); head layer zeroed so the first policy is uniform.
  static PolicyParameters initialize(const PolicyConfig& config, std::uint64_t seed);
  static PolicyParameters zeros_like(const PolicyParameters& other);

  template <class F>
  void for_each_tensor(F&& f) {
    f("emb_x", emb_x);
    f("emb_y", emb_y);
    f("emb_shape", emb_shape);
    f("emb_color", emb_color);
    f("emb_size", emb_size);
    f("emb_material", emb_material);
    f("emb_question", emb_question);
    f("emb_type", emb_type);
    f("trunk_w1", trunk_w1);
    f("trunk_b1", trunk_b1);
    f("trunk_w2", trunk_w2);
    f("trunk_b2", trunk_b2);
    f("actor_w", actor_w);
    f("actor_b", actor_b);
    f("head_w", head_w);
    f("head_b", head_b);
    f("critic_w1", critic_w1);
    f("critic_b1", critic_b1);
    f("critic_w2", critic_w2);
    f("critic_b2", critic_b2);
    f("critic_w3", critic_w3);
    f("critic_b3", critic_b3);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<PolicyParameters*>(this)->for_each_tensor(
        [&](const char* name, Eigen::MatrixXd& m) { f(name, static_cast<const Eigen::MatrixXd&>(m)); });
  }

  std::size_t parameter_count() const;
};

struct PolicyOutput {
  // dists[2h] is head h's x distribution, dists[2h+1] its y distribution.
  std::array<Eigen::VectorXd, kHeadOutputs> dists;
  double state_value = 0.0;
};

PolicyOutput forward(const PolicyParameters& params, const TokenSequence& tokens);

struct ActionSample {
  Displacement displacement;
  // Sampled bin per head output; -1 for inactive heads.
  std::array<int, kHeadOutputs> bins{};
  double log_prob = 0.0;
};

// Draws x and y bins independently per head. Only the first `active_heads`
// heads (those that own an object) are sampled and contribute to log_prob.
ActionSample sample(const std::array<Eigen::VectorXd, kHeadOutputs>& dists, Rng& rng,
                    int active_heads = kHeads);

// Bins that realise a displacement; inverse of the sampling offset rule.
std::array<int, kHeadOutputs> bins_for(const Displacement& d, int bins);
double log_prob_of(const std::array<Eigen::VectorXd, kHeadOutputs>& dists,
                   const std::array<int, kHeadOutputs>& bins);

struct A2CRecord {
  TokenSequence tokens;
  std::array<int, kHeadOutputs> action{};
  double reward = 0.0;
  double state_value = 0.0;
  double log_prob = 0.0;
};

struct A2CBatch {
  std::vector<A2CRecord> records;
  void validate() const;
};

struct A2CLosses {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // summed over records and active heads
  double total = 0.0;
};

// policy = -sum(log_prob * (reward - value)), value = sum((value - reward)^2) / n.
A2CLosses a2c_losses(const A2CBatch& batch);

// Loss of `params` on the batch with advantages held fixed. This is the
// function whose gradient compute_gradients returns. An optional entropy
// bonus enters the total as -entropy_coef * entropy; it is off by default.
A2CLosses a2c_objective(const PolicyParameters& params, const A2CBatch& batch,
                        const std::vector<double>& advantages, double entropy_coef = 0.0);

struct Gradients {
  PolicyParameters grads;
  A2CLosses losses;
  std::vector<double> advantages;
};

Gradients compute_gradients(const PolicyParameters& params, const A2CBatch& batch, double entropy_coef = 0.0);

// One gradient-descent step on the total loss. Throws Error(kNumeric) and
// leaves the input untouched when a gradient is not finite.
PolicyParameters backward_and_step(const PolicyParameters& params, const A2CBatch& batch,
                                   double learning_rate, double entropy_coef = 0.0);
PolicyParameters apply_gradients(const PolicyParameters& params, const PolicyParameters& grads,
                                 double learning_rate);

// Adam moment estimates, one pair of tensors per parameter tensor.
struct AdamState {
  PolicyParameters m;
  PolicyParameters v;
  long long steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const PolicyParameters& params);
};

// One Adam step; same non-finite guard as apply_gradients.
PolicyParameters adam_step(const PolicyParameters& params, const PolicyParameters& grads, double learning_rate,
                           AdamState& state);

// (bins^2)^n_objects as a decimal string.
std::string action_space_size(int n_objects, const GridSpec& grid);

nlohmann::json policy_to_json(const PolicyParameters& params);
PolicyParameters policy_from_json(const nlohmann::json& j);
void save_policy(const std::string& path, const PolicyParameters& params, long long episodes = 0,
                 const AdamState* adam = nullptr);
PolicyParameters load_policy(const std::string& path, long long* episodes = nullptr, AdamState* adam = nullptr);

}  // namespace advgame
