#include "advgame/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr int kQuestionType = kAttributeSlots;  // row of emb_type used by question tokens

void fill_uniform(MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

VectorXd relu(const VectorXd& z) { return z.cwiseMax(0.0); }

VectorXd relu_mask(const VectorXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

void require_finite(const VectorXd& v, const char* layer) {
  if (!v.allFinite()) {
    throw Error(ErrorClass::kNumeric, std::string("non-finite activation in layer ") + layer);
  }
}

const MatrixXd& table_for_slot(const PolicyParameters& p, int slot) {
  switch (slot) {
    case 0: return p.emb_x;
    case 1: return p.emb_y;
    case 2: return p.emb_shape;
    case 3: return p.emb_color;
    case 4: return p.emb_size;
    default: return p.emb_material;
  }
}

MatrixXd& table_for_slot(PolicyParameters& p, int slot) {
  return const_cast<MatrixXd&>(table_for_slot(static_cast<const PolicyParameters&>(p), slot));
}

struct Activations {
  VectorXd x;
  VectorXd z1, h1, z2, h2;
  VectorXd za, a, logits;
  VectorXd zc1, c1, zc2, c2;
  double s = 0.0;
  PolicyOutput out;
};

Activations run_forward(const PolicyParameters& p, const TokenSequence& tokens) {
  const auto& cfg = p.config;
  const int e = cfg.embed_dim;
  const int n = cfg.bins;
  Activations act;
  act.x = VectorXd::Zero((kMaxObjects + 1) * e);

  for (int i = 0; i < kMaxObjects; ++i) {
    const int* slot = tokens.ids.data() + i * kAttributeSlots;
    if (i >= tokens.n_objects) break;
    auto chunk = act.x.segment(i * e, e);
    for (int k = 0; k < kAttributeSlots; ++k) {
      const auto& table = table_for_slot(p, k);
      if (slot[k] < 0 || slot[k] >= table.rows()) {
        throw Error(ErrorClass::kInvalidArgument, "token out of range for its embedding table");
      }
      chunk += table.row(slot[k]).transpose() + p.emb_type.row(k).transpose();
    }
  }
  int m = 0;
  auto q = act.x.segment(kMaxObjects * e, e);
  for (int t = 0; t < std::min(tokens.n_question, kQuestionTokens); ++t) {
    int tok = tokens.ids[kObjectTokens + t];
    if (tok < 0 || tok >= p.emb_question.rows()) {
      throw Error(ErrorClass::kInvalidArgument, "question token out of range");
    }
    q += p.emb_question.row(tok).transpose() + p.emb_type.row(kQuestionType).transpose();
    ++m;
  }
  if (m > 0) q /= m;
  require_finite(act.x, "embedding");

  act.z1 = p.trunk_w1 * act.x + p.trunk_b1.col(0);
  act.h1 = relu(act.z1);
  require_finite(act.h1, "trunk_1");
  act.z2 = p.trunk_w2 * act.h1 + p.trunk_b2.col(0);
  act.h2 = relu(act.z2);
  require_finite(act.h2, "trunk_2");

  act.za = p.actor_w * act.h2 + p.actor_b.col(0);
  act.a = relu(act.za);
  act.logits = p.head_w * act.a + p.head_b.col(0);
  require_finite(act.logits, "actor_heads");
  for (int h = 0; h < kHeadOutputs; ++h) {
    VectorXd z = act.logits.segment(h * n, n);
    z.array() -= z.maxCoeff();
    VectorXd ez = z.array().exp();
    act.out.dists[h] = ez / ez.sum();
  }

  act.zc1 = p.critic_w1 * act.h2 + p.critic_b1.col(0);
  act.c1 = relu(act.zc1);
  act.zc2 = p.critic_w2 * act.c1 + p.critic_b2.col(0);
  act.c2 = relu(act.zc2);
  act.s = (p.critic_w3 * act.c2)(0) + p.critic_b3(0, 0);
  act.out.state_value = kCriticScale * std::tanh(act.s);
  if (!std::isfinite(act.out.state_value)) {
    throw Error(ErrorClass::kNumeric, "non-finite activation in layer critic");
  }
  return act;
}

// Accumulates d(loss)/d(params) for one record into `g`, given the gradient
// of the loss w.r.t. the head logits and the state value.
void backprop(const PolicyParameters& p, const TokenSequence& tokens, const Activations& act,
              const VectorXd& d_logits, double d_value, PolicyParameters& g) {
  const int e = p.config.embed_dim;

  g.head_w.noalias() += d_logits * act.a.transpose();
  g.head_b.col(0) += d_logits;
  VectorXd d_za = (p.head_w.transpose() * d_logits).cwiseProduct(relu_mask(act.za));
  g.actor_w.noalias() += d_za * act.h2.transpose();
  g.actor_b.col(0) += d_za;
  VectorXd d_h2 = p.actor_w.transpose() * d_za;

  const double th = std::tanh(act.s);
  const double d_s = d_value * kCriticScale * (1.0 - th * th);
  g.critic_w3.noalias() += d_s * act.c2.transpose();
  g.critic_b3(0, 0) += d_s;
  VectorXd d_zc2 = (p.critic_w3.transpose() * d_s).col(0).cwiseProduct(relu_mask(act.zc2));
  g.critic_w2.noalias() += d_zc2 * act.c1.transpose();
  g.critic_b2.col(0) += d_zc2;
  VectorXd d_zc1 = (p.critic_w2.transpose() * d_zc2).cwiseProduct(relu_mask(act.zc1));
  g.critic_w1.noalias() += d_zc1 * act.h2.transpose();
  g.critic_b1.col(0) += d_zc1;
  if (!p.config.detach_critic) d_h2 += p.critic_w1.transpose() * d_zc1;

  VectorXd d_z2 = d_h2.cwiseProduct(relu_mask(act.z2));
  g.trunk_w2.noalias() += d_z2 * act.h1.transpose();
  g.trunk_b2.col(0) += d_z2;
  VectorXd d_z1 = (p.trunk_w2.transpose() * d_z2).cwiseProduct(relu_mask(act.z1));
  g.trunk_w1.noalias() += d_z1 * act.x.transpose();
  g.trunk_b1.col(0) += d_z1;
  VectorXd d_x = p.trunk_w1.transpose() * d_z1;

  for (int i = 0; i < kMaxObjects; ++i) {
    const int* slot = tokens.ids.data() + i * kAttributeSlots;
    if (i >= tokens.n_objects) break;
    auto chunk = d_x.segment(i * e, e).transpose();
    for (int k = 0; k < kAttributeSlots; ++k) {
      table_for_slot(g, k).row(slot[k]) += chunk;
      g.emb_type.row(k) += chunk;
    }
  }
  const int m = std::min(tokens.n_question, kQuestionTokens);
  if (m > 0) {
    auto chunk = (d_x.segment(kMaxObjects * e, e) / m).transpose();
    for (int t = 0; t < m; ++t) {
      int tok = tokens.ids[kObjectTokens + t];
      g.emb_question.row(tok) += chunk;
      g.emb_type.row(kQuestionType) += chunk;
    }
  }
}

}  // namespace

PolicyConfig PolicyConfig::for_vocab(const AttributeVocab& attrs, const QuestionVocab& qvocab,
                                     const GridSpec& grid) {
  PolicyConfig cfg;
  cfg.bins = grid.bins;
  cfg.shapes = static_cast<int>(attrs.shapes.size());
  cfg.colors = static_cast<int>(attrs.colors.size());
  cfg.sizes = static_cast<int>(attrs.sizes.size());
  cfg.materials = static_cast<int>(attrs.materials.size());
  cfg.question_vocab = qvocab.size();
  return cfg;
}

void PolicyConfig::validate() const {
  if (embed_dim < 1 || hidden < 1 || bins < 2 || shapes < 1 || colors < 1 || sizes < 1 ||
      materials < 1 || question_vocab < 1) {
    throw Error(ErrorClass::kInvalidConfig, "policy dimensions must be positive (bins >= 2)");
  }
}

PolicyParameters PolicyParameters::initialize(const PolicyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  PolicyParameters p;
  p.config = cfg;
  const int e = cfg.embed_dim;
  const int h = cfg.hidden;
  const int in = (kMaxObjects + 1) * e;

  auto embed = [&](MatrixXd& m, int rows) {
    m.resize(rows, e);
    fill_uniform(m, 1.0 / std::sqrt(static_cast<double>(e)), rng);
  };
  embed(p.emb_x, cfg.bins);
  embed(p.emb_y, cfg.bins);
  embed(p.emb_shape, cfg.shapes);
  embed(p.emb_color, cfg.colors);
  embed(p.emb_size, cfg.sizes);
  embed(p.emb_material, cfg.materials);
  embed(p.emb_question, cfg.question_vocab);
  embed(p.emb_type, kAttributeSlots + 1);

  auto dense = [&](MatrixXd& w, MatrixXd& b, int out, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    w.resize(out, fan_in);
    b.resize(out, 1);
    fill_uniform(w, bound, rng);
    fill_uniform(b, bound, rng);
  };
  dense(p.trunk_w1, p.trunk_b1, h, in);
  dense(p.trunk_w2, p.trunk_b2, h, h);
  dense(p.actor_w, p.actor_b, h, h);
  p.head_w = MatrixXd::Zero(kHeadOutputs * cfg.bins, h);
  p.head_b = MatrixXd::Zero(kHeadOutputs * cfg.bins, 1);
  dense(p.critic_w1, p.critic_b1, h, h);
  dense(p.critic_w2, p.critic_b2, h, h);
  dense(p.critic_w3, p.critic_b3, 1, h);
  return p;
}

PolicyParameters PolicyParameters::zeros_like(const PolicyParameters& other) {
  PolicyParameters z = other;
  z.for_each_tensor([](const char*, MatrixXd& m) { m.setZero(); });
  return z;
}

std::size_t PolicyParameters::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const char*, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

PolicyOutput forward(const PolicyParameters& params, const TokenSequence& tokens) {
  return run_forward(params, tokens).out;
}

ActionSample sample(const std::array<VectorXd, kHeadOutputs>& dists, Rng& rng, int active_heads) {
  ActionSample s;
  s.bins.fill(-1);
  for (int h = 0; h < kHeads; ++h) {
    if (h >= active_heads) continue;
    const int n = static_cast<int>(dists[2 * h].size());
    const int center = n / 2;
    int bx = static_cast<int>(rng.categorical({dists[2 * h].data(), static_cast<std::size_t>(n)}));
    int by = static_cast<int>(rng.categorical({dists[2 * h + 1].data(), static_cast<std::size_t>(n)}));
    s.bins[2 * h] = bx;
    s.bins[2 * h + 1] = by;
    s.log_prob += std::log(dists[2 * h](bx)) + std::log(dists[2 * h + 1](by));
    s.displacement.moves[h] = BinOffset{bx - center, by - center};
  }
  return s;
}

std::array<int, kHeadOutputs> bins_for(const Displacement& d, int bins) {
  std::array<int, kHeadOutputs> out;
  out.fill(-1);
  const int center = bins / 2;
  for (int h = 0; h < kHeads; ++h) {
    if (!d.moves[h]) continue;
    const int bx = d.moves[h]->dx + center;
    const int by = d.moves[h]->dy + center;
    if (bx < 0 || bx >= bins || by < 0 || by >= bins) {
      throw Error(ErrorClass::kInvalidArgument, "displacement outside the action space");
    }
    out[2 * h] = bx;
    out[2 * h + 1] = by;
  }
  return out;
}

double log_prob_of(const std::array<VectorXd, kHeadOutputs>& dists,
                   const std::array<int, kHeadOutputs>& bins) {
  double lp = 0.0;
  for (int k = 0; k < kHeadOutputs; ++k) {
    if (bins[k] >= 0) lp += std::log(dists[k](bins[k]));
  }
  return lp;
}

void A2CBatch::validate() const {
  if (records.empty()) throw Error(ErrorClass::kInvalidArgument, "empty A2C batch");
  for (const auto& r : records) {
    if (!std::isfinite(r.reward) || !std::isfinite(r.state_value) || !std::isfinite(r.log_prob)) {
      throw Error(ErrorClass::kNumeric, "non-finite value in A2C batch");
    }
  }
}

A2CLosses a2c_losses(const A2CBatch& batch) {
  batch.validate();
  const double n = static_cast<double>(batch.records.size());
  A2CLosses l;
  for (const auto& r : batch.records) {
    const double advantage = r.reward - r.state_value;
    l.policy += -r.log_prob * advantage;
    l.value += (r.state_value - r.reward) * (r.state_value - r.reward) / n;
  }
  l.total = l.policy + l.value;
  return l;
}

namespace {

// Entropy summed over the active heads of one record.
double action_entropy(const std::array<VectorXd, kHeadOutputs>& dists, const std::array<int, kHeadOutputs>& action) {
  double h = 0.0;
  for (int k = 0; k < kHeadOutputs; ++k) {
    if (action[k] < 0) continue;
    for (Eigen::Index j = 0; j < dists[k].size(); ++j) {
      const double p = dists[k](j);
      if (p > 0.0) h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

A2CLosses a2c_objective(const PolicyParameters& params, const A2CBatch& batch,
                        const std::vector<double>& advantages, double entropy_coef) {
  batch.validate();
  const double n = static_cast<double>(batch.records.size());
  A2CLosses l;
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const auto& r = batch.records[i];
    auto out = forward(params, r.tokens);
    l.policy += -log_prob_of(out.dists, r.action) * advantages.at(i);
    l.value += (out.state_value - r.reward) * (out.state_value - r.reward) / n;
    l.entropy += action_entropy(out.dists, r.action);
  }
  l.total = l.policy + l.value - entropy_coef * l.entropy;
  return l;
}

Gradients compute_gradients(const PolicyParameters& params, const A2CBatch& batch, double entropy_coef) {
  batch.validate();
  const int nb = params.config.bins;
  const double n = static_cast<double>(batch.records.size());
  Gradients out{PolicyParameters::zeros_like(params), {}, {}};
  for (const auto& r : batch.records) {
    Activations act = run_forward(params, r.tokens);
    const double v = act.out.state_value;
    // The advantage is a constant in the policy term (stop-gradient on values).
    const double advantage = r.reward - v;
    out.advantages.push_back(advantage);
    const double lp = log_prob_of(act.out.dists, r.action);
    out.losses.policy += -lp * advantage;
    out.losses.value += (v - r.reward) * (v - r.reward) / n;
    out.losses.entropy += action_entropy(act.out.dists, r.action);

    VectorXd d_logits = VectorXd::Zero(kHeadOutputs * nb);
    for (int k = 0; k < kHeadOutputs; ++k) {
      if (r.action[k] < 0) continue;
      const VectorXd& p = act.out.dists[k];
      auto seg = d_logits.segment(k * nb, nb);
      seg = advantage * p;
      seg(r.action[k]) -= advantage;
      if (entropy_coef != 0.0) {
        // d(-H)/dz_j = p_j (log p_j + H)
        double h = 0.0;
        for (Eigen::Index j = 0; j < nb; ++j) h -= p(j) > 0.0 ? p(j) * std::log(p(j)) : 0.0;
        for (Eigen::Index j = 0; j < nb; ++j) {
          seg(j) += entropy_coef * (p(j) > 0.0 ? p(j) * (std::log(p(j)) + h) : 0.0);
        }
      }
    }
    backprop(params, r.tokens, act, d_logits, 2.0 * (v - r.reward) / n, out.grads);
  }
  out.losses.total = out.losses.policy + out.losses.value - entropy_coef * out.losses.entropy;
  return out;
}

PolicyParameters apply_gradients(const PolicyParameters& params, const PolicyParameters& grads,
                                 double learning_rate) {
  grads.for_each_tensor([](const char* name, const MatrixXd& g) {
    if (!g.allFinite()) {
      throw Error(ErrorClass::kNumeric, std::string("non-finite gradient for ") + name);
    }
  });
  PolicyParameters next = params;
  std::vector<const MatrixXd*> gs;
  grads.for_each_tensor([&](const char*, const MatrixXd& g) { gs.push_back(&g); });
  std::size_t i = 0;
  next.for_each_tensor([&](const char*, MatrixXd& m) { m -= learning_rate * *gs[i++]; });
  return next;
}

PolicyParameters backward_and_step(const PolicyParameters& params, const A2CBatch& batch,
                                   double learning_rate, double entropy_coef) {
  auto g = compute_gradients(params, batch, entropy_coef);
  if (!std::isfinite(g.losses.total)) throw Error(ErrorClass::kNumeric, "non-finite A2C loss");
  return apply_gradients(params, g.grads, learning_rate);
}

AdamState AdamState::for_params(const PolicyParameters& params) {
  AdamState s;
  s.m = PolicyParameters::zeros_like(params);
  s.v = PolicyParameters::zeros_like(params);
  return s;
}

PolicyParameters adam_step(const PolicyParameters& params, const PolicyParameters& grads, double learning_rate,
                           AdamState& state) {
  grads.for_each_tensor([](const char* name, const MatrixXd& g) {
    if (!g.allFinite()) {
      throw Error(ErrorClass::kNumeric, std::string("non-finite gradient for ") + name);
    }
  });
  std::vector<const MatrixXd*> gs;
  std::vector<MatrixXd*> ms;
  std::vector<MatrixXd*> vs;
  grads.for_each_tensor([&](const char*, const MatrixXd& g) { gs.push_back(&g); });
  state.m.for_each_tensor([&](const char*, MatrixXd& m) { ms.push_back(&m); });
  state.v.for_each_tensor([&](const char*, MatrixXd& v) { vs.push_back(&v); });
  ++state.steps;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.steps));
  PolicyParameters next = params;
  std::size_t i = 0;
  next.for_each_tensor([&](const char*, MatrixXd& p) {
    const MatrixXd& g = *gs[i];
    MatrixXd& m = *ms[i];
    MatrixXd& v = *vs[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    ++i;
  });
  return next;
}

std::string action_space_size(int n_objects, const GridSpec& grid) {
  if (n_objects < 1 || n_objects > kMaxObjects) {
    throw Error(ErrorClass::kInvalidArgument, "object count must be in 1..10");
  }
  grid.validate();
  // Little-endian base-10 digits.
  std::vector<int> digits{1};
  const int factor = grid.bins * grid.bins;
  for (int k = 0; k < n_objects; ++k) {
    int carry = 0;
    for (auto& d : digits) {
      int v = d * factor + carry;
      d = v % 10;
      carry = v / 10;
    }
    while (carry > 0) {
      digits.push_back(carry % 10);
      carry /= 10;
    }
  }
  std::string s;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) s.push_back(static_cast<char>('0' + *it));
  return s;
}

json policy_to_json(const PolicyParameters& params) {
  const auto& c = params.config;
  json tensors = json::array();
  params.for_each_tensor([&](const char* name, const MatrixXd& m) {
    std::vector<double> data(m.data(), m.data() + m.size());  // column-major
    tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", data}});
  });
  return {
      {"format", "advgame-policy"},
      {"version", 1},
      {"config",
       {{"embed_dim", c.embed_dim},
        {"hidden", c.hidden},
        {"bins", c.bins},
        {"shapes", c.shapes},
        {"colors", c.colors},
        {"sizes", c.sizes},
        {"materials", c.materials},
        {"question_vocab", c.question_vocab},
        {"detach_critic", c.detach_critic}}},
      {"tensors", tensors},
  };
}

PolicyParameters policy_from_json(const json& j) {
  try {
    if (j.at("format") != "advgame-policy" || j.at("version") != 1) {
      throw Error(ErrorClass::kParse, "unsupported checkpoint format");
    }
    const auto& jc = j.at("config");
    PolicyConfig c;
    c.embed_dim = jc.at("embed_dim");
    c.hidden = jc.at("hidden");
    c.bins = jc.at("bins");
    c.shapes = jc.at("shapes");
    c.colors = jc.at("colors");
    c.sizes = jc.at("sizes");
    c.materials = jc.at("materials");
    c.question_vocab = jc.at("question_vocab");
    c.detach_critic = jc.at("detach_critic");
    PolicyParameters p = PolicyParameters::initialize(c, 0);
    const auto& tensors = j.at("tensors");
    std::size_t i = 0;
    p.for_each_tensor([&](const char* name, MatrixXd& m) {
      if (i >= tensors.size()) throw Error(ErrorClass::kParse, "checkpoint is missing tensors");
      const auto& t = tensors[i++];
      if (t.at("name") != name || t.at("shape")[0] != m.rows() || t.at("shape")[1] != m.cols()) {
        throw Error(ErrorClass::kParse, std::string("checkpoint tensor mismatch at ") + name);
      }
      auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw Error(ErrorClass::kParse, std::string("wrong element count for ") + name);
      }
      std::copy(data.begin(), data.end(), m.data());
    });
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, std::string("bad checkpoint: ") + e.what());
  }
}

void save_policy(const std::string& path, const PolicyParameters& params, long long episodes,
                 const AdamState* adam) {
  json j = policy_to_json(params);
  j["episodes"] = episodes;
  if (adam) {
    j["adam"] = {{"steps", adam->steps},
                 {"beta1", adam->beta1},
                 {"beta2", adam->beta2},
                 {"epsilon", adam->epsilon},
                 {"m", policy_to_json(adam->m)},
                 {"v", policy_to_json(adam->v)}};
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorClass::kNotFound, "cannot write checkpoint " + path);
  out << j.dump() << '\n';
}

PolicyParameters load_policy(const std::string& path, long long* episodes, AdamState* adam) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorClass::kNotFound, "cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kParse, path + ": " + e.what());
  }
  if (episodes) *episodes = j.value("episodes", 0LL);
  PolicyParameters p = policy_from_json(j);
  if (adam) {
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      adam->steps = a.at("steps").get<long long>();
      adam->beta1 = a.at("beta1").get<double>();
      adam->beta2 = a.at("beta2").get<double>();
      adam->epsilon = a.at("epsilon").get<double>();
      adam->m = policy_from_json(a.at("m"));
      adam->v = policy_from_json(a.at("v"));
    } else {
      *adam = AdamState::for_params(p);
    }
  }
  return p;
}

}  // namespace advgame
