#include "advgame/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advgame/error.hpp"

namespace advgame {

ConsistencyDrop consistency_and_drop(std::span<const RoundRecord> records, bool exclude_invalid) {
  if (records.empty()) throw Error(ErrorClass::kInvalidArgument, "no rounds to measure");
  std::size_t denom = 0;
  std::size_t changed = 0;
  std::size_t dropped = 0;
  for (const auto& r : records) {
    if (exclude_invalid && !r.valid()) continue;
    ++denom;
    if (r.changed()) {
      ++changed;
      if (answer_equal(r.old_answer, r.gt)) ++dropped;
    }
  }
  if (denom == 0) return {};
  return {static_cast<double>(changed) / denom, static_cast<double>(dropped) / denom};
}

double relative_drop(double x, double y) {
  if (!(x > 0.0)) throw Error(ErrorClass::kInvalidArgument, "baseline accuracy must be positive");
  return 100.0 * (x - y) / x;
}

double reported_relative_drop(double x, double y) {
  const double v = relative_drop(x, y);
  // The small bias keeps values such as 65.0 (stored as 64.99999...) from
  // truncating to the decimal below.
  const double scaled = v * 10.0;
  return std::trunc(scaled + std::copysign(1e-9, scaled)) / 10.0;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorClass::kNumeric, "incomplete beta did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorClass::kInvalidArgument, "beta parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorClass::kInvalidArgument, "incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_upper(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorClass::kInvalidArgument, "degrees of freedom must be positive");
  if (std::isnan(t)) throw Error(ErrorClass::kNumeric, "t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTest one_sample_t_test(std::span<const double> samples, double mu0) {
  if (samples.size() < 2) throw Error(ErrorClass::kInvalidArgument, "t-test needs at least two samples");
  TTest r;
  r.n = samples.size();
  const double n = static_cast<double>(r.n);
  r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / (n - 1.0));
  if (r.stddev == 0.0) {
    const double diff = r.mean - mu0;
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p = diff > 0 ? 0.0 : 1.0;
    return r;
  }
  r.t = (r.mean - mu0) / (r.stddev / std::sqrt(n));
  r.p = student_t_upper(r.t, n - 1.0);
  return r;
}

TrialResult trial_from_records(std::span<const RoundRecord> records, int minigame, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorClass::kInvalidArgument, "trial has no rounds");
  TrialResult t;
  t.minigame = minigame;
  t.seed = seed;
  const auto cd = consistency_and_drop(records);
  t.consistency_drop = cd.consistency;
  t.accuracy_drop = cd.drop;
  std::size_t pre = 0;
  std::size_t post = 0;
  for (const auto& r : records) {
    if (answer_equal(r.old_answer, r.gt)) ++pre;
    const Answer& after = r.valid() ? *r.new_answer : r.old_answer;
    if (answer_equal(after, r.gt)) ++post;
  }
  t.pre_accuracy = 100.0 * static_cast<double>(pre) / records.size();
  t.post_accuracy = 100.0 * static_cast<double>(post) / records.size();
  return t;
}

AggregateReport aggregate(std::span<const TrialResult> trials) {
  if (trials.empty()) throw Error(ErrorClass::kInvalidArgument, "no trials to aggregate");
  AggregateReport r;
  r.trials = trials.size();
  std::vector<double> cons;
  std::vector<double> drops;
  r.maximal_accuracy = trials.front().post_accuracy;
  for (const auto& t : trials) {
    r.pre_accuracy += t.pre_accuracy;
    r.average_accuracy += t.post_accuracy;
    r.maximal_accuracy = std::min(r.maximal_accuracy, t.post_accuracy);
    cons.push_back(t.consistency_drop);
    drops.push_back(t.accuracy_drop);
  }
  const double n = static_cast<double>(trials.size());
  r.pre_accuracy /= n;
  r.average_accuracy /= n;
  r.mean_consistency = std::accumulate(cons.begin(), cons.end(), 0.0) / n;
  r.mean_drop = std::accumulate(drops.begin(), drops.end(), 0.0) / n;
  if (r.pre_accuracy > 0.0) {
    r.relative_drop_average = reported_relative_drop(r.pre_accuracy, r.average_accuracy);
    r.relative_drop_maximal = reported_relative_drop(r.pre_accuracy, r.maximal_accuracy);
  }
  if (trials.size() >= 2) {
    r.consistency_test = one_sample_t_test(cons);
    r.drop_test = one_sample_t_test(drops);
  } else {
    r.consistency_test.n = r.drop_test.n = 1;
    r.consistency_test.mean = cons[0];
    r.drop_test.mean = drops[0];
  }
  return r;
}

std::vector<HistogramBin> histogram(std::span<const double> values, int bins) {
  if (bins <= 0) throw Error(ErrorClass::kInvalidArgument, "histogram needs at least one bin");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    out[k].lo = static_cast<double>(k) / bins;
    out[k].hi = static_cast<double>(k + 1) / bins;
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorClass::kInvalidArgument, "histogram value outside [0, 1]");
    int k = static_cast<int>(std::floor(v * bins));
    if (k >= bins) k = bins - 1;
    ++out[k].count;
  }
  return out;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string report_csv(const AggregateReport& r, std::span<const TrialResult> trials) {
  std::ostringstream out;
  out << "# average accuracy = per-trial mean of post-manipulation accuracy; maximal = worst trial\n";
  out << "trials,pre_accuracy,average_accuracy,maximal_accuracy,relative_drop_average,relative_drop_maximal,"
         "mean_consistency,mean_drop,p_consistency,p_drop\n";
  out << r.trials << ',' << fmt("%.1f", r.pre_accuracy) << ',' << fmt("%.1f", r.average_accuracy) << ','
      << fmt("%.1f", r.maximal_accuracy) << ',' << fmt("%.1f", r.relative_drop_average) << ','
      << fmt("%.1f", r.relative_drop_maximal) << ',' << fmt("%.4f", r.mean_consistency) << ','
      << fmt("%.4f", r.mean_drop) << ',' << fmt("%.3f", r.consistency_test.p) << ','
      << fmt("%.3f", r.drop_test.p) << '\n';
  out << "\nminigame,seed,consistency,drop,pre_accuracy,post_accuracy\n";
  for (const auto& t : trials) {
    out << t.minigame << ',' << t.seed << ',' << fmt("%.4f", t.consistency_drop) << ','
        << fmt("%.4f", t.accuracy_drop) << ',' << fmt("%.1f", t.pre_accuracy) << ','
        << fmt("%.1f", t.post_accuracy) << '\n';
  }
  return out.str();
}

nlohmann::json report_json(const AggregateReport& r, std::span<const TrialResult> trials) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& t : trials) {
    rows.push_back({{"minigame", t.minigame},
                    {"seed", t.seed},
                    {"consistency", t.consistency_drop},
                    {"drop", t.accuracy_drop},
                    {"pre_accuracy", t.pre_accuracy},
                    {"post_accuracy", t.post_accuracy}});
  }
  return json{{"trials", r.trials},
              {"pre_accuracy", r.pre_accuracy},
              {"average_accuracy", r.average_accuracy},
              {"maximal_accuracy", r.maximal_accuracy},
              {"relative_drop_average", r.relative_drop_average},
              {"relative_drop_maximal", r.relative_drop_maximal},
              {"mean_consistency", r.mean_consistency},
              {"mean_drop", r.mean_drop},
              {"p_consistency", r.consistency_test.p},
              {"p_drop", r.drop_test.p},
              {"per_trial", rows}};
}

}  // namespace advgame
