#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "advgame/game.hpp"

namespace advgame {

struct ConsistencyDrop {
  double consistency = 0.0;
  double drop = 0.0;
};

// consistency = valid rounds whose answer changed / rounds;
// drop = the subset where the old answer was correct / rounds.
// Rejected rounds count as unchanged unless exclude_invalid drops them from
// the denominator.
ConsistencyDrop consistency_and_drop(std::span<const RoundRecord> records, bool exclude_invalid = false);

// 100 (x - y) / x.
double relative_drop(double x, double y);
// relative_drop truncated to one decimal, the precision used in reports.
double reported_relative_drop(double x, double y);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_upper(double t, double df);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

// One-sided (greater) one-sample t-test. Zero variance gives p = 0 when the
// mean exceeds mu0 and p = 1 otherwise.
TTest one_sample_t_test(std::span<const double> samples, double mu0 = 0.0);

struct TrialResult {
  int minigame = 0;
  std::uint64_t seed = 0;
  double consistency_drop = 0.0;
  double accuracy_drop = 0.0;
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
};

// Accuracy of the old and new answers against gt; a rejected round keeps
// its old answer.
TrialResult trial_from_records(std::span<const RoundRecord> records, int minigame, std::uint64_t seed);

struct AggregateReport {
  std::size_t trials = 0;
  double pre_accuracy = 0.0;      // mean over trials, percent
  double average_accuracy = 0.0;  // mean post accuracy over trials, percent
  double maximal_accuracy = 0.0;  // worst post accuracy, percent
  double relative_drop_average = 0.0;
  double relative_drop_maximal = 0.0;
  double mean_consistency = 0.0;
  double mean_drop = 0.0;
  TTest consistency_test;
  TTest drop_test;
};

AggregateReport aggregate(std::span<const TrialResult> trials);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// `bins` equal-width bins partitioning [0, 1]; the last bin is closed.
std::vector<HistogramBin> histogram(std::span<const double> values, int bins);

std::string report_csv(const AggregateReport& report, std::span<const TrialResult> trials);
nlohmann::json report_json(const AggregateReport& report, std::span<const TrialResult> trials);

}  // namespace advgame
