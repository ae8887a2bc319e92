#pragma once

#include <cstdint>
#include <string>

#include "bayesrank/core.hpp"

namespace bayesrank {

// Conventional single-number metrics computed from the same trial logs as the
// posterior. Queries are every query the model has outcomes for.

/// Fraction of queries answered correctly on one trial.
double accuracy(const TrialLog& log, const std::string& model_id, std::uint32_t trial_index);

/// Fraction of queries with at least one correct outcome among trials
/// 0..n-1. This is plain any-success over recorded trials, not the unbiased
/// pass@k estimator.
double pass_at_n(const TrialLog& log, const std::string& model_id, std::uint32_t n);

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;    ///< sample standard deviation (O - 1 denominator)
  double std_error = 0.0;  ///< std_dev / sqrt(O)
};

/// Statistics of the per-trial accuracies a_1..a_O. Requires the same trial
/// count on every query and O >= 2.
MeanStd mean_std(const TrialLog& log, const std::string& model_id);

struct BaselineReport {
  std::string model_id;
  double accuracy_single = 0.0;
  std::uint32_t accuracy_trial = 0;
  double pass_at_n = 0.0;
  std::uint32_t pass_n = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
  std::uint32_t trials = 0;
};

BaselineReport baseline_report(const TrialLog& log, const std::string& model_id,
                               std::uint32_t pass_n, std::uint32_t accuracy_trial = 0);

}  // namespace bayesrank
