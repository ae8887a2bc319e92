#include "bayesrank/baselines.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace bayesrank {

namespace {

// outcome[query][trial]: -1 missing, 0 wrong, 1 right.
using OutcomeGrid = std::map<std::string, std::vector<int>>;

OutcomeGrid outcomes_for(const TrialLog& log, const std::string& model_id) {
  OutcomeGrid grid;
  for (const auto& r : log.records) {
    if (r.model_id != model_id) continue;
    auto& row = grid[r.query_id];
    if (row.size() <= r.trial_index) row.resize(r.trial_index + 1, -1);
    if (row[r.trial_index] != -1) {
      throw ValidationError("duplicate trial record (" + r.model_id + ", " + r.query_id + ", " +
                            std::to_string(r.trial_index) + ")");
    }
    row[r.trial_index] = r.correct ? 1 : 0;
  }
  if (grid.empty()) throw ValidationError("no outcomes for model '" + model_id + "'");
  return grid;
}

void require_trial(const std::string& model_id, const std::string& query_id,
                   const std::vector<int>& row, std::uint32_t t) {
  if (t >= row.size() || row[t] < 0) {
    throw ValidationError("model '" + model_id + "' has no outcome for query '" + query_id +
                          "' at trial " + std::to_string(t));
  }
}

}  // namespace

double accuracy(const TrialLog& log, const std::string& model_id, std::uint32_t trial_index) {
  const OutcomeGrid grid = outcomes_for(log, model_id);
  std::size_t correct = 0;
  for (const auto& [query, row] : grid) {
    require_trial(model_id, query, row, trial_index);
    correct += static_cast<std::size_t>(row[trial_index]);
  }
  return static_cast<double>(correct) / static_cast<double>(grid.size());
}

double pass_at_n(const TrialLog& log, const std::string& model_id, std::uint32_t n) {
  if (n == 0) throw ValidationError("pass@n needs n >= 1");
  const OutcomeGrid grid = outcomes_for(log, model_id);
  std::size_t passed = 0;
  for (const auto& [query, row] : grid) {
    bool any = false;
    for (std::uint32_t t = 0; t < n; ++t) {
      require_trial(model_id, query, row, t);
      any = any || row[t] == 1;
    }
    passed += any ? 1 : 0;
  }
  return static_cast<double>(passed) / static_cast<double>(grid.size());
}

MeanStd mean_std(const TrialLog& log, const std::string& model_id) {
  const OutcomeGrid grid = outcomes_for(log, model_id);
  const std::size_t trials = grid.begin()->second.size();
  for (const auto& [query, row] : grid) {
    if (row.size() != trials) {
      throw ValidationError("model '" + model_id + "' has ragged trial counts (query '" + query +
                            "' has " + std::to_string(row.size()) + ", expected " +
                            std::to_string(trials) + ")");
    }
    for (std::uint32_t t = 0; t < trials; ++t) require_trial(model_id, query, row, t);
  }
  if (trials < 2) throw ValidationError("mean/std needs at least 2 trials per query");

  // Welford over per-trial accuracies.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t correct = 0;
    for (const auto& [query, row] : grid) correct += static_cast<std::size_t>(row[t]);
    const double a = static_cast<double>(correct) / static_cast<double>(grid.size());
    const double delta = a - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (a - mean);
  }
  MeanStd out;
  out.mean = mean;
  out.std_dev = std::sqrt(m2 / static_cast<double>(trials - 1));
  out.std_error = out.std_dev / std::sqrt(static_cast<double>(trials));
  return out;
}

BaselineReport baseline_report(const TrialLog& log, const std::string& model_id,
                               std::uint32_t pass_n, std::uint32_t accuracy_trial) {
  BaselineReport r;
  r.model_id = model_id;
  r.accuracy_trial = accuracy_trial;
  r.accuracy_single = accuracy(log, model_id, accuracy_trial);
  r.pass_n = pass_n;
  r.pass_at_n = pass_at_n(log, model_id, pass_n);
  const MeanStd ms = mean_std(log, model_id);
  r.mean = ms.mean;
  r.std_dev = ms.std_dev;
  r.std_error = ms.std_error;
  r.trials = static_cast<std::uint32_t>(outcomes_for(log, model_id).begin()->second.size());
  return r;
}

}  // namespace bayesrank
