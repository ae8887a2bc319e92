#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bayesrank/core.hpp"
#include "bayesrank/inference.hpp"

namespace bayesrank {

enum class DifficultyProfile {
  uniform,                ///< every query of anchor i succeeds with probability theta_i
  evenly_spaced_anchors,  ///< logistic query difficulties, rows solved to hit evenly spaced theta
  from_matrix,            ///< use SimulationConfig::matrix as given
};

/// How the synthetic test model's per-query probability is placed between the
/// two bracketing anchors.
enum class TestModelLink {
  linear,    ///< linear in theta; identical to the inference model
  logistic,  ///< linear in log-odds between empirical anchors (model-mismatch mode)
};

enum class QuerySubset {
  first,   ///< the first m queries
  random,  ///< a fresh random m-subset per replication
};

inline constexpr const char* kSimulatedModelId = "test";

struct SimulationConfig {
  std::uint32_t n_anchors = 6;
  std::uint32_t n_queries = 50;
  std::uint32_t trials_per_cell = 10;
  double true_theta = 0.5;
  DifficultyProfile difficulty_profile = DifficultyProfile::evenly_spaced_anchors;
  std::uint64_t seed = 0;
  std::uint32_t replications = 100;
  std::vector<std::uint32_t> m_schedule{50, 30, 20, 10, 5};

  double span_low = 0.14;
  double span_high = 0.82;
  /// Share of queries whose success probability rises strictly down the
  /// anchor ladder; the rest are flat across anchors.
  double discriminative_fraction = 1.0;
  /// Half-width of the uniform log-odds difficulty offsets.
  double difficulty_spread = 2.5;
  double epsilon = kDefaultEpsilon;
  TestModelLink link = TestModelLink::linear;
  QuerySubset subset = QuerySubset::first;
  std::optional<CapabilityMatrix> matrix;
  /// 0 uses the OpenMP default. Never changes the results.
  int threads = 0;

  /// Throws ValidationError on an inconsistent configuration.
  void validate() const;
};

struct ReplicationRecord {
  std::uint32_t m = 0;
  std::uint32_t replication = 0;
  std::size_t argmax = 0;
  double peak = 0.0;
  bool recovered = false;
  std::vector<double> posterior;
};

struct MSummary {
  std::uint32_t m = 0;
  double recovery_rate = 0.0;
  double mean_peak = 0.0;
  /// Mean posterior vector over replications.
  std::vector<double> mean_posterior;
};

struct SimulationReport {
  SimulationConfig config;
  std::vector<AnchorModel> anchors;
  std::size_t true_interval = 0;
  std::string true_lower_anchor;
  std::string true_upper_anchor;
  /// Ordered by m (schedule order), then replication.
  std::vector<ReplicationRecord> records;
  std::vector<MSummary> summaries;
};

/// Synthetic anchor ladder. Target thetas are evenly spaced over
/// [span_low, span_high] (the midpoint for a single anchor). Deterministic in
/// config.seed.
CapabilityMatrix synth_matrix(const SimulationConfig& config);

/// Per-query success probabilities of a model at `true_theta`, interpolated
/// between the bracketing rows of the extended ladder (0 below, 1 above).
std::vector<double> interpolated_success_probs(const CapabilityMatrix& matrix, double true_theta,
                                               TestModelLink link = TestModelLink::linear);

/// Index of the interval (theta_i, theta_{i+1}] containing `theta`.
std::size_t interval_containing(const CapabilityMatrix& matrix, double theta);

/// `trials` Bernoulli outcomes per query for a model at `true_theta`, recorded
/// under model id "test". trials == 0 yields an empty log.
TrialLog sample_test_model(const CapabilityMatrix& matrix, double true_theta,
                           std::uint32_t trials, std::uint64_t seed,
                           TestModelLink link = TestModelLink::linear);

/// Repeated sample-and-rank experiment over the query-count schedule.
/// Replications run in parallel; the report is identical for any thread count.
SimulationReport run_robustness(const SimulationConfig& config);

/// Sum over all 2^M single-trial outcome vectors of the evidence. Equals 1 for
/// any valid matrix. Limited to M <= 12.
double brute_force_evidence(const CapabilityMatrix& matrix);

namespace reference {

/// Serial run_robustness using the serial posterior.
SimulationReport run_robustness(const SimulationConfig& config);

}  // namespace reference

}  // namespace bayesrank
