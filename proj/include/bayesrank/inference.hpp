#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bayesrank/core.hpp"

namespace bayesrank {

inline constexpr const char* kBottomAnchorId = "BOTTOM";
inline constexpr const char* kTopAnchorId = "TOP";

/// Interval i is (theta_i, theta_{i+1}] on the extended ladder where
/// theta_0 = 0 (BOTTOM) and theta_{N+1} = 1 (TOP).
struct IntervalHypothesis {
  std::size_t index = 0;
  double lower_theta = 0.0;
  double upper_theta = 1.0;
  std::string lower_anchor_id;
  std::string upper_anchor_id;
};

struct IntervalPosterior {
  std::vector<IntervalHypothesis> hypotheses;
  std::vector<double> log_likelihood;
  std::vector<double> prior;
  std::vector<double> posterior;
  double evidence_log = 0.0;

  std::size_t size() const noexcept { return posterior.size(); }
  /// Index of the largest posterior entry (lowest index on ties).
  std::size_t argmax() const;
};

struct LikelihoodOptions {
  /// Keeps evidence_log a true marginal likelihood. Dropping it shifts every
  /// interval by the same constant, so the posterior does not change.
  bool include_binomial_coefficient = true;
  /// Threads for the likelihood table; 0 uses the OpenMP default.
  int threads = 0;
};

/// Hypotheses for the N+1 intervals of `matrix`.
std::vector<IntervalHypothesis> interval_hypotheses(const CapabilityMatrix& matrix);

/// Maximum-entropy prior: mass proportional to interval width on [0, 1].
std::vector<double> interval_prior(const CapabilityMatrix& matrix);

/// Pr(query correct | extended anchor k), k in 0..N+1, with the virtual
/// boundary anchors at exactly 0 and 1.
double endpoint_success_prob(const CapabilityMatrix& matrix, std::size_t extended_anchor,
                             std::size_t query);

/// Average of the two endpoint probabilities of observing `outcome`.
double single_trial_query_likelihood(const CapabilityMatrix& matrix, std::size_t interval,
                                     std::size_t query, bool outcome);

/// log C(trials, successes) + successes log p + failures log(1 - p), exact
/// at p = 0 and p = 1 (returns -inf for impossible outcomes, never NaN).
double log_binomial_pmf(std::uint32_t trials, std::uint32_t successes, double p,
                        bool include_coefficient = true);

/// log((exp(a) + exp(b)) / 2) without overflow or underflow; tolerates -inf.
double log_average_exp(double a, double b) noexcept;

/// Log of the averaged endpoint binomial likelihoods for one query.
double multi_trial_query_log_likelihood(const CapabilityMatrix& matrix, std::size_t interval,
                                        std::size_t query, std::uint32_t trials,
                                        std::uint32_t successes,
                                        const LikelihoodOptions& options = {});

/// Per-interval log-likelihood of the full observation vector (N+1 entries).
/// Parallel over anchors and intervals; each interval sums its queries in
/// column order, so the result does not depend on the thread count.
std::vector<double> interval_log_likelihoods(const CapabilityMatrix& matrix,
                                             const ObservationVector& aligned,
                                             const LikelihoodOptions& options = {});

/// Posterior over the N+1 capability intervals. `obs` is re-ordered to the
/// matrix columns first.
IntervalPosterior posterior(const CapabilityMatrix& matrix, const ObservationVector& obs,
                            const LikelihoodOptions& options = {});

/// Posterior mass strictly above `anchor_id`.
double exceedance(const IntervalPosterior& post, const std::string& anchor_id);

namespace reference {

/// Serial, unoptimized counterparts of the parallel kernels. Kept for tests
/// and the benchmark; results must match the parallel path bit for bit.
std::vector<double> interval_log_likelihoods(const CapabilityMatrix& matrix,
                                             const ObservationVector& aligned,
                                             const LikelihoodOptions& options = {});

IntervalPosterior posterior(const CapabilityMatrix& matrix, const ObservationVector& obs,
                            const LikelihoodOptions& options = {});

}  // namespace reference

}  // namespace bayesrank
