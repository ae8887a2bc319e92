// Likelihood table kernels: the OpenMP path used in production and the serial
// reference it is tested against.

#include <omp.h>

#include <vector>

#include "bayesrank/inference.hpp"

namespace bayesrank {

namespace {

int team_size(const LikelihoodOptions& options) {
  return options.threads > 0 ? options.threads : omp_get_max_threads();
}

}  // namespace

std::vector<double> interval_log_likelihoods(const CapabilityMatrix& matrix,
                                             const ObservationVector& aligned,
                                             const LikelihoodOptions& options) {
  const auto n_ext = static_cast<std::ptrdiff_t>(matrix.anchor_count() + 2);
  const std::size_t m = matrix.query_count();
  const bool coef = options.include_binomial_coefficient;

  // Endpoint log-likelihoods, one row per extended anchor (BOTTOM .. TOP).
  std::vector<double> table(static_cast<std::size_t>(n_ext) * m);
#pragma omp parallel for num_threads(team_size(options)) schedule(static)
  for (std::ptrdiff_t k = 0; k < n_ext; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (std::size_t j = 0; j < m; ++j) {
      table[ku * m + j] = log_binomial_pmf(aligned[j].trials, aligned[j].successes,
                                           endpoint_success_prob(matrix, ku, j), coef);
    }
  }

  const std::ptrdiff_t n_intervals = n_ext - 1;
  std::vector<double> out(static_cast<std::size_t>(n_intervals));
#pragma omp parallel for num_threads(team_size(options)) schedule(static)
  for (std::ptrdiff_t i = 0; i < n_intervals; ++i) {
    const double* lower = table.data() + static_cast<std::size_t>(i) * m;
    const double* upper = lower + m;
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += log_average_exp(lower[j], upper[j]);
    out[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

namespace reference {

std::vector<double> interval_log_likelihoods(const CapabilityMatrix& matrix,
                                             const ObservationVector& aligned,
                                             const LikelihoodOptions& options) {
  std::vector<double> out(matrix.anchor_count() + 1, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < matrix.query_count(); ++j) {
      out[i] += multi_trial_query_log_likelihood(matrix, i, j, aligned[j].trials,
                                                 aligned[j].successes, options);
    }
  }
  return out;
}

}  // namespace reference

}  // namespace bayesrank
