#pragma once

// Test-only helpers: matrix builders, random generators and oracles that do
// not share code paths with the library's log-domain kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bayesrank/core.hpp"

namespace bayesrank::testing {

inline std::string anchor_name(std::size_t i) { return "A" + std::to_string(i + 1); }
inline std::string query_name(std::size_t j) { return "Q" + std::to_string(j + 1); }

/// Rows must already be in ascending row-mean order.
inline CapabilityMatrix make_matrix(const std::vector<std::vector<double>>& rows,
                                    double epsilon = 0.01, std::uint32_t trials = 10) {
  std::vector<std::string> a;
  std::vector<std::string> q;
  std::vector<double> p;
  for (std::size_t i = 0; i < rows.size(); ++i) a.push_back(anchor_name(i));
  for (std::size_t j = 0; j < rows.front().size(); ++j) q.push_back(query_name(j));
  for (const auto& r : rows) p.insert(p.end(), r.begin(), r.end());
  return CapabilityMatrix(a, q, p, trials, epsilon);
}

/// Random valid matrix: cells uniform on [eps, 1 - eps], rows sorted by mean.
inline CapabilityMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                      double epsilon = 0.01) {
  std::uniform_real_distribution<double> cell(epsilon, 1.0 - epsilon);
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (auto& r : rows) {
    for (auto& v : r) v = cell(rng);
  }
  auto mean = [](const std::vector<double>& r) {
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  };
  std::sort(rows.begin(), rows.end(),
            [&](const auto& x, const auto& y) { return mean(x) < mean(y); });
  return make_matrix(rows, epsilon);
}

inline ObservationVector make_obs(const CapabilityMatrix& matrix,
                                  const std::vector<std::uint32_t>& trials,
                                  const std::vector<std::uint32_t>& successes) {
  ObservationVector obs;
  for (std::size_t j = 0; j < matrix.query_count(); ++j) {
    obs.per_query.push_back({matrix.query_ids()[j], trials[j], successes[j]});
  }
  return obs;
}

/// Binomial pmf by direct multiplication; only for small O.
inline double binomial_pmf_linear(std::uint32_t o, std::uint32_t k, double p) {
  double coef = 1.0;
  for (std::uint32_t i = 1; i <= k; ++i) coef = coef * static_cast<double>(o - k + i) / i;
  return coef * std::pow(p, k) * std::pow(1.0 - p, o - k);
}

/// Linear-domain posterior straight from the interval-average definition.
/// Valid only where nothing underflows (small M and O).
inline std::vector<double> oracle_posterior(const CapabilityMatrix& matrix,
                                            const ObservationVector& obs) {
  const std::size_t n = matrix.anchor_count();
  std::vector<double> theta(n + 2);
  theta[0] = 0.0;
  theta[n + 1] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    theta[i + 1] = std::accumulate(matrix.row(i).begin(), matrix.row(i).end(), 0.0) /
                   static_cast<double>(matrix.query_count());
  }
  auto p_at = [&](std::size_t k, std::size_t j) {
    if (k == 0) return 0.0;
    if (k == n + 1) return 1.0;
    return matrix.prob(k - 1, j);
  };
  std::vector<double> joint(n + 1);
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    double lik = 1.0;
    for (std::size_t j = 0; j < matrix.query_count(); ++j) {
      const auto& e = obs[j];
      lik *= 0.5 * (binomial_pmf_linear(e.trials, e.successes, p_at(i, j)) +
                    binomial_pmf_linear(e.trials, e.successes, p_at(i + 1, j)));
    }
    joint[i] = lik * (theta[i + 1] - theta[i]);
    total += joint[i];
  }
  for (auto& v : joint) v /= total;
  return joint;
}

/// Linear-domain evidence (prior-weighted likelihood sum).
inline double oracle_evidence(const CapabilityMatrix& matrix, const ObservationVector& obs) {
  const std::size_t n = matrix.anchor_count();
  double prev = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double next = i == n ? 1.0 : matrix.theta(i);
    double lik = 1.0;
    for (std::size_t j = 0; j < matrix.query_count(); ++j) {
      const double lo = i == 0 ? 0.0 : matrix.prob(i - 1, j);
      const double hi = i == n ? 1.0 : matrix.prob(i, j);
      lik *= 0.5 * (binomial_pmf_linear(obs[j].trials, obs[j].successes, lo) +
                    binomial_pmf_linear(obs[j].trials, obs[j].successes, hi));
    }
    total += lik * (next - prev);
    prev = next;
  }
  return total;
}

/// Random per-model log with `trials` outcomes on each of `queries`.
inline TrialLog random_log(std::mt19937_64& rng, const std::string& model, std::size_t queries,
                           std::uint32_t trials, double p_correct = 0.5) {
  std::bernoulli_distribution coin(p_correct);
  TrialLog log;
  for (std::size_t j = 0; j < queries; ++j) {
    for (std::uint32_t t = 0; t < trials; ++t) {
      log.records.push_back({model, query_name(j), t, coin(rng)});
    }
  }
  return log;
}

}  // namespace bayesrank::testing
