#include "bayesrank/simulate.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "bayesrank/rng.hpp"

namespace bayesrank {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p) - std::log1p(-p); }

std::string padded_id(char prefix, std::size_t i, std::size_t count) {
  const std::size_t width = std::to_string(count).size();
  std::string digits = std::to_string(i + 1);
  return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

std::vector<double> target_thetas(const SimulationConfig& c) {
  std::vector<double> out(c.n_anchors);
  if (c.n_anchors == 1) {
    out[0] = (c.span_low + c.span_high) / 2.0;
    return out;
  }
  const double step = (c.span_high - c.span_low) / static_cast<double>(c.n_anchors - 1);
  for (std::uint32_t i = 0; i < c.n_anchors; ++i) out[i] = c.span_low + step * i;
  out.back() = c.span_high;
  return out;
}

// Everything a replication needs that does not depend on the replication.
struct Experiment {
  CapabilityMatrix matrix;
  std::size_t true_interval;
  std::string lower_id;
  std::string upper_id;
  // Prefix submatrices for QuerySubset::first, one per schedule entry.
  std::vector<CapabilityMatrix> prefixes;
};

Experiment prepare(const SimulationConfig& config) {
  config.validate();
  CapabilityMatrix matrix = synth_matrix(config);
  for (std::uint32_t m : config.m_schedule) {
    if (m > matrix.query_count()) {
      throw ValidationError("m_schedule entry " + std::to_string(m) + " exceeds the " +
                            std::to_string(matrix.query_count()) + " available queries");
    }
  }
  const auto hyps = interval_hypotheses(matrix);
  const std::size_t k = interval_containing(matrix, config.true_theta);
  std::vector<CapabilityMatrix> prefixes;
  if (config.subset == QuerySubset::first) {
    for (std::uint32_t m : config.m_schedule) {
      std::vector<std::size_t> cols(m);
      std::iota(cols.begin(), cols.end(), std::size_t{0});
      prefixes.push_back(matrix.select_queries(cols));
    }
  }
  return {std::move(matrix), k, hyps[k].lower_anchor_id, hyps[k].upper_anchor_id,
          std::move(prefixes)};
}

template <class PosteriorFn>
void run_replication(const SimulationConfig& config, const Experiment& ex, std::uint32_t r,
                     PosteriorFn&& compute_posterior, std::vector<ReplicationRecord>& out) {
  const std::uint64_t rseed = derive_seed(config.seed, SeedStream::replication, r);
  const TrialLog log = sample_test_model(ex.matrix, config.true_theta, config.trials_per_cell,
                                         rseed, config.link);
  const ObservationVector full = observations_from_log(log, kSimulatedModelId, ex.matrix);
  Rng subset_rng(derive_seed(config.seed, SeedStream::subset, r));

  const std::size_t reps = config.replications;
  for (std::size_t mi = 0; mi < config.m_schedule.size(); ++mi) {
    const std::uint32_t m = config.m_schedule[mi];
    std::vector<std::size_t> cols(ex.matrix.query_count());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::optional<CapabilityMatrix> drawn;
    if (config.subset == QuerySubset::random) {
      // Partial Fisher-Yates: the first m slots become the subset.
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t pick = j + subset_rng.index(cols.size() - j);
        std::swap(cols[j], cols[pick]);
      }
      cols.resize(m);
      drawn.emplace(ex.matrix.select_queries(cols));
    } else {
      cols.resize(m);
    }
    const CapabilityMatrix& sub = drawn ? *drawn : ex.prefixes[mi];

    ObservationVector obs;
    obs.per_query.reserve(m);
    for (std::size_t j : cols) obs.per_query.push_back(full[j]);

    const IntervalPosterior post = compute_posterior(sub, obs);
    ReplicationRecord& rec = out[mi * reps + r];
    rec.m = m;
    rec.replication = r;
    rec.argmax = post.argmax();
    rec.peak = post.posterior[rec.argmax];
    const auto& h = post.hypotheses[rec.argmax];
    rec.recovered = h.lower_anchor_id == ex.lower_id && h.upper_anchor_id == ex.upper_id;
    rec.posterior = post.posterior;
  }
}

SimulationReport summarize(const SimulationConfig& config, const Experiment& ex,
                           std::vector<ReplicationRecord> records) {
  SimulationReport report;
  report.config = config;
  report.anchors = ex.matrix.anchors().anchors();
  report.true_interval = ex.true_interval;
  report.true_lower_anchor = ex.lower_id;
  report.true_upper_anchor = ex.upper_id;

  const std::size_t reps = config.replications;
  for (std::size_t mi = 0; mi < config.m_schedule.size(); ++mi) {
    MSummary s;
    s.m = config.m_schedule[mi];
    s.mean_posterior.assign(ex.matrix.anchor_count() + 1, 0.0);
    std::size_t hits = 0;
    double peak_sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = records[mi * reps + r];
      hits += rec.recovered ? 1 : 0;
      peak_sum += rec.peak;
      for (std::size_t i = 0; i < s.mean_posterior.size(); ++i) {
        s.mean_posterior[i] += rec.posterior[i];
      }
    }
    s.recovery_rate = static_cast<double>(hits) / static_cast<double>(reps);
    s.mean_peak = peak_sum / static_cast<double>(reps);
    for (double& v : s.mean_posterior) v /= static_cast<double>(reps);
    report.summaries.push_back(std::move(s));
  }
  report.records = std::move(records);
  return report;
}

}  // namespace

void SimulationConfig::validate() const {
  if (replications == 0) throw ValidationError("replications must be positive");
  if (trials_per_cell == 0) throw ValidationError("trials_per_cell must be positive");
  if (!(true_theta > 0.0 && true_theta < 1.0)) {
    throw ValidationError("true_theta must lie in (0, 1)");
  }
  if (m_schedule.empty()) throw ValidationError("m_schedule is empty");
  for (std::size_t k = 0; k < m_schedule.size(); ++k) {
    if (m_schedule[k] == 0) throw ValidationError("m_schedule entries must be positive");
    if (k > 0 && m_schedule[k] >= m_schedule[k - 1]) {
      throw ValidationError("m_schedule must be strictly decreasing");
    }
  }
  if (difficulty_profile == DifficultyProfile::from_matrix) {
    if (!matrix) throw ValidationError("from_matrix profile needs a capability matrix");
    return;
  }
  if (n_anchors == 0) throw ValidationError("n_anchors must be positive");
  if (n_queries == 0) throw ValidationError("n_queries must be positive");
  if (m_schedule.front() > n_queries) {
    throw ValidationError("m_schedule entries must not exceed n_queries");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ValidationError("epsilon must lie in (0, 0.5)");
  if (!(discriminative_fraction >= 0.0 && discriminative_fraction <= 1.0)) {
    throw ValidationError("discriminative_fraction must lie in [0, 1]");
  }
  if (!(difficulty_spread >= 0.0)) throw ValidationError("difficulty_spread must be >= 0");
}

CapabilityMatrix synth_matrix(const SimulationConfig& config) {
  config.validate();
  if (config.difficulty_profile == DifficultyProfile::from_matrix) return *config.matrix;

  const std::size_t n = config.n_anchors;
  const std::size_t m = config.n_queries;
  const double eps = config.epsilon;
  if (n > 1 && !(config.span_low < config.span_high)) {
    throw ValidationError("span_low must be below span_high for more than one anchor");
  }
  if (!(config.span_low > eps && config.span_high < 1.0 - eps)) {
    throw ValidationError("anchor span must lie strictly inside (epsilon, 1 - epsilon)");
  }
  const std::vector<double> thetas = target_thetas(config);

  std::vector<std::string> anchor_ids(n);
  std::vector<std::string> query_ids(m);
  for (std::size_t i = 0; i < n; ++i) anchor_ids[i] = padded_id('A', i, n);
  for (std::size_t j = 0; j < m; ++j) query_ids[j] = padded_id('Q', j, m);

  std::vector<double> probs(n * m);
  if (config.difficulty_profile == DifficultyProfile::uniform) {
    for (std::size_t i = 0; i < n; ++i) {
      std::fill_n(probs.begin() + static_cast<std::ptrdiff_t>(i * m), m, thetas[i]);
    }
    return CapabilityMatrix(std::move(anchor_ids), std::move(query_ids), std::move(probs),
                            config.trials_per_cell, eps);
  }

  Rng rng(derive_seed(config.seed, SeedStream::matrix, 0));
  const auto n_disc = static_cast<std::size_t>(
      std::llround(config.discriminative_fraction * static_cast<double>(m)));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t j = 0; j + 1 < m; ++j) std::swap(order[j], order[j + rng.index(m - j)]);
  std::vector<bool> disc(m, false);
  for (std::size_t k = 0; k < n_disc; ++k) disc[order[k]] = true;

  // Discriminative columns: clip(logistic(shift_i + offset_j)). Flat columns:
  // a constant in [0.2, 0.8].
  std::vector<double> value(m);
  double flat_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (disc[j]) {
      value[j] = rng.uniform(-config.difficulty_spread, config.difficulty_spread);
    } else {
      value[j] = rng.uniform(0.2, 0.8);
      flat_sum += value[j];
    }
  }
  const auto cell = [&](double shift, std::size_t j) {
    return disc[j] ? std::clamp(logistic(shift + value[j]), eps, 1.0 - eps) : value[j];
  };
  const auto mean_at = [&](double shift) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += cell(shift, j);
    return s / static_cast<double>(m);
  };

  const double reach_lo = (static_cast<double>(n_disc) * eps + flat_sum) / static_cast<double>(m);
  const double reach_hi =
      (static_cast<double>(n_disc) * (1.0 - eps) + flat_sum) / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = thetas[i];
    if (!(target > reach_lo && target < reach_hi)) {
      std::ostringstream os;
      os << "infeasible anchor span: theta " << target << " is outside the reachable range ("
         << reach_lo << ", " << reach_hi << ") for " << n_disc << " discriminative of " << m
         << " queries";
      throw ValidationError(os.str());
    }
    double lo = -60.0;
    double hi = 60.0;
    for (int it = 0; it < 200 && lo < hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (mean_at(mid) < target ? lo : hi) = mid;
    }
    const double shift = 0.5 * (lo + hi);
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] = cell(shift, j);
  }
  return CapabilityMatrix(std::move(anchor_ids), std::move(query_ids), std::move(probs),
                          config.trials_per_cell, eps);
}

std::size_t interval_containing(const CapabilityMatrix& matrix, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::domain_error("theta must lie in (0, 1]");
  std::size_t below = 0;
  for (const auto& a : matrix.anchors()) below += a.theta < theta ? 1 : 0;
  return below;
}

std::vector<double> interpolated_success_probs(const CapabilityMatrix& matrix, double true_theta,
                                               TestModelLink link) {
  if (!(true_theta > 0.0 && true_theta < 1.0)) {
    throw std::domain_error("true_theta must lie in (0, 1)");
  }
  const std::size_t k = interval_containing(matrix, true_theta);
  const double lo_theta = k == 0 ? 0.0 : matrix.theta(k - 1);
  const double hi_theta = k == matrix.anchor_count() ? 1.0 : matrix.theta(k);
  const double w = (true_theta - lo_theta) / (hi_theta - lo_theta);

  std::vector<double> out(matrix.query_count());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double lo = endpoint_success_prob(matrix, k, j);
    const double hi = endpoint_success_prob(matrix, k + 1, j);
    const bool interior = lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0;
    if (link == TestModelLink::logistic && interior) {
      out[j] = logistic((1.0 - w) * logit(lo) + w * logit(hi));
    } else {
      out[j] = (1.0 - w) * lo + w * hi;
    }
  }
  return out;
}

TrialLog sample_test_model(const CapabilityMatrix& matrix, double true_theta,
                           std::uint32_t trials, std::uint64_t seed, TestModelLink link) {
  const std::vector<double> p = interpolated_success_probs(matrix, true_theta, link);
  Rng rng(seed);
  TrialLog log;
  log.records.reserve(p.size() * trials);
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::uint32_t t = 0; t < trials; ++t) {
      log.records.push_back({kSimulatedModelId, matrix.query_ids()[j], t, rng.bernoulli(p[j])});
    }
  }
  return log;
}

SimulationReport run_robustness(const SimulationConfig& config) {
  const Experiment ex = prepare(config);
  const std::size_t reps = config.replications;
  std::vector<ReplicationRecord> records(reps * config.m_schedule.size());
  const LikelihoodOptions single{.include_binomial_coefficient = true, .threads = 1};
  const auto compute = [&](const CapabilityMatrix& mat, const ObservationVector& obs) {
    return posterior(mat, obs, single);
  };

  // Lowest failing replication wins so the reported error is schedule-free.
  std::vector<std::exception_ptr> failures(reps);
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  const auto total = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 4)
  for (std::ptrdiff_t r = 0; r < total; ++r) {
    try {
      run_replication(config, ex, static_cast<std::uint32_t>(r), compute, records);
    } catch (...) {
      failures[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return summarize(config, ex, std::move(records));
}

double brute_force_evidence(const CapabilityMatrix& matrix) {
  const std::size_t m = matrix.query_count();
  if (m > 12) {
    throw ValidationError("brute-force evidence enumerates 2^M outcomes; M = " +
                          std::to_string(m) + " exceeds the limit of 12");
  }
  ObservationVector obs;
  obs.per_query.resize(m);
  for (std::size_t j = 0; j < m; ++j) obs.per_query[j] = {matrix.query_ids()[j], 1, 0};
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    for (std::size_t j = 0; j < m; ++j) obs.per_query[j].successes = (mask >> j) & 1u;
    total += std::exp(posterior(matrix, obs).evidence_log);
  }
  return total;
}

namespace reference {

SimulationReport run_robustness(const SimulationConfig& config) {
  const Experiment ex = prepare(config);
  std::vector<ReplicationRecord> records(config.replications * config.m_schedule.size());
  const auto compute = [](const CapabilityMatrix& mat, const ObservationVector& obs) {
    return reference::posterior(mat, obs);
  };
  for (std::uint32_t r = 0; r < config.replications; ++r) {
    run_replication(config, ex, r, compute, records);
  }
  return summarize(config, ex, std::move(records));
}

}  // namespace reference

}  // namespace bayesrank
