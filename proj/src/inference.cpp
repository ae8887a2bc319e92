#include "bayesrank/inference.hpp"

#include <math.h>  // lgamma_r

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bayesrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_choose(std::uint32_t n, std::uint32_t k) {
  if (k == 0 || k == n) return 0.0;
  // lgamma_r: std::lgamma writes the global signgam and races under OpenMP.
  int sign = 0;
  return ::lgamma_r(n + 1.0, &sign) - ::lgamma_r(k + 1.0, &sign) -
         ::lgamma_r(static_cast<double>(n - k) + 1.0, &sign);
}

void check_interval(const CapabilityMatrix& matrix, std::size_t interval, std::size_t query) {
  if (interval > matrix.anchor_count()) throw std::out_of_range("interval index out of range");
  if (query >= matrix.query_count()) throw std::out_of_range("query index out of range");
}

IntervalPosterior assemble(const CapabilityMatrix& matrix, std::vector<double> log_likelihood) {
  IntervalPosterior out;
  out.hypotheses = interval_hypotheses(matrix);
  out.prior = interval_prior(matrix);
  out.log_likelihood = std::move(log_likelihood);

  const std::size_t n = out.prior.size();
  std::vector<double> joint(n);
  double peak = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    joint[i] = out.log_likelihood[i] + std::log(out.prior[i]);
    peak = std::max(peak, joint[i]);
  }
  if (!std::isfinite(peak)) {
    throw std::runtime_error("observation has zero likelihood under every interval");
  }
  double total = 0.0;
  for (double v : joint) total += std::exp(v - peak);
  out.evidence_log = peak + std::log(total);

  out.posterior.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.posterior[i] = std::exp(joint[i] - out.evidence_log);
  return out;
}

}  // namespace

std::size_t IntervalPosterior::argmax() const {
  return static_cast<std::size_t>(
      std::distance(posterior.begin(), std::max_element(posterior.begin(), posterior.end())));
}

std::vector<IntervalHypothesis> interval_hypotheses(const CapabilityMatrix& matrix) {
  const auto& anchors = matrix.anchors();
  const std::size_t n = anchors.size();
  std::vector<IntervalHypothesis> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    auto& h = out[i];
    h.index = i;
    h.lower_theta = i == 0 ? 0.0 : anchors[i - 1].theta;
    h.upper_theta = i == n ? 1.0 : anchors[i].theta;
    h.lower_anchor_id = i == 0 ? kBottomAnchorId : anchors[i - 1].id;
    h.upper_anchor_id = i == n ? kTopAnchorId : anchors[i].id;
  }
  return out;
}

std::vector<double> interval_prior(const CapabilityMatrix& matrix) {
  const auto& anchors = matrix.anchors();
  const std::size_t n = anchors.size();
  // The extended ladder spans [0, 1], so the normalizer is 1.
  std::vector<double> prior(n + 1);
  double previous = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prior[i] = anchors[i].theta - previous;
    previous = anchors[i].theta;
  }
  prior[n] = 1.0 - previous;
  return prior;
}

double endpoint_success_prob(const CapabilityMatrix& matrix, std::size_t extended_anchor,
                             std::size_t query) {
  if (extended_anchor == 0) return 0.0;
  if (extended_anchor == matrix.anchor_count() + 1) return 1.0;
  return matrix.prob(extended_anchor - 1, query);
}

double single_trial_query_likelihood(const CapabilityMatrix& matrix, std::size_t interval,
                                     std::size_t query, bool outcome) {
  check_interval(matrix, interval, query);
  const double lo = endpoint_success_prob(matrix, interval, query);
  const double hi = endpoint_success_prob(matrix, interval + 1, query);
  return outcome ? (lo + hi) / 2.0 : ((1.0 - lo) + (1.0 - hi)) / 2.0;
}

double log_binomial_pmf(std::uint32_t trials, std::uint32_t successes, double p,
                        bool include_coefficient) {
  if (successes > trials) throw std::domain_error("successes exceed trials");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability must lie in [0, 1]");
  const std::uint32_t failures = trials - successes;
  const double coef = include_coefficient ? log_choose(trials, successes) : 0.0;
  if (p == 0.0) return successes == 0 ? coef : kNegInf;
  if (p == 1.0) return failures == 0 ? coef : kNegInf;
  return coef + successes * std::log(p) + failures * std::log1p(-p);
}

double log_average_exp(double a, double b) noexcept {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log1p(std::exp(lo - hi)) - std::numbers::ln2;
}

double multi_trial_query_log_likelihood(const CapabilityMatrix& matrix, std::size_t interval,
                                        std::size_t query, std::uint32_t trials,
                                        std::uint32_t successes,
                                        const LikelihoodOptions& options) {
  check_interval(matrix, interval, query);
  if (trials == 0) throw std::domain_error("at least one trial required");
  if (successes > trials) throw std::domain_error("successes exceed trials");
  const bool coef = options.include_binomial_coefficient;
  const double lower = log_binomial_pmf(
      trials, successes, endpoint_success_prob(matrix, interval, query), coef);
  const double upper = log_binomial_pmf(
      trials, successes, endpoint_success_prob(matrix, interval + 1, query), coef);
  return log_average_exp(lower, upper);
}

IntervalPosterior posterior(const CapabilityMatrix& matrix, const ObservationVector& obs,
                            const LikelihoodOptions& options) {
  const ObservationVector aligned = align_observations(obs, matrix);
  return assemble(matrix, interval_log_likelihoods(matrix, aligned, options));
}

double exceedance(const IntervalPosterior& post, const std::string& anchor_id) {
  // Interval i sits above the anchor whose upper edge closes interval i-1.
  for (std::size_t i = 0; i < post.hypotheses.size(); ++i) {
    if (post.hypotheses[i].lower_anchor_id == anchor_id && anchor_id != kBottomAnchorId) {
      double mass = 0.0;
      for (std::size_t k = i; k < post.posterior.size(); ++k) mass += post.posterior[k];
      return mass;
    }
  }
  throw ValidationError("unknown anchor '" + anchor_id + "'");
}

namespace reference {

IntervalPosterior posterior(const CapabilityMatrix& matrix, const ObservationVector& obs,
                            const LikelihoodOptions& options) {
  const ObservationVector aligned = align_observations(obs, matrix);
  return assemble(matrix, reference::interval_log_likelihoods(matrix, aligned, options));
}

}  // namespace reference

}  // namespace bayesrank
