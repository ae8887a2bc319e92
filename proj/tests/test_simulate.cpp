#include <doctest.h>

#include <cmath>
#include <random>

#include "bayesrank/inference.hpp"
#include "bayesrank/simulate.hpp"
#include "test_support.hpp"

using namespace bayesrank;

namespace {

bool same_report(const SimulationReport& a, const SimulationReport& b) {
  if (a.records.size() != b.records.size() || a.summaries.size() != b.summaries.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    const auto& x = a.records[k];
    const auto& y = b.records[k];
    if (x.m != y.m || x.replication != y.replication || x.argmax != y.argmax ||
        x.peak != y.peak || x.recovered != y.recovered || x.posterior != y.posterior) {
      return false;
    }
  }
  for (std::size_t k = 0; k < a.summaries.size(); ++k) {
    const auto& x = a.summaries[k];
    const auto& y = b.summaries[k];
    if (x.m != y.m || x.recovery_rate != y.recovery_rate || x.mean_peak != y.mean_peak ||
        x.mean_posterior != y.mean_posterior) {
      return false;
    }
  }
  return a.true_interval == b.true_interval;
}

}  // namespace

TEST_CASE("synthetic ladder hits evenly spaced thetas") {
  SimulationConfig c;
  c.seed = 1;
  const CapabilityMatrix m = synth_matrix(c);
  REQUIRE(m.anchor_count() == 6);
  REQUIRE(m.query_count() == 50);
  const double expected[] = {0.14, 0.276, 0.412, 0.548, 0.684, 0.82};
  for (std::size_t i = 0; i < 6; ++i) CHECK(m.theta(i) == doctest::Approx(expected[i]).epsilon(1e-9));
  for (double p : m.data()) CHECK((p >= 0.01 && p <= 0.99));
  // discriminative columns rise down the ladder
  for (std::size_t j = 0; j < m.query_count(); ++j) {
    for (std::size_t i = 1; i < 6; ++i) CHECK(m.prob(i, j) >= m.prob(i - 1, j));
  }
}

TEST_CASE("single anchor sits at the span midpoint") {
  SimulationConfig c;
  c.n_anchors = 1;
  c.seed = 4;
  const CapabilityMatrix m = synth_matrix(c);
  REQUIRE(m.anchor_count() == 1);
  CHECK(m.theta(0) == doctest::Approx(0.48).epsilon(1e-9));
}

TEST_CASE("uniform profile and flat columns") {
  SimulationConfig c;
  c.difficulty_profile = DifficultyProfile::uniform;
  const CapabilityMatrix u = synth_matrix(c);
  for (std::size_t i = 0; i < u.anchor_count(); ++i) {
    for (double p : u.row(i)) CHECK(p == doctest::Approx(u.theta(i)));
  }
  c.difficulty_profile = DifficultyProfile::evenly_spaced_anchors;
  c.discriminative_fraction = 0.5;
  CHECK_THROWS_AS(synth_matrix(c), ValidationError);  // 0.14 is out of reach
  c.span_low = 0.3;
  c.span_high = 0.7;
  const CapabilityMatrix half = synth_matrix(c);
  std::size_t flat = 0;
  for (std::size_t j = 0; j < half.query_count(); ++j) {
    flat += half.prob(0, j) == half.prob(5, j) ? 1 : 0;
  }
  CHECK(flat >= 25);
  CHECK(half.theta(0) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("synth_matrix is deterministic in the seed") {
  SimulationConfig c;
  c.seed = 77;
  const CapabilityMatrix a = synth_matrix(c);
  const CapabilityMatrix b = synth_matrix(c);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  c.seed = 78;
  const CapabilityMatrix d = synth_matrix(c);
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), d.data().begin()));
}

TEST_CASE("unreachable spans are rejected") {
  SimulationConfig c;
  c.discriminative_fraction = 0.0;
  c.span_low = 0.02;
  c.span_high = 0.98;
  CHECK_THROWS_AS(synth_matrix(c), ValidationError);
  c.span_low = 0.005;
  CHECK_THROWS_AS(synth_matrix(c), ValidationError);
}

TEST_CASE("interpolation reproduces rows and the endpoint average") {
  SimulationConfig c;
  c.seed = 9;
  const CapabilityMatrix m = synth_matrix(c);
  for (std::size_t i = 0; i < m.anchor_count(); ++i) {
    const auto p = interpolated_success_probs(m, m.theta(i));
    for (std::size_t j = 0; j < m.query_count(); ++j) CHECK(p[j] == m.prob(i, j));
  }
  for (std::size_t i = 0; i + 1 < m.anchor_count(); ++i) {
    const auto p = interpolated_success_probs(m, 0.5 * (m.theta(i) + m.theta(i + 1)));
    for (std::size_t j = 0; j < m.query_count(); ++j) {
      CHECK(p[j] == doctest::Approx(single_trial_query_likelihood(m, i + 1, j, true))
                        .epsilon(1e-12));
    }
  }
  // boundary intervals blend with exact 0 and 1
  const auto low = interpolated_success_probs(m, 0.5 * m.theta(0));
  CHECK(low[0] == doctest::Approx(0.5 * m.prob(0, 0)));
  const auto high = interpolated_success_probs(m, 0.5 * (m.theta(5) + 1.0));
  CHECK(high[0] == doctest::Approx(0.5 * (m.prob(5, 0) + 1.0)));
  CHECK_THROWS_AS(interpolated_success_probs(m, 0.0), std::domain_error);
  CHECK_THROWS_AS(interpolated_success_probs(m, 1.0), std::domain_error);
}

TEST_CASE("logistic link stays between the bracketing anchors") {
  SimulationConfig c;
  c.seed = 9;
  const CapabilityMatrix m = synth_matrix(c);
  const double theta = 0.5 * (m.theta(2) + m.theta(3));
  const auto p = interpolated_success_probs(m, theta, TestModelLink::logistic);
  for (std::size_t j = 0; j < m.query_count(); ++j) {
    CHECK(p[j] >= std::min(m.prob(2, j), m.prob(3, j)) - 1e-15);
    CHECK(p[j] <= std::max(m.prob(2, j), m.prob(3, j)) + 1e-15);
  }
}

TEST_CASE("interval_containing follows the half-open partition") {
  const CapabilityMatrix m = bayesrank::testing::make_matrix({{0.2}, {0.5}});
  CHECK(interval_containing(m, 0.1) == 0);
  CHECK(interval_containing(m, 0.2) == 0);
  CHECK(interval_containing(m, 0.21) == 1);
  CHECK(interval_containing(m, 0.5) == 1);
  CHECK(interval_containing(m, 1.0) == 2);
}

TEST_CASE("sampled test model logs") {
  SimulationConfig c;
  c.seed = 3;
  const CapabilityMatrix m = synth_matrix(c);
  const TrialLog log = sample_test_model(m, 0.5, 10, 123);
  CHECK(log.records.size() == 500);
  CHECK_NOTHROW(log.validate());
  const TrialLog again = sample_test_model(m, 0.5, 10, 123);
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    CHECK(log.records[k].correct == again.records[k].correct);
  }
  const TrialLog empty = sample_test_model(m, 0.5, 0, 123);
  CHECK(empty.records.empty());
  CHECK_THROWS_AS(observations_from_log(empty, kSimulatedModelId, m), ValidationError);
}

TEST_CASE("config validation") {
  SimulationConfig c;
  CHECK_NOTHROW(c.validate());
  c.m_schedule = {50, 50};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.m_schedule = {60};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.m_schedule = {10};
  c.true_theta = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.true_theta = 0.5;
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.replications = 1;
  c.difficulty_profile = DifficultyProfile::from_matrix;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("run_robustness is deterministic and matches the serial reference") {
  SimulationConfig c;
  c.seed = 2024;
  c.replications = 24;
  c.true_theta = 0.45;
  const SimulationReport ref = reference::run_robustness(c);
  for (int threads : {1, 2, 4}) {
    c.threads = threads;
    CHECK(same_report(run_robustness(c), ref));
  }
  CHECK(ref.records.size() == 24 * 5);
  CHECK(ref.summaries.size() == 5);
  for (std::size_t k = 0; k < ref.records.size(); ++k) {
    CHECK(ref.records[k].replication == k % 24);
    CHECK(ref.records[k].m == c.m_schedule[k / 24]);
  }
  for (const auto& s : ref.summaries) {
    CHECK(s.recovery_rate >= 0.0);
    CHECK(s.recovery_rate <= 1.0);
  }
  c.seed = 2025;
  CHECK_FALSE(same_report(run_robustness(c), ref));
}

TEST_CASE("single replication is reproducible") {
  SimulationConfig c;
  c.seed = 5;
  c.replications = 1;
  CHECK(same_report(run_robustness(c), run_robustness(c)));
}

TEST_CASE("random subset and logistic modes run and stay deterministic") {
  SimulationConfig c;
  c.seed = 8;
  c.replications = 10;
  c.subset = QuerySubset::random;
  c.link = TestModelLink::logistic;
  const SimulationReport ref = reference::run_robustness(c);
  c.threads = 3;
  CHECK(same_report(run_robustness(c), ref));
}

TEST_CASE("from_matrix profile uses the given ladder") {
  SimulationConfig c;
  c.seed = 6;
  c.difficulty_profile = DifficultyProfile::from_matrix;
  c.matrix = bayesrank::testing::make_matrix({{0.2, 0.3, 0.25}, {0.6, 0.8, 0.7}});
  c.m_schedule = {3, 2};
  c.replications = 5;
  c.n_queries = 3;
  c.n_anchors = 2;
  const SimulationReport r = run_robustness(c);
  CHECK(r.anchors.size() == 2);
  CHECK(r.anchors[0].id == "A1");
  CHECK(r.true_interval == 1);
  CHECK(r.true_lower_anchor == "A1");
  CHECK(r.true_upper_anchor == "A2");
}

TEST_CASE("recovery and sharpness at large M") {
  SimulationConfig c;
  c.seed = 31;
  c.replications = 200;
  const CapabilityMatrix m = synth_matrix(c);
  c.true_theta = 0.5 * (m.theta(2) + m.theta(3));
  const SimulationReport r = run_robustness(c);
  CHECK(r.summaries.front().recovery_rate >= 0.9);
  CHECK(r.summaries.front().mean_peak - r.summaries.back().mean_peak >= 0.1);
}

TEST_CASE("anchor +/- delta lands on an adjacent interval") {
  // Pilot: 1000 replications per case put the argmax on one of the two
  // intervals bordering the anchor every time; 0.9 is the frozen floor.
  SimulationConfig c;
  c.seed = 41;
  c.replications = 200;
  c.m_schedule = {50};
  const CapabilityMatrix m = synth_matrix(c);
  for (std::size_t a : {std::size_t{0}, std::size_t{2}, std::size_t{5}}) {
    for (double delta : {-0.01, 0.01}) {
      c.true_theta = m.theta(a) + delta;
      const SimulationReport r = run_robustness(c);
      std::size_t adjacent = 0;
      for (const auto& rec : r.records) adjacent += (rec.argmax == a || rec.argmax == a + 1);
      CHECK(static_cast<double>(adjacent) / static_cast<double>(r.records.size()) >= 0.9);
    }
  }
}

TEST_CASE("brute-force evidence sums to one") {
  CHECK(std::abs(brute_force_evidence(bayesrank::testing::make_matrix({{0.37}})) - 1.0) < 1e-12);
  CHECK(std::abs(brute_force_evidence(bayesrank::testing::make_matrix(
                     {{0.1, 0.5, 0.2}, {0.4, 0.6, 0.9}})) -
                 1.0) < 1e-9);
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = bayesrank::testing::random_matrix(rng, 1 + rep % 4, 1 + rep % 10);
    CHECK(std::abs(brute_force_evidence(m) - 1.0) < 1e-6);
  }
  std::vector<double> row(13, 0.5);
  CHECK_THROWS_AS(brute_force_evidence(bayesrank::testing::make_matrix({row})), ValidationError);
}
