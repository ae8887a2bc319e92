#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bayesrank/baselines.hpp"
#include "test_support.hpp"

using namespace bayesrank;

namespace {

// Per-trial accuracy vector, computed directly from the records.
std::vector<double> trial_accuracies(const TrialLog& log, std::size_t queries, std::uint32_t o) {
  std::vector<double> acc(o, 0.0);
  for (const auto& r : log.records) acc[r.trial_index] += r.correct ? 1.0 : 0.0;
  for (auto& a : acc) a /= static_cast<double>(queries);
  return acc;
}

// Two-pass sample mean and standard deviation.
std::pair<double, double> two_pass(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

TrialLog per_trial_log(const std::vector<std::vector<bool>>& by_trial) {
  TrialLog log;
  for (std::uint32_t t = 0; t < by_trial.size(); ++t) {
    for (std::size_t j = 0; j < by_trial[t].size(); ++j) {
      log.records.push_back({"m", bayesrank::testing::query_name(j), t, by_trial[t][j]});
    }
  }
  return log;
}

}  // namespace

TEST_CASE("accuracy examples") {
  std::vector<bool> row(20, false);
  for (int j = 0; j < 13; ++j) row[j] = true;
  CHECK(accuracy(per_trial_log({row}), "m", 0) == 0.65);
  CHECK(accuracy(per_trial_log({std::vector<bool>(7, true)}), "m", 0) == 1.0);
  CHECK(accuracy(per_trial_log({std::vector<bool>(7, false)}), "m", 0) == 0.0);
  CHECK_THROWS_AS(accuracy(per_trial_log({row}), "other", 0), ValidationError);
  CHECK_THROWS_AS(accuracy(per_trial_log({row}), "m", 3), ValidationError);
}

TEST_CASE("pass_at_n counts any success") {
  std::vector<std::vector<bool>> trials(10, std::vector<bool>(2, false));
  trials[7][0] = true;
  const TrialLog log = per_trial_log(trials);
  CHECK(pass_at_n(log, "m", 10) == 0.5);
  CHECK(pass_at_n(log, "m", 7) == 0.0);
  CHECK(pass_at_n(log, "m", 8) == 0.5);
  CHECK_THROWS_AS(pass_at_n(log, "m", 11), ValidationError);
  CHECK_THROWS_AS(pass_at_n(log, "m", 0), ValidationError);
}

TEST_CASE("mean_std examples") {
  SUBCASE("zero variance") {
    std::vector<std::vector<bool>> t(4, {true, true, true, false, false});
    const MeanStd s = mean_std(per_trial_log(t), "m");
    CHECK(s.mean == doctest::Approx(0.6));
    CHECK(s.std_dev == doctest::Approx(0.0));
    CHECK(s.std_error == doctest::Approx(0.0));
  }
  SUBCASE("two trials at 0.5 and 0.7") {
    std::vector<bool> a(10, false);
    std::vector<bool> b(10, false);
    for (int j = 0; j < 5; ++j) a[j] = true;
    for (int j = 0; j < 7; ++j) b[j] = true;
    const MeanStd s = mean_std(per_trial_log({a, b}), "m");
    CHECK(s.mean == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
    CHECK(s.std_error == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("a single trial is an error") {
    CHECK_THROWS_AS(mean_std(per_trial_log({{true, false}}), "m"), ValidationError);
  }
  SUBCASE("ragged trials are an error") {
    TrialLog log = per_trial_log({{true, false}, {true, true}});
    log.records.push_back({"m", "Q1", 2, true});
    CHECK_THROWS_AS(mean_std(log, "m"), ValidationError);
  }
}

TEST_CASE("baseline properties on random logs") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t queries = 1 + rep % 37;
    const std::uint32_t o = 2 + rep % 11;
    TrialLog log = bayesrank::testing::random_log(rng, "m", queries, o, p(rng));

    const auto acc = trial_accuracies(log, queries, o);
    const auto [mean, sd] = two_pass(acc);
    const MeanStd s = mean_std(log, "m");
    CHECK(std::abs(s.mean - mean) < 1e-12);
    CHECK(std::abs(s.std_dev - sd) < 1e-12);
    CHECK(std::abs(s.std_error - sd / std::sqrt(static_cast<double>(o))) < 1e-12);
    CHECK(s.mean >= *std::min_element(acc.begin(), acc.end()) - 1e-15);
    CHECK(s.mean <= *std::max_element(acc.begin(), acc.end()) + 1e-15);

    CHECK(pass_at_n(log, "m", o) >= s.mean);
    CHECK(pass_at_n(log, "m", 1) == accuracy(log, "m", 0));
    for (std::uint32_t n = 2; n <= o; ++n) {
      CHECK(pass_at_n(log, "m", n) >= pass_at_n(log, "m", n - 1));
    }

    TrialLog shuffled = log;
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
    CHECK(accuracy(shuffled, "m", 0) == accuracy(log, "m", 0));
    CHECK(pass_at_n(shuffled, "m", o) == pass_at_n(log, "m", o));
    const MeanStd t = mean_std(shuffled, "m");
    CHECK(t.mean == s.mean);
    CHECK(t.std_dev == s.std_dev);
  }
}

TEST_CASE("baseline_report gathers every metric") {
  std::mt19937_64 rng(5);
  const TrialLog log = bayesrank::testing::random_log(rng, "m", 20, 10, 0.4);
  const BaselineReport r = baseline_report(log, "m", 10, 3);
  CHECK(r.model_id == "m");
  CHECK(r.trials == 10);
  CHECK(r.pass_n == 10);
  CHECK(r.accuracy_trial == 3);
  CHECK(r.accuracy_single == accuracy(log, "m", 3));
  CHECK(r.pass_at_n >= r.mean);
  CHECK(r.mean >= 0.0);
  CHECK(r.std_dev >= 0.0);
  CHECK(r.std_error == doctest::Approx(r.std_dev / std::sqrt(10.0)));
}
