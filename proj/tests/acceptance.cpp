// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "bayesrank/baselines.hpp"
#include "bayesrank/inference.hpp"
#include "bayesrank/simulate.hpp"
#include "test_support.hpp"

#ifndef BAYESRANK_CLI
#error "BAYESRANK_CLI must name the CLI executable"
#endif

using namespace bayesrank;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

// Evidence summed over every single-trial outcome vector, in linear
// arithmetic, with no library likelihood code involved.
double oracle_total_evidence(const CapabilityMatrix& m) {
  const std::size_t mq = m.query_count();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << mq); ++mask) {
    std::vector<std::uint32_t> trials(mq, 1);
    std::vector<std::uint32_t> succ(mq);
    for (std::size_t j = 0; j < mq; ++j) succ[j] = (mask >> j) & 1u;
    total += bayesrank::testing::oracle_evidence(m, bayesrank::testing::make_obs(m, trials, succ));
  }
  return total;
}

Outcome evidence_conservation() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  double worst_oracle = 0.0;
  const int cases = 150;
  for (int k = 0; k < cases; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % 4);
    const std::size_t mq = 1 + static_cast<std::size_t>(rng() % 10);
    const auto m = bayesrank::testing::random_matrix(rng, n, mq);
    worst = std::max(worst, std::abs(brute_force_evidence(m) - 1.0));
    worst_oracle = std::max(worst_oracle, std::abs(oracle_total_evidence(m) - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && worst_oracle < 1e-6 && secs < 10.0,
          std::to_string(cases) + " matrices, max |sum-1| " + sci(worst) + " (oracle " +
              sci(worst_oracle) + "), " + fmt(secs, 2) + " s"};
}

Outcome single_trial_reduction() {
  std::mt19937_64 rng(777);
  double worst = 0.0;
  const int cases = 5000;
  for (int k = 0; k < cases; ++k) {
    const auto m = bayesrank::testing::random_matrix(rng, 1 + rng() % 6, 1 + rng() % 8);
    const std::size_t interval = rng() % (m.anchor_count() + 1);
    const std::size_t q = rng() % m.query_count();
    const bool outcome = rng() & 1u;
    const double multi = multi_trial_query_log_likelihood(m, interval, q, 1, outcome ? 1 : 0);
    const double single = std::log(single_trial_query_likelihood(m, interval, q, outcome));
    worst = std::max(worst, std::abs(multi - single));
  }
  return {worst <= 1e-12, std::to_string(cases) + " cases, max |diff| " + sci(worst)};
}

Outcome hand_worked_posterior() {
  // prior: theta 0.6 splits [0,1] into 0.6 and 0.4.
  // likelihood of a correct answer: (0 + 0.6)/2 below, (0.6 + 1)/2 above.
  const double j0 = 0.6 * 0.3;
  const double j1 = 0.4 * 0.8;
  const double hand0 = j0 / (j0 + j1);
  const double hand1 = j1 / (j0 + j1);
  const auto m = bayesrank::testing::make_matrix({{0.6}});
  const auto post = posterior(m, bayesrank::testing::make_obs(m, {1}, {1}));
  const double e0 = std::abs(post.posterior[0] - 0.36);
  const double e1 = std::abs(post.posterior[1] - 0.64);
  const bool hand_ok = std::abs(hand0 - 0.36) < 1e-12 && std::abs(hand1 - 0.64) < 1e-12;
  return {hand_ok && e0 < 1e-12 && e1 < 1e-12,
          "posterior [" + fmt(post.posterior[0], 12) + ", " + fmt(post.posterior[1], 12) + "]"};
}

SimulationConfig ladder_setup(std::uint64_t seed) {
  SimulationConfig c;
  c.n_anchors = 6;
  c.n_queries = 50;
  c.trials_per_cell = 10;
  c.span_low = 0.14;
  c.span_high = 0.82;
  c.seed = seed;
  c.replications = 500;
  return c;
}

Outcome anchor_recovery() {
  // Pilot (1000 replications, every interval): recovery >= 0.997 at M=50.
  // The frozen floor is 0.90.
  const auto t0 = Clock::now();
  SimulationConfig c = ladder_setup(20250101);
  c.m_schedule = {50};
  const CapabilityMatrix ladder = synth_matrix(c);
  const auto hyps = interval_hypotheses(ladder);
  double worst = 1.0;
  std::string rates;
  for (const auto& h : hyps) {
    c.true_theta = 0.5 * (h.lower_theta + h.upper_theta);
    const SimulationReport r = run_robustness(c);
    worst = std::min(worst, r.summaries.front().recovery_rate);
    rates += (rates.empty() ? "" : " ") + fmt(r.summaries.front().recovery_rate, 3);
  }
  const double secs = seconds_since(t0);
  return {worst >= 0.90 && secs < 60.0,
          "recovery per interval [" + rates + "], 500 reps each, " + fmt(secs, 2) + " s"};
}

Outcome m_degradation() {
  SimulationConfig c = ladder_setup(20250101);
  const CapabilityMatrix ladder = synth_matrix(c);
  c.true_theta = 0.5 * (ladder.theta(2) + ladder.theta(3));
  const SimulationReport r = run_robustness(c);
  bool monotone = true;
  std::string peaks;
  for (std::size_t k = 0; k < r.summaries.size(); ++k) {
    if (k > 0 && r.summaries[k].mean_peak > r.summaries[k - 1].mean_peak) monotone = false;
    peaks += (peaks.empty() ? "" : " ") + std::string("M") + std::to_string(r.summaries[k].m) +
             "=" + fmt(r.summaries[k].mean_peak);
  }
  const double gap = r.summaries.front().mean_peak - r.summaries.back().mean_peak;
  return {monotone && gap >= 0.1, "mean peak " + peaks + ", M50-M5 gap " + fmt(gap)};
}

Outcome baseline_cross_check() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  double worst = 0.0;
  bool ordering = true;
  bool pass1 = true;
  const int cases = 500;
  for (int k = 0; k < cases; ++k) {
    const std::size_t queries = 1 + rng() % 60;
    const std::uint32_t o = 2 + static_cast<std::uint32_t>(rng() % 14);
    const TrialLog log = bayesrank::testing::random_log(rng, "m", queries, o, rate(rng));

    std::vector<double> acc(o, 0.0);
    for (const auto& rec : log.records) acc[rec.trial_index] += rec.correct ? 1.0 : 0.0;
    for (auto& a : acc) a /= static_cast<double>(queries);
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= o;
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / (o - 1));

    const MeanStd s = mean_std(log, "m");
    worst = std::max({worst, std::abs(s.mean - mean), std::abs(s.std_dev - sd),
                      std::abs(s.std_error - sd / std::sqrt(static_cast<double>(o)))});
    ordering = ordering && pass_at_n(log, "m", o) >= s.mean;
    pass1 = pass1 && pass_at_n(log, "m", 1) == accuracy(log, "m", 0);
  }
  return {ordering && pass1 && worst <= 1e-12,
          std::to_string(cases) + " logs, pass@N >= mean " + (ordering ? "always" : "VIOLATED") +
              ", pass@1 == acc(trial 0) " + (pass1 ? "always" : "VIOLATED") +
              ", mean/std max |diff| " + sci(worst)};
}

Outcome numerical_robustness() {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> r(50);
    for (int j = 0; j < 50; ++j) {
      if (j < 8 + 6 * i) r[j] = 0.99;
      else if (j >= 44) r[j] = 0.01;
      else r[j] = 0.15 + 0.12 * i;
    }
    rows.push_back(r);
  }
  const auto m = bayesrank::testing::make_matrix(rows);
  const std::vector<std::uint32_t> tens(50, 10);
  const auto post = posterior(m, bayesrank::testing::make_obs(m, tens, tens));
  bool finite = std::isfinite(post.evidence_log);
  for (double v : post.posterior) finite = finite && std::isfinite(v) && v >= 0.0;
  for (double v : post.log_likelihood) finite = finite && std::isfinite(v);
  const double total = std::accumulate(post.posterior.begin(), post.posterior.end(), 0.0);

  double linear = 1.0;
  for (std::size_t j = 0; j < 50; ++j) {
    linear *= 0.5 * (std::pow(m.prob(0, j), 10) + std::pow(m.prob(1, j), 10));
  }
  return {finite && std::abs(total - 1.0) < 1e-9,
          "evidence_log " + fmt(post.evidence_log, 2) + ", sum " + fmt(total, 12) +
              ", linear-domain interval-1 likelihood " + sci(linear)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("bayesrank_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "sim.json") << R"({"replications": 100, "m_schedule": [50, 30, 20, 10, 5],
 "true_interval": 3})";
  auto run = [&](const std::string& tag, const std::string& threads, const std::string& format) {
    const fs::path out = dir / (tag + "." + format);
    const std::string cmd = std::string("'") + BAYESRANK_CLI + "' simulate --config '" +
                            (dir / "sim.json").string() + "' --seed 12345 " + threads +
                            " --format " + format + " --out '" + out.string() + "' 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return std::optional<std::string>{};
    return std::optional<std::string>(slurp(out));
  };
  bool ok = true;
  std::size_t bytes = 0;
  for (const std::string format : {"json", "csv"}) {
    const auto a = run("a", "--threads 1", format);
    const auto b = run("b", "--threads 1", format);
    const auto c = run("c", "--threads 4", format);
    const auto d = run("d", "", format);
    ok = ok && a && !a->empty() && a == b && a == c && a == d;
    bytes += a ? a->size() : 0;
  }
  fs::remove_all(dir);
  return {ok, "json+csv, two runs at 1 thread, 4 threads, default: " +
                  std::string(ok ? "byte-identical" : "DIFFER") + " (" + std::to_string(bytes) +
                  " bytes)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"evidence conservation", evidence_conservation},
      {"O=1 reduction", single_trial_reduction},
      {"hand-worked posterior", hand_worked_posterior},
      {"anchor recovery", anchor_recovery},
      {"M-degradation trend", m_degradation},
      {"baseline cross-check", baseline_cross_check},
      {"numerical robustness", numerical_robustness},
      {"determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (k + 1) << ": "
              << criteria[k].first << " -- " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
