// bayesrank: calibrate an anchor ladder, rank models against it, and run the
// robustness simulation.
//
// Exit codes: 0 success, 1 validation, 2 I/O, 3 format.

#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bayesrank/baselines.hpp"
#include "bayesrank/core.hpp"
#include "bayesrank/inference.hpp"
#include "bayesrank/io.hpp"
#include "bayesrank/report.hpp"
#include "bayesrank/runner.hpp"
#include "bayesrank/simulate.hpp"

namespace {

using namespace bayesrank;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_text(text, out);
  }
}

std::string single_model(const TrialLog& log) {
  const auto models = log.model_ids();
  if (models.size() != 1) {
    throw ValidationError("log holds " + std::to_string(models.size()) +
                          " models; pick one with --model");
  }
  return models.front();
}

struct CalibrateArgs {
  std::string outcomes;
  std::string out;
  double epsilon = kDefaultEpsilon;
  std::vector<std::string> anchors;
  std::vector<std::string> queries;
  std::string format = "json";
};

int run_calibrate(const CalibrateArgs& a) {
  const TrialLog log = io::read_trial_log(a.outcomes);
  const auto anchors = a.anchors.empty() ? log.model_ids() : a.anchors;
  const auto queries = a.queries.empty() ? log.query_ids() : a.queries;
  std::vector<std::string> warnings;
  const CapabilityMatrix matrix = calibrate(log, anchors, queries, a.epsilon, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  emit(io::render(matrix, report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct RankArgs {
  std::string matrix;
  std::string outcomes;
  std::string model;
  std::string out;
  std::string format = "json";
  std::optional<std::uint32_t> single_trial_index;
  bool baselines = false;
  std::uint32_t pass_n = 10;
};

int run_rank(const RankArgs& a) {
  const CapabilityMatrix matrix = io::read_matrix(a.matrix);
  const TrialLog log = io::read_trial_log(a.outcomes);
  const std::string model = a.model.empty() ? single_model(log) : a.model;
  RankReport report = rank_model(matrix, log, model, a.single_trial_index);
  if (a.baselines) {
    report.baselines = baseline_report(log, model, a.pass_n, a.single_trial_index.value_or(0));
  }
  emit(io::render(report, report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct BaselinesArgs {
  std::string outcomes;
  std::string model;
  std::string out;
  std::string format = "json";
  std::uint32_t pass_n = 10;
  std::uint32_t accuracy_trial = 0;
};

int run_baselines(const BaselinesArgs& a) {
  const TrialLog log = io::read_trial_log(a.outcomes);
  const std::string model = a.model.empty() ? single_model(log) : a.model;
  const BaselineReport report = baseline_report(log, model, a.pass_n, a.accuracy_trial);
  emit(io::render(report, report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct SimulateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  int threads = 0;
};

int run_simulate(const SimulateArgs& a) {
  const std::filesystem::path cfg_path(a.config);
  io::SimulationFile file =
      io::simulation_config_from_json(io::read_json(cfg_path), cfg_path.parent_path());
  SimulationConfig& config = file.config;
  config.seed = a.seed;
  config.threads = a.threads;
  if (file.true_interval) {
    const CapabilityMatrix ladder = synth_matrix(config);
    const auto hyps = interval_hypotheses(ladder);
    if (*file.true_interval >= hyps.size()) {
      throw ValidationError("true_interval " + std::to_string(*file.true_interval) +
                            " out of range (" + std::to_string(hyps.size()) + " intervals)");
    }
    const auto& h = hyps[*file.true_interval];
    config.true_theta = 0.5 * (h.lower_theta + h.upper_theta);
  }
  const SimulationReport report = run_robustness(config);
  emit(io::render(report, report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct ReportArgs {
  std::string input;
  std::string out;
  std::string format = "markdown";
};

int run_report(const ReportArgs& a) {
  emit(io::render_document(io::read_json(a.input), report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct CompareArgs {
  std::string matrix;
  std::string outcomes;
  std::vector<std::string> models;
  std::string out;
  std::string format = "markdown";
  std::uint32_t pass_n = 10;
  std::uint32_t single_trial_index = 0;
};

int run_compare(const CompareArgs& a) {
  const CapabilityMatrix matrix = io::read_matrix(a.matrix);
  const TrialLog log = io::read_trial_log(a.outcomes);
  std::vector<std::string> models = a.models;
  if (models.empty()) {
    for (const auto& id : log.model_ids()) {
      if (!matrix.anchors().index_of(id)) models.push_back(id);
    }
  }
  const MethodComparison cmp =
      compare_methods(matrix, log, models, a.pass_n, a.single_trial_index);
  emit(io::render(cmp, report_format_from_string(a.format)), a.out);
  return kExitOk;
}

struct CollectArgs {
  std::string config;
  std::string out;
  bool append = false;
};

int run_collect(const CollectArgs& a) {
  const std::filesystem::path cfg_path(a.config);
  const RunnerConfig config =
      io::runner_config_from_json(io::read_json(cfg_path), cfg_path.parent_path());
  const TrialLog log = collect(config);
  if (a.out.empty() || a.out == "-") {
    io::write_trial_log(log, std::cout);
  } else {
    io::write_trial_log(log, a.out, a.append);
  }
  if (log.partial()) {
    std::cerr << "warning: partial log, " << log.errors.size() << " (query, trial) pair(s) failed\n";
    for (const auto& e : log.errors) {
      std::cerr << "  " << e.query_id << " trial " << e.trial_index << ": " << to_string(e.kind)
                << ": " << e.message << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian capability ranking against an anchor-model ladder"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Build a capability matrix from anchor trial logs");
  c->add_option("--outcomes", cal.outcomes, "Anchor trial log (JSON Lines)")->required();
  c->add_option("--out", cal.out, "Matrix file to write (default stdout)");
  c->add_option("--epsilon", cal.epsilon, "Replacement for extremal 0/1 probabilities")
      ->capture_default_str();
  c->add_option("--anchors", cal.anchors, "Anchor model ids (default: every model in the log)")
      ->delimiter(',');
  c->add_option("--queries", cal.queries, "Query ids in column order (default: log order)")
      ->delimiter(',');
  c->add_option("--format", cal.format, "json, csv or markdown")->capture_default_str();

  RankArgs rk;
  auto* r = app.add_subcommand("rank", "Posterior over capability intervals for one model");
  r->add_option("--matrix", rk.matrix, "Capability matrix file")->required();
  r->add_option("--outcomes", rk.outcomes, "Test model trial log")->required();
  r->add_option("--model", rk.model, "Model id (optional when the log holds one model)");
  r->add_option("--single-trial-index", rk.single_trial_index,
                "Use only this trial per query (Bayesian@1)");
  r->add_flag("--baselines", rk.baselines, "Attach accuracy, Pass@N and mean/std");
  r->add_option("--pass-n", rk.pass_n, "N for Pass@N")->capture_default_str();
  r->add_option("--out", rk.out, "Output file (default stdout)");
  r->add_option("--format", rk.format, "json, csv or markdown")->capture_default_str();

  BaselinesArgs bl;
  auto* b = app.add_subcommand("baselines", "Accuracy, Pass@N and mean/std for one model");
  b->add_option("--outcomes", bl.outcomes, "Trial log")->required();
  b->add_option("--model", bl.model, "Model id (optional when the log holds one model)");
  b->add_option("--pass-n", bl.pass_n, "N for Pass@N")->capture_default_str();
  b->add_option("--accuracy-trial", bl.accuracy_trial, "Trial used for single-trial accuracy")
      ->capture_default_str();
  b->add_option("--out", bl.out, "Output file (default stdout)");
  b->add_option("--format", bl.format, "json, csv or markdown")->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Seeded robustness study over query counts");
  s->add_option("--config", sim.config, "Simulation config (JSON)")->required();
  s->add_option("--seed", sim.seed, "Master seed")->required();
  s->add_option("--threads", sim.threads, "Worker threads (0 = OpenMP default)");
  s->add_option("--out", sim.out, "Output file (default stdout)");
  s->add_option("--format", sim.format, "json, csv or markdown")->capture_default_str();

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "Render a saved matrix or report");
  p->add_option("--input", rep.input, "Matrix, rank, simulation or comparison JSON")->required();
  p->add_option("--out", rep.out, "Output file (default stdout)");
  p->add_option("--format", rep.format, "json, csv or markdown")->capture_default_str();

  CompareArgs cmp;
  auto* k = app.add_subcommand("compare", "Bayesian@1, Bayesian@O and baselines side by side");
  k->add_option("--matrix", cmp.matrix, "Capability matrix file")->required();
  k->add_option("--outcomes", cmp.outcomes, "Trial log with the test models")->required();
  k->add_option("--models", cmp.models, "Model ids (default: every non-anchor model)")
      ->delimiter(',');
  k->add_option("--pass-n", cmp.pass_n, "N for Pass@N")->capture_default_str();
  k->add_option("--single-trial-index", cmp.single_trial_index,
                "Trial used by Bayesian@1 and accuracy")
      ->capture_default_str();
  k->add_option("--out", cmp.out, "Output file (default stdout)");
  k->add_option("--format", cmp.format, "json, csv or markdown")->capture_default_str();

  CollectArgs col;
  auto* g = app.add_subcommand("collect", "Run a model over a query set and log outcomes");
  g->add_option("--config", col.config, "Runner config (JSON)")->required();
  g->add_option("--out", col.out, "Trial log to write (default stdout)");
  g->add_flag("--append", col.append, "Append to an existing log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*c) return run_calibrate(cal);
    if (*r) return run_rank(rk);
    if (*b) return run_baselines(bl);
    if (*s) return run_simulate(sim);
    if (*p) return run_report(rep);
    if (*k) return run_compare(cmp);
    if (*g) return run_collect(col);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
