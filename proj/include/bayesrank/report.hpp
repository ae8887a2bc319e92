#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bayesrank/baselines.hpp"
#include "bayesrank/core.hpp"
#include "bayesrank/inference.hpp"
#include "bayesrank/io.hpp"
#include "bayesrank/simulate.hpp"

namespace bayesrank {

enum class ReportFormat { json, csv, markdown };

ReportFormat report_format_from_string(const std::string& s);

struct ExceedanceStatement {
  std::string anchor_id;
  double probability = 0.0;
};

struct MostLikely {
  std::size_t interval = 0;
  std::string description;
  double probability = 0.0;
};

/// "Bayesian@O" ranking of one model against the anchor ladder, with an
/// exceedance statement per anchor.
struct RankReport {
  std::string model_id;
  /// Trials per query fed to the posterior (1 for single-trial mode).
  std::uint32_t trials_per_query = 0;
  /// Set in single-trial mode.
  std::optional<std::uint32_t> single_trial_index;
  IntervalPosterior posterior;
  std::vector<ExceedanceStatement> statements;
  MostLikely most_likely;
  std::optional<BaselineReport> baselines;

  std::string method_label() const;
};

std::string describe_interval(const IntervalHypothesis& h);

RankReport make_rank_report(const std::string& model_id, const IntervalPosterior& post,
                            std::uint32_t trials_per_query,
                            std::optional<std::uint32_t> single_trial_index = std::nullopt,
                            std::optional<BaselineReport> baselines = std::nullopt);

/// Ranks `model_id` from its outcomes in `log`.
RankReport rank_model(const CapabilityMatrix& matrix, const TrialLog& log,
                      const std::string& model_id,
                      std::optional<std::uint32_t> single_trial_index = std::nullopt);

/// Side-by-side methods for one model: Bayesian@1, Bayesian@O, accuracy,
/// Pass@N and mean +/- std from the same log.
struct ComparisonRow {
  std::string model_id;
  RankReport bayes_single;
  RankReport bayes_all;
  BaselineReport baselines;
};

struct MethodComparison {
  std::vector<ComparisonRow> rows;
};

MethodComparison compare_methods(const CapabilityMatrix& matrix, const TrialLog& log,
                                 const std::vector<std::string>& model_ids, std::uint32_t pass_n,
                                 std::uint32_t single_trial_index = 0);

namespace io {

Json rank_report_to_json(const RankReport& report);
RankReport rank_report_from_json(const Json& doc);
Json baseline_report_to_json(const BaselineReport& report);
BaselineReport baseline_report_from_json(const Json& doc);
Json simulation_report_to_json(const SimulationReport& report);
SimulationReport simulation_report_from_json(const Json& doc);
Json comparison_to_json(const MethodComparison& cmp);
MethodComparison comparison_from_json(const Json& doc);

// Human-facing renderings round probabilities to 4 decimal places.
std::string render(const RankReport& report, ReportFormat format);
std::string render(const BaselineReport& report, ReportFormat format);
std::string render(const SimulationReport& report, ReportFormat format);
std::string render(const MethodComparison& cmp, ReportFormat format);
/// Matrix dump: N rows by M query columns, with the epsilon modulation noted.
std::string render(const CapabilityMatrix& matrix, ReportFormat format);

/// Dispatches on the document's "format" field.
std::string render_document(const Json& doc, ReportFormat format);

}  // namespace io

}  // namespace bayesrank
