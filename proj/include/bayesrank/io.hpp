#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "bayesrank/core.hpp"
#include "bayesrank/runner.hpp"
#include "bayesrank/simulate.hpp"

namespace bayesrank::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kMatrixFormat = "bayesrank.capability_matrix";
inline constexpr const char* kRankReportFormat = "bayesrank.rank_report";
inline constexpr const char* kSimulationReportFormat = "bayesrank.simulation_report";
inline constexpr const char* kComparisonFormat = "bayesrank.method_comparison";
inline constexpr int kFormatVersion = 1;

// Capability matrix: one self-describing JSON document with the anchors
// (id, theta), query ids, epsilon, trials_per_cell and the probability grid.
// Doubles are written in shortest round-trip form, so reading back is exact.
Json matrix_to_json(const CapabilityMatrix& matrix);
CapabilityMatrix matrix_from_json(const Json& doc);
void write_matrix(const CapabilityMatrix& matrix, const std::filesystem::path& path);
CapabilityMatrix read_matrix(const std::filesystem::path& path);

// Trial log: JSON Lines. Each non-blank line is one of
//   {"model": "...", "query": "...", "trial": 0, "correct": true}
//   {"error": {"model": ..., "query": ..., "trial": ..., "kind": ..., "message": ...}}
//   {"meta": {"key": "value", ...}}
// Malformed lines raise FormatError carrying the 1-based line number.
TrialLog parse_trial_log(std::istream& in, const std::string& source = "<stream>");
void write_trial_log(const TrialLog& log, std::ostream& out);
TrialLog read_trial_log(const std::filesystem::path& path);
void write_trial_log(const TrialLog& log, const std::filesystem::path& path, bool append = false);

/// Simulation config document. The seed is not part of the file; callers
/// supply it. An optional "true_interval" key selects the midpoint of that
/// interval of the synthesized ladder as true_theta.
struct SimulationFile {
  SimulationConfig config;
  std::optional<std::size_t> true_interval;
};
SimulationFile simulation_config_from_json(const Json& doc,
                                           const std::filesystem::path& base_dir = {});
Json simulation_config_to_json(const SimulationConfig& config);

RunnerConfig runner_config_from_json(const Json& doc, const std::filesystem::path& base_dir = {});

Json read_json(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace bayesrank::io
