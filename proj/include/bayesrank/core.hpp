#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayesrank {

// Error taxonomy. The CLI maps these onto exit codes 1 (validation),
// 2 (I/O) and 3 (format).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultEpsilon = 0.01;
inline constexpr double kThetaTolerance = 1e-9;

/// A reference model on the capability ladder. `theta` is the mean of the
/// model's epsilon-adjusted per-query success probabilities, so it lives in
/// [0, 1].
struct AnchorModel {
  std::string id;
  double theta = 0.0;
};

/// Anchors in strictly ascending theta order. The two boundary anchors
/// (theta 0, always wrong; theta 1, always right) are never stored here;
/// inference synthesizes them.
class AnchorSet {
 public:
  AnchorSet() = default;
  explicit AnchorSet(std::vector<AnchorModel> anchors);

  std::size_t size() const noexcept { return anchors_.size(); }
  bool empty() const noexcept { return anchors_.empty(); }
  const AnchorModel& operator[](std::size_t i) const { return anchors_[i]; }
  const std::vector<AnchorModel>& anchors() const noexcept { return anchors_; }
  auto begin() const noexcept { return anchors_.begin(); }
  auto end() const noexcept { return anchors_.end(); }

  std::optional<std::size_t> index_of(const std::string& id) const;

 private:
  std::vector<AnchorModel> anchors_;
};

/// N x M grid of Pr(query j correct | anchor i), epsilon-adjusted, plus the
/// anchor ladder it induces. Immutable once built.
class CapabilityMatrix {
 public:
  /// Builds the matrix and derives each anchor's theta as its row mean.
  /// `probs` is row-major, anchors.size() x query_ids.size(). Anchors must
  /// already be in strictly ascending row-mean order.
  CapabilityMatrix(std::vector<std::string> anchor_ids,
                   std::vector<std::string> query_ids, std::vector<double> probs,
                   std::uint32_t trials_per_cell, double epsilon);

  std::size_t anchor_count() const noexcept { return anchors_.size(); }
  std::size_t query_count() const noexcept { return query_ids_.size(); }

  const AnchorSet& anchors() const noexcept { return anchors_; }
  const std::vector<std::string>& query_ids() const noexcept { return query_ids_; }
  std::uint32_t trials_per_cell() const noexcept { return trials_per_cell_; }
  double epsilon() const noexcept { return epsilon_; }

  double prob(std::size_t anchor, std::size_t query) const {
    return probs_[anchor * query_ids_.size() + query];
  }
  double theta(std::size_t anchor) const { return anchors_[anchor].theta; }
  std::span<const double> row(std::size_t anchor) const {
    return {probs_.data() + anchor * query_ids_.size(), query_ids_.size()};
  }
  std::span<const double> data() const noexcept { return probs_; }

  std::optional<std::size_t> query_index(const std::string& id) const;

  /// Matrix restricted to the given columns, in the given order. Anchors are
  /// re-sorted by their row means over the selected columns; an exact tie
  /// throws ValidationError.
  CapabilityMatrix select_queries(std::span<const std::size_t> columns) const;

 private:
  AnchorSet anchors_;
  std::vector<std::string> query_ids_;
  std::vector<double> probs_;
  std::uint32_t trials_per_cell_ = 1;
  double epsilon_ = kDefaultEpsilon;
};

struct TrialRecord {
  std::string model_id;
  std::string query_id;
  std::uint32_t trial_index = 0;
  bool correct = false;
};

enum class RunErrorKind { transport, timeout, malformed, exhausted };

const char* to_string(RunErrorKind kind) noexcept;
RunErrorKind run_error_kind_from_string(const std::string& s);

/// A (query, trial) attempt that produced no outcome. Excluded from the
/// records rather than scored as incorrect.
struct RunError {
  std::string model_id;
  std::string query_id;
  std::uint32_t trial_index = 0;
  RunErrorKind kind = RunErrorKind::transport;
  std::string message;
};

/// Raw binary outcomes. Complete logs have trial indices 0..O-1 for every
/// (model, query) pair; a gap is only legal where a RunError covers it.
struct TrialLog {
  std::vector<TrialRecord> records;
  std::vector<RunError> errors;
  std::map<std::string, std::string> metadata;

  bool partial() const noexcept { return !errors.empty(); }

  /// Throws ValidationError on duplicate triples or uncovered index gaps.
  void validate() const;

  /// Model ids in order of first appearance.
  std::vector<std::string> model_ids() const;
  /// Query ids in order of first appearance.
  std::vector<std::string> query_ids() const;
};

struct QueryObservation {
  std::string query_id;
  std::uint32_t trials = 0;
  std::uint32_t successes = 0;
};

struct ObservationVector {
  std::vector<QueryObservation> per_query;

  std::size_t size() const noexcept { return per_query.size(); }
  const QueryObservation& operator[](std::size_t j) const { return per_query[j]; }
};

/// Maps extremal probabilities 0 and 1 to epsilon and 1 - epsilon.
double epsilon_adjust(double p, double epsilon);

/// Builds the capability matrix from anchor trial logs. Rows come out sorted
/// by ascending theta. Ragged per-cell trial counts are accepted and reported
/// through `warnings` when given; trials_per_cell is the smallest count.
CapabilityMatrix calibrate(const TrialLog& log, const std::vector<std::string>& anchor_ids,
                           const std::vector<std::string>& query_ids,
                           double epsilon = kDefaultEpsilon,
                           std::vector<std::string>* warnings = nullptr);

/// Per-query (trials, successes) for one model, in matrix column order. With
/// `trial_index` set, only that trial is counted (O = 1 per query).
ObservationVector observations_from_log(const TrialLog& log, const std::string& model_id,
                                        const CapabilityMatrix& matrix,
                                        std::optional<std::uint32_t> trial_index = std::nullopt);

/// Reorders `obs` into the matrix's column order. Throws ValidationError when
/// the query sets differ or an entry is out of range (O = 0, K > O).
ObservationVector align_observations(const ObservationVector& obs,
                                     const CapabilityMatrix& matrix);

}  // namespace bayesrank
