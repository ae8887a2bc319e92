#include "bayesrank/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace bayesrank {

namespace {

double row_mean(std::span<const double> row) {
  double sum = 0.0;
  for (double p : row) sum += p;
  return sum / static_cast<double>(row.size());
}

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw ValidationError(std::string("empty ") + what + " id");
    if (!seen.insert(id).second) {
      throw ValidationError(std::string("duplicate ") + what + " id '" + id + "'");
    }
  }
}

std::string tie_message(const std::string& a, const std::string& b, double theta) {
  std::ostringstream os;
  os.precision(17);
  os << "anchors '" << a << "' and '" << b << "' tie at theta " << theta
     << "; the query set cannot order them (drop or merge one)";
  return os.str();
}

// Sorts rows by mean and rebuilds the matrix; shared by calibrate and
// select_queries.
CapabilityMatrix build_sorted(std::vector<std::string> anchor_ids,
                              std::vector<std::string> query_ids, const std::vector<double>& probs,
                              std::uint32_t trials, double epsilon) {
  const std::size_t n = anchor_ids.size();
  const std::size_t m = query_ids.size();
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) {
    means[i] = row_mean(std::span<const double>(probs.data() + i * m, m));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
  for (std::size_t k = 1; k < n; ++k) {
    if (means[order[k]] == means[order[k - 1]]) {
      throw ValidationError(
          tie_message(anchor_ids[order[k - 1]], anchor_ids[order[k]], means[order[k]]));
    }
  }

  std::vector<std::string> sorted_ids;
  std::vector<double> sorted_probs;
  sorted_ids.reserve(n);
  sorted_probs.reserve(n * m);
  for (std::size_t i : order) {
    sorted_ids.push_back(std::move(anchor_ids[i]));
    sorted_probs.insert(sorted_probs.end(), probs.begin() + static_cast<std::ptrdiff_t>(i * m),
                        probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
  }
  return CapabilityMatrix(std::move(sorted_ids), std::move(query_ids), std::move(sorted_probs),
                          trials, epsilon);
}

}  // namespace

AnchorSet::AnchorSet(std::vector<AnchorModel> anchors) : anchors_(std::move(anchors)) {
  std::vector<std::string> ids;
  ids.reserve(anchors_.size());
  for (const auto& a : anchors_) {
    if (!(a.theta >= 0.0 && a.theta <= 1.0)) {
      throw ValidationError("anchor '" + a.id + "' theta outside [0, 1]");
    }
    ids.push_back(a.id);
  }
  require_unique(ids, "anchor");
  for (std::size_t k = 1; k < anchors_.size(); ++k) {
    if (anchors_[k].theta == anchors_[k - 1].theta) {
      throw ValidationError(tie_message(anchors_[k - 1].id, anchors_[k].id, anchors_[k].theta));
    }
    if (anchors_[k].theta < anchors_[k - 1].theta) {
      throw ValidationError("anchors '" + anchors_[k - 1].id + "' and '" + anchors_[k].id +
                            "' are not in ascending theta order");
    }
  }
}

std::optional<std::size_t> AnchorSet::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    if (anchors_[i].id == id) return i;
  }
  return std::nullopt;
}

CapabilityMatrix::CapabilityMatrix(std::vector<std::string> anchor_ids,
                                   std::vector<std::string> query_ids, std::vector<double> probs,
                                   std::uint32_t trials_per_cell, double epsilon)
    : query_ids_(std::move(query_ids)),
      probs_(std::move(probs)),
      trials_per_cell_(trials_per_cell),
      epsilon_(epsilon) {
  if (!(epsilon_ > 0.0 && epsilon_ < 0.5)) {
    throw ValidationError("epsilon must lie in (0, 0.5)");
  }
  if (anchor_ids.empty()) throw ValidationError("capability matrix needs at least one anchor");
  if (query_ids_.empty()) throw ValidationError("capability matrix needs at least one query");
  if (trials_per_cell_ == 0) throw ValidationError("trials_per_cell must be positive");
  require_unique(anchor_ids, "anchor");
  require_unique(query_ids_, "query");

  const std::size_t n = anchor_ids.size();
  const std::size_t m = query_ids_.size();
  if (probs_.size() != n * m) {
    throw ValidationError("capability matrix grid has " + std::to_string(probs_.size()) +
                          " cells, expected " + std::to_string(n) + "x" + std::to_string(m));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = probs_[i * m + j];
      if (!(p >= epsilon_ && p <= 1.0 - epsilon_)) {
        std::ostringstream os;
        os.precision(17);
        os << "cell (" << anchor_ids[i] << ", " << query_ids_[j] << ") = " << p
           << " lies outside [epsilon, 1 - epsilon]";
        throw ValidationError(os.str());
      }
    }
  }

  std::vector<AnchorModel> anchors;
  anchors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    anchors.push_back({std::move(anchor_ids[i]), row_mean(row(i))});
  }
  anchors_ = AnchorSet(std::move(anchors));
}

std::optional<std::size_t> CapabilityMatrix::query_index(const std::string& id) const {
  for (std::size_t j = 0; j < query_ids_.size(); ++j) {
    if (query_ids_[j] == id) return j;
  }
  return std::nullopt;
}

CapabilityMatrix CapabilityMatrix::select_queries(std::span<const std::size_t> columns) const {
  const std::size_t n = anchor_count();
  std::vector<std::string> ids;
  std::vector<double> probs;
  probs.reserve(n * columns.size());
  for (std::size_t j : columns) {
    if (j >= query_count()) throw std::out_of_range("query column out of range");
    ids.push_back(query_ids_[j]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : columns) probs.push_back(prob(i, j));
  }
  std::vector<std::string> anchor_ids;
  for (const auto& a : anchors_) anchor_ids.push_back(a.id);
  return build_sorted(std::move(anchor_ids), std::move(ids), probs, trials_per_cell_, epsilon_);
}

const char* to_string(RunErrorKind kind) noexcept {
  switch (kind) {
    case RunErrorKind::transport: return "transport";
    case RunErrorKind::timeout: return "timeout";
    case RunErrorKind::malformed: return "malformed";
    case RunErrorKind::exhausted: return "exhausted";
  }
  return "unknown";
}

RunErrorKind run_error_kind_from_string(const std::string& s) {
  if (s == "transport") return RunErrorKind::transport;
  if (s == "timeout") return RunErrorKind::timeout;
  if (s == "malformed") return RunErrorKind::malformed;
  if (s == "exhausted") return RunErrorKind::exhausted;
  throw FormatError("unknown run error kind '" + s + "'");
}

void TrialLog::validate() const {
  using Key = std::tuple<std::string, std::string, std::uint32_t>;
  std::set<Key> seen;
  std::map<std::pair<std::string, std::string>, std::uint32_t> max_index;
  for (const auto& r : records) {
    if (r.model_id.empty() || r.query_id.empty()) {
      throw ValidationError("trial record with empty model or query id");
    }
    if (!seen.emplace(r.model_id, r.query_id, r.trial_index).second) {
      throw ValidationError("duplicate trial record (" + r.model_id + ", " + r.query_id + ", " +
                            std::to_string(r.trial_index) + ")");
    }
    auto& mx = max_index[{r.model_id, r.query_id}];
    mx = std::max(mx, r.trial_index);
  }
  std::set<Key> errored;
  for (const auto& e : errors) {
    if (seen.count({e.model_id, e.query_id, e.trial_index})) {
      throw ValidationError("trial (" + e.model_id + ", " + e.query_id + ", " +
                            std::to_string(e.trial_index) + ") has both an outcome and an error");
    }
    errored.emplace(e.model_id, e.query_id, e.trial_index);
  }
  for (const auto& [pair, mx] : max_index) {
    for (std::uint32_t t = 0; t < mx; ++t) {
      if (!seen.count({pair.first, pair.second, t}) &&
          !errored.count({pair.first, pair.second, t})) {
        throw ValidationError("trial indices for (" + pair.first + ", " + pair.second +
                              ") are not contiguous: index " + std::to_string(t) + " missing");
      }
    }
  }
}

std::vector<std::string> TrialLog::model_ids() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.model_id).second) out.push_back(r.model_id);
  }
  return out;
}

std::vector<std::string> TrialLog::query_ids() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.query_id).second) out.push_back(r.query_id);
  }
  return out;
}

double epsilon_adjust(double p, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::domain_error("epsilon must lie in (0, 0.5)");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability must lie in [0, 1]");
  if (p == 0.0) return epsilon;
  if (p == 1.0) return 1.0 - epsilon;
  return p;
}

CapabilityMatrix calibrate(const TrialLog& log, const std::vector<std::string>& anchor_ids,
                           const std::vector<std::string>& query_ids, double epsilon,
                           std::vector<std::string>* warnings) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ValidationError("epsilon must lie in (0, 0.5)");
  if (anchor_ids.empty()) throw ValidationError("no anchor ids given");
  if (query_ids.empty()) throw ValidationError("no query ids given");
  require_unique(anchor_ids, "anchor");
  require_unique(query_ids, "query");
  log.validate();

  std::unordered_map<std::string, std::size_t> arow;
  std::unordered_map<std::string, std::size_t> qcol;
  for (std::size_t i = 0; i < anchor_ids.size(); ++i) arow[anchor_ids[i]] = i;
  for (std::size_t j = 0; j < query_ids.size(); ++j) qcol[query_ids[j]] = j;

  const std::size_t n = anchor_ids.size();
  const std::size_t m = query_ids.size();
  std::vector<std::uint32_t> trials(n * m, 0);
  std::vector<std::uint32_t> successes(n * m, 0);
  for (const auto& r : log.records) {
    auto ai = arow.find(r.model_id);
    if (ai == arow.end()) continue;
    auto qj = qcol.find(r.query_id);
    if (qj == qcol.end()) continue;
    const std::size_t cell = ai->second * m + qj->second;
    ++trials[cell];
    if (r.correct) ++successes[cell];
  }

  std::vector<std::string> missing;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (trials[i * m + j] == 0) missing.push_back("(" + anchor_ids[i] + ", " + query_ids[j] + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "trial log has no outcomes for " + std::to_string(missing.size()) +
                      " (anchor, query) pair(s):";
    for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg += " " + missing[k];
    if (missing.size() > 20) msg += " ...";
    throw ValidationError(msg);
  }

  const auto [lo, hi] = std::minmax_element(trials.begin(), trials.end());
  if (*lo != *hi && warnings) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (trials[i * m + j] != *hi) {
          warnings->push_back("ragged pair (" + anchor_ids[i] + ", " + query_ids[j] + "): " +
                              std::to_string(trials[i * m + j]) + " trials, expected " +
                              std::to_string(*hi));
        }
      }
    }
  }

  std::vector<double> probs(n * m);
  for (std::size_t c = 0; c < n * m; ++c) {
    probs[c] = epsilon_adjust(static_cast<double>(successes[c]) / static_cast<double>(trials[c]),
                              epsilon);
  }
  return build_sorted(anchor_ids, query_ids, probs, *lo, epsilon);
}

ObservationVector observations_from_log(const TrialLog& log, const std::string& model_id,
                                        const CapabilityMatrix& matrix,
                                        std::optional<std::uint32_t> trial_index) {
  const std::size_t m = matrix.query_count();
  std::vector<QueryObservation> entries(m);
  for (std::size_t j = 0; j < m; ++j) entries[j].query_id = matrix.query_ids()[j];

  std::unordered_map<std::string, std::size_t> qcol;
  for (std::size_t j = 0; j < m; ++j) qcol[matrix.query_ids()[j]] = j;

  std::vector<std::string> unknown;
  std::unordered_set<std::string> unknown_seen;
  std::set<std::pair<std::string, std::uint32_t>> seen;
  for (const auto& r : log.records) {
    if (r.model_id != model_id) continue;
    if (!seen.emplace(r.query_id, r.trial_index).second) {
      throw ValidationError("duplicate trial record (" + r.model_id + ", " + r.query_id + ", " +
                            std::to_string(r.trial_index) + ")");
    }
    auto it = qcol.find(r.query_id);
    if (it == qcol.end()) {
      if (unknown_seen.insert(r.query_id).second) unknown.push_back(r.query_id);
      continue;
    }
    if (trial_index && r.trial_index != *trial_index) continue;
    auto& e = entries[it->second];
    ++e.trials;
    if (r.correct) ++e.successes;
  }
  if (!unknown.empty()) {
    std::string msg = "outcomes for '" + model_id + "' reference query ids not in the matrix:";
    for (const auto& q : unknown) msg += " " + q;
    throw ValidationError(msg);
  }

  std::vector<std::string> missing;
  for (const auto& e : entries) {
    if (e.trials == 0) missing.push_back(e.query_id);
  }
  if (!missing.empty()) {
    std::string msg = "no outcomes for model '" + model_id + "'";
    if (trial_index) msg += " at trial " + std::to_string(*trial_index);
    msg += " on query id(s):";
    for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg += " " + missing[k];
    if (missing.size() > 20) msg += " ... (" + std::to_string(missing.size()) + " total)";
    throw ValidationError(msg);
  }
  return {std::move(entries)};
}

ObservationVector align_observations(const ObservationVector& obs,
                                     const CapabilityMatrix& matrix) {
  const std::size_t m = matrix.query_count();
  if (obs.size() != m) {
    throw ValidationError("observation has " + std::to_string(obs.size()) +
                          " queries, matrix has " + std::to_string(m));
  }
  std::vector<QueryObservation> out(m);
  std::vector<bool> filled(m, false);
  for (const auto& e : obs.per_query) {
    auto j = matrix.query_index(e.query_id);
    if (!j) throw ValidationError("observation query '" + e.query_id + "' not in matrix");
    if (filled[*j]) throw ValidationError("observation query '" + e.query_id + "' repeated");
    if (e.trials == 0) {
      throw ValidationError("observation for query '" + e.query_id + "' has zero trials");
    }
    if (e.successes > e.trials) {
      throw ValidationError("observation for query '" + e.query_id +
                            "' has more successes than trials");
    }
    out[*j] = e;
    filled[*j] = true;
  }
  return {std::move(out)};
}

}  // namespace bayesrank
