#include "bayesrank/report.hpp"

#include <cstdio>
#include <sstream>

namespace bayesrank {

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g%%", v * 100.0);
  return buf;
}

std::string interval_label(const IntervalHypothesis& h) {
  return h.lower_anchor_id + ".." + h.upper_anchor_id;
}

// CSV field quoting for ids that carry commas or quotes.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw ValidationError("unknown format '" + s + "' (expected json, csv or markdown)");
}

std::string RankReport::method_label() const {
  return "Bayesian@" + std::to_string(trials_per_query);
}

std::string describe_interval(const IntervalHypothesis& h) {
  if (h.lower_anchor_id == kBottomAnchorId) {
    return "below " + h.upper_anchor_id + " (theta <= " + fixed4(h.upper_theta) + ")";
  }
  if (h.upper_anchor_id == kTopAnchorId) {
    return "above " + h.lower_anchor_id + " (theta > " + fixed4(h.lower_theta) + ")";
  }
  return "between " + h.lower_anchor_id + " and " + h.upper_anchor_id + " (" +
         fixed4(h.lower_theta) + " < theta <= " + fixed4(h.upper_theta) + ")";
}

RankReport make_rank_report(const std::string& model_id, const IntervalPosterior& post,
                            std::uint32_t trials_per_query,
                            std::optional<std::uint32_t> single_trial_index,
                            std::optional<BaselineReport> baselines) {
  RankReport r;
  r.model_id = model_id;
  r.trials_per_query = trials_per_query;
  r.single_trial_index = single_trial_index;
  r.posterior = post;
  for (const auto& h : post.hypotheses) {
    if (h.lower_anchor_id == kBottomAnchorId) continue;
    r.statements.push_back({h.lower_anchor_id, exceedance(post, h.lower_anchor_id)});
  }
  const std::size_t best = post.argmax();
  r.most_likely = {best, describe_interval(post.hypotheses[best]), post.posterior[best]};
  r.baselines = std::move(baselines);
  return r;
}

RankReport rank_model(const CapabilityMatrix& matrix, const TrialLog& log,
                      const std::string& model_id,
                      std::optional<std::uint32_t> single_trial_index) {
  const ObservationVector obs = observations_from_log(log, model_id, matrix, single_trial_index);
  std::uint32_t trials = obs[0].trials;
  for (const auto& e : obs.per_query) trials = std::min(trials, e.trials);
  return make_rank_report(model_id, posterior(matrix, obs), trials, single_trial_index);
}

MethodComparison compare_methods(const CapabilityMatrix& matrix, const TrialLog& log,
                                 const std::vector<std::string>& model_ids, std::uint32_t pass_n,
                                 std::uint32_t single_trial_index) {
  MethodComparison cmp;
  for (const auto& id : model_ids) {
    cmp.rows.push_back({id, rank_model(matrix, log, id, single_trial_index),
                        rank_model(matrix, log, id),
                        baseline_report(log, id, pass_n, single_trial_index)});
  }
  return cmp;
}

namespace io {

namespace {

Json hypothesis_to_json(const IntervalHypothesis& h) {
  Json j;
  j["index"] = h.index;
  j["lower_anchor"] = h.lower_anchor_id;
  j["upper_anchor"] = h.upper_anchor_id;
  j["lower_theta"] = h.lower_theta;
  j["upper_theta"] = h.upper_theta;
  return j;
}

IntervalHypothesis hypothesis_from_json(const Json& j) {
  try {
    return {j.at("index").get<std::size_t>(), j.at("lower_theta").get<double>(),
            j.at("upper_theta").get<double>(), j.at("lower_anchor").get<std::string>(),
            j.at("upper_anchor").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("interval entry: ") + e.what());
  }
}

void expect_format(const Json& doc, const char* format) {
  if (!doc.is_object() || !doc.contains("format") || doc.at("format") != format) {
    throw FormatError(std::string("document is not a ") + format);
  }
}

std::string rank_markdown(const RankReport& r) {
  std::ostringstream os;
  const auto& p = r.posterior;
  os << "# Ranking of " << md_escape(r.model_id) << " (" << r.method_label();
  if (r.single_trial_index) os << ", trial " << *r.single_trial_index;
  os << ")\n\n";
  os << "| Interval | Range | Prior | Posterior |\n|---|---|---|---|\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << "| " << i << " | " << md_escape(describe_interval(p.hypotheses[i])) << " | "
       << fixed4(p.prior[i]) << " | " << fixed4(p.posterior[i]) << " |\n";
  }
  os << "\nMost likely: " << md_escape(r.most_likely.description) << " with probability "
     << fixed4(r.most_likely.probability) << "\n\n";
  os << "| Statement | Probability |\n|---|---|\n";
  for (const auto& s : r.statements) {
    os << "| " << md_escape(r.model_id) << " surpasses " << md_escape(s.anchor_id) << " | "
       << fixed4(s.probability) << " |\n";
  }
  if (r.baselines) {
    const auto& b = *r.baselines;
    os << "\n## Conventional metrics\n\n| Method | Value |\n|---|---|\n"
       << "| Accuracy (trial " << b.accuracy_trial << ") | " << fixed4(b.accuracy_single) << " |\n"
       << "| Pass@" << b.pass_n << " | " << fixed4(b.pass_at_n) << " |\n"
       << "| Mean +/- std (O=" << b.trials << ") | " << fixed4(b.mean) << " +/- "
       << fixed4(b.std_dev) << " |\n"
       << "| Mean +/- stderr (O=" << b.trials << ") | " << fixed4(b.mean) << " +/- "
       << fixed4(b.std_error) << " |\n";
  }
  return os.str();
}

std::string rank_csv(const RankReport& r) {
  std::ostringstream os;
  os << "interval,lower_anchor,upper_anchor,lower_theta,upper_theta,prior,posterior\n";
  const auto& p = r.posterior;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& h = p.hypotheses[i];
    os << i << ',' << csv_field(h.lower_anchor_id) << ',' << csv_field(h.upper_anchor_id) << ','
       << fixed4(h.lower_theta) << ',' << fixed4(h.upper_theta) << ',' << fixed4(p.prior[i])
       << ',' << fixed4(p.posterior[i]) << '\n';
  }
  return os.str();
}

}  // namespace

Json rank_report_to_json(const RankReport& r) {
  Json doc;
  doc["format"] = kRankReportFormat;
  doc["version"] = kFormatVersion;
  doc["model"] = r.model_id;
  doc["method"] = r.method_label();
  doc["trials_per_query"] = r.trials_per_query;
  doc["single_trial_index"] =
      r.single_trial_index ? Json(*r.single_trial_index) : Json(nullptr);
  Json intervals = Json::array();
  for (std::size_t i = 0; i < r.posterior.size(); ++i) {
    Json j = hypothesis_to_json(r.posterior.hypotheses[i]);
    j["prior"] = r.posterior.prior[i];
    j["log_likelihood"] = r.posterior.log_likelihood[i];
    j["posterior"] = r.posterior.posterior[i];
    intervals.push_back(std::move(j));
  }
  doc["intervals"] = std::move(intervals);
  doc["evidence_log"] = r.posterior.evidence_log;
  Json statements = Json::array();
  for (const auto& s : r.statements) {
    statements.push_back({{"anchor", s.anchor_id}, {"exceedance", s.probability}});
  }
  doc["exceedance"] = std::move(statements);
  doc["most_likely"] = {{"interval", r.most_likely.interval},
                        {"description", r.most_likely.description},
                        {"probability", r.most_likely.probability}};
  doc["baselines"] = r.baselines ? baseline_report_to_json(*r.baselines) : Json(nullptr);
  return doc;
}

RankReport rank_report_from_json(const Json& doc) {
  expect_format(doc, kRankReportFormat);
  try {
    RankReport r;
    r.model_id = doc.at("model").get<std::string>();
    r.trials_per_query = doc.at("trials_per_query").get<std::uint32_t>();
    if (!doc.at("single_trial_index").is_null()) {
      r.single_trial_index = doc.at("single_trial_index").get<std::uint32_t>();
    }
    for (const auto& j : doc.at("intervals")) {
      r.posterior.hypotheses.push_back(hypothesis_from_json(j));
      r.posterior.prior.push_back(j.at("prior").get<double>());
      r.posterior.log_likelihood.push_back(j.at("log_likelihood").get<double>());
      r.posterior.posterior.push_back(j.at("posterior").get<double>());
    }
    r.posterior.evidence_log = doc.at("evidence_log").get<double>();
    for (const auto& s : doc.at("exceedance")) {
      r.statements.push_back({s.at("anchor").get<std::string>(), s.at("exceedance").get<double>()});
    }
    const Json& ml = doc.at("most_likely");
    r.most_likely = {ml.at("interval").get<std::size_t>(), ml.at("description").get<std::string>(),
                     ml.at("probability").get<double>()};
    if (!doc.at("baselines").is_null()) r.baselines = baseline_report_from_json(doc.at("baselines"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("rank report: ") + e.what());
  }
}

Json baseline_report_to_json(const BaselineReport& b) {
  Json doc;
  doc["model"] = b.model_id;
  doc["trials"] = b.trials;
  doc["accuracy_trial"] = b.accuracy_trial;
  doc["accuracy"] = b.accuracy_single;
  doc["pass_n"] = b.pass_n;
  doc["pass_at_n"] = b.pass_at_n;
  doc["mean"] = b.mean;
  doc["std"] = b.std_dev;
  doc["stderr"] = b.std_error;
  return doc;
}

BaselineReport baseline_report_from_json(const Json& doc) {
  try {
    BaselineReport b;
    b.model_id = doc.at("model").get<std::string>();
    b.trials = doc.at("trials").get<std::uint32_t>();
    b.accuracy_trial = doc.at("accuracy_trial").get<std::uint32_t>();
    b.accuracy_single = doc.at("accuracy").get<double>();
    b.pass_n = doc.at("pass_n").get<std::uint32_t>();
    b.pass_at_n = doc.at("pass_at_n").get<double>();
    b.mean = doc.at("mean").get<double>();
    b.std_dev = doc.at("std").get<double>();
    b.std_error = doc.at("stderr").get<double>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("baseline report: ") + e.what());
  }
}

Json simulation_report_to_json(const SimulationReport& r) {
  Json doc;
  doc["format"] = kSimulationReportFormat;
  doc["version"] = kFormatVersion;
  doc["config"] = simulation_config_to_json(r.config);
  Json anchors = Json::array();
  for (const auto& a : r.anchors) anchors.push_back({{"id", a.id}, {"theta", a.theta}});
  doc["anchors"] = std::move(anchors);
  doc["true_interval"] = r.true_interval;
  doc["true_lower_anchor"] = r.true_lower_anchor;
  doc["true_upper_anchor"] = r.true_upper_anchor;
  Json summaries = Json::array();
  for (const auto& s : r.summaries) {
    summaries.push_back({{"m", s.m},
                         {"recovery_rate", s.recovery_rate},
                         {"mean_peak", s.mean_peak},
                         {"mean_posterior", s.mean_posterior}});
  }
  doc["summaries"] = std::move(summaries);
  Json records = Json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"m", rec.m},
                       {"replication", rec.replication},
                       {"argmax", rec.argmax},
                       {"peak", rec.peak},
                       {"recovered", rec.recovered},
                       {"posterior", rec.posterior}});
  }
  doc["records"] = std::move(records);
  return doc;
}

SimulationReport simulation_report_from_json(const Json& doc) {
  expect_format(doc, kSimulationReportFormat);
  try {
    SimulationReport r;
    Json cfg = doc.at("config");
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    cfg.erase("seed");
    r.config = simulation_config_from_json(cfg).config;
    r.config.seed = seed;
    for (const auto& a : doc.at("anchors")) {
      r.anchors.push_back({a.at("id").get<std::string>(), a.at("theta").get<double>()});
    }
    r.true_interval = doc.at("true_interval").get<std::size_t>();
    r.true_lower_anchor = doc.at("true_lower_anchor").get<std::string>();
    r.true_upper_anchor = doc.at("true_upper_anchor").get<std::string>();
    for (const auto& s : doc.at("summaries")) {
      r.summaries.push_back({s.at("m").get<std::uint32_t>(), s.at("recovery_rate").get<double>(),
                             s.at("mean_peak").get<double>(),
                             s.at("mean_posterior").get<std::vector<double>>()});
    }
    for (const auto& rec : doc.at("records")) {
      r.records.push_back({rec.at("m").get<std::uint32_t>(),
                           rec.at("replication").get<std::uint32_t>(),
                           rec.at("argmax").get<std::size_t>(), rec.at("peak").get<double>(),
                           rec.at("recovered").get<bool>(),
                           rec.at("posterior").get<std::vector<double>>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("simulation report: ") + e.what());
  }
}

Json comparison_to_json(const MethodComparison& cmp) {
  Json doc;
  doc["format"] = kComparisonFormat;
  doc["version"] = kFormatVersion;
  Json rows = Json::array();
  for (const auto& row : cmp.rows) {
    rows.push_back({{"model", row.model_id},
                    {"bayes_single", rank_report_to_json(row.bayes_single)},
                    {"bayes_all", rank_report_to_json(row.bayes_all)},
                    {"baselines", baseline_report_to_json(row.baselines)}});
  }
  doc["rows"] = std::move(rows);
  return doc;
}

MethodComparison comparison_from_json(const Json& doc) {
  expect_format(doc, kComparisonFormat);
  try {
    MethodComparison cmp;
    for (const auto& row : doc.at("rows")) {
      cmp.rows.push_back({row.at("model").get<std::string>(),
                          rank_report_from_json(row.at("bayes_single")),
                          rank_report_from_json(row.at("bayes_all")),
                          baseline_report_from_json(row.at("baselines"))});
    }
    return cmp;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("method comparison: ") + e.what());
  }
}

std::string render(const RankReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return rank_report_to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return rank_csv(report);
    case ReportFormat::markdown: return rank_markdown(report);
  }
  return {};
}

std::string render(const BaselineReport& b, ReportFormat format) {
  std::ostringstream os;
  switch (format) {
    case ReportFormat::json:
      return baseline_report_to_json(b).dump(2) + "\n";
    case ReportFormat::csv:
      os << "model,trials,accuracy_trial,accuracy,pass_n,pass_at_n,mean,std,stderr\n"
         << csv_field(b.model_id) << ',' << b.trials << ',' << b.accuracy_trial << ','
         << fixed4(b.accuracy_single) << ',' << b.pass_n << ',' << fixed4(b.pass_at_n) << ','
         << fixed4(b.mean) << ',' << fixed4(b.std_dev) << ',' << fixed4(b.std_error) << '\n';
      return os.str();
    case ReportFormat::markdown:
      os << "# Conventional metrics for " << md_escape(b.model_id) << "\n\n"
         << "| Method | Value |\n|---|---|\n"
         << "| Accuracy (trial " << b.accuracy_trial << ") | " << fixed4(b.accuracy_single)
         << " |\n"
         << "| Pass@" << b.pass_n << " | " << fixed4(b.pass_at_n) << " |\n"
         << "| Mean +/- std (O=" << b.trials << ") | " << fixed4(b.mean) << " +/- "
         << fixed4(b.std_dev) << " |\n"
         << "| Mean +/- stderr (O=" << b.trials << ") | " << fixed4(b.mean) << " +/- "
         << fixed4(b.std_error) << " |\n";
      return os.str();
  }
  return {};
}

std::string render(const SimulationReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return simulation_report_to_json(r).dump(2) + "\n";
  const std::size_t n_intervals = r.anchors.size() + 1;
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    os << "m,replication,argmax,peak,recovered";
    for (std::size_t i = 0; i < n_intervals; ++i) os << ",p" << i;
    os << '\n';
    for (const auto& rec : r.records) {
      os << rec.m << ',' << rec.replication << ',' << rec.argmax << ',' << fixed4(rec.peak) << ','
         << (rec.recovered ? 1 : 0);
      for (double p : rec.posterior) os << ',' << fixed4(p);
      os << '\n';
    }
    return os.str();
  }

  os << "# Robustness over query count\n\n"
     << "Seed " << r.config.seed << ", " << r.config.replications << " replications, O="
     << r.config.trials_per_cell << ", true theta " << fixed4(r.config.true_theta)
     << " in interval " << r.true_interval << " (" << r.true_lower_anchor << ".."
     << r.true_upper_anchor << ").\n\n";
  os << "| Anchor | Theta |\n|---|---|\n";
  for (const auto& a : r.anchors) os << "| " << md_escape(a.id) << " | " << fixed4(a.theta) << " |\n";
  os << "\n| M | Recovery rate | Mean peak |";
  for (std::size_t i = 0; i < n_intervals; ++i) os << " I" << i << " |";
  os << "\n|---|---|---|";
  for (std::size_t i = 0; i < n_intervals; ++i) os << "---|";
  os << '\n';
  for (const auto& s : r.summaries) {
    os << "| " << s.m << " | " << fixed4(s.recovery_rate) << " | " << fixed4(s.mean_peak) << " |";
    for (double p : s.mean_posterior) os << ' ' << fixed4(p) << " |";
    os << '\n';
  }
  os << "\nI columns hold the mean posterior per interval (I0 is below the lowest anchor).\n";
  return os.str();
}

std::string render(const MethodComparison& cmp, ReportFormat format) {
  if (format == ReportFormat::json) return comparison_to_json(cmp).dump(2) + "\n";
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    os << "model,bayes_single_interval,bayes_single_probability,bayes_all_interval,"
          "bayes_all_probability,accuracy,pass_n,pass_at_n,mean,std,stderr\n";
    for (const auto& row : cmp.rows) {
      const auto& s = row.bayes_single;
      const auto& a = row.bayes_all;
      const auto& b = row.baselines;
      os << csv_field(row.model_id) << ','
         << csv_field(interval_label(s.posterior.hypotheses[s.most_likely.interval])) << ','
         << fixed4(s.most_likely.probability) << ','
         << csv_field(interval_label(a.posterior.hypotheses[a.most_likely.interval])) << ','
         << fixed4(a.most_likely.probability) << ',' << fixed4(b.accuracy_single) << ','
         << b.pass_n << ',' << fixed4(b.pass_at_n) << ',' << fixed4(b.mean) << ','
         << fixed4(b.std_dev) << ',' << fixed4(b.std_error) << '\n';
    }
    return os.str();
  }
  if (cmp.rows.empty()) return "# Method comparison\n\n(no models)\n";
  const auto& first = cmp.rows.front();
  os << "# Method comparison\n\n| Model | " << first.bayes_single.method_label() << " | "
     << first.bayes_all.method_label() << " | Accuracy | Pass@" << first.baselines.pass_n
     << " | Mean +/- std |\n|---|---|---|---|---|---|\n";
  for (const auto& row : cmp.rows) {
    const auto& s = row.bayes_single;
    const auto& a = row.bayes_all;
    const auto& b = row.baselines;
    os << "| " << md_escape(row.model_id) << " | "
       << md_escape(interval_label(s.posterior.hypotheses[s.most_likely.interval])) << " ("
       << fixed4(s.most_likely.probability) << ") | "
       << md_escape(interval_label(a.posterior.hypotheses[a.most_likely.interval])) << " ("
       << fixed4(a.most_likely.probability) << ") | " << fixed4(b.accuracy_single) << " | "
       << fixed4(b.pass_at_n) << " | " << fixed4(b.mean) << " +/- " << fixed4(b.std_dev)
       << " |\n";
  }
  return os.str();
}

std::string render(const CapabilityMatrix& matrix, ReportFormat format) {
  if (format == ReportFormat::json) return matrix_to_json(matrix).dump(2) + "\n";
  std::ostringstream os;
  const auto& q = matrix.query_ids();
  if (format == ReportFormat::csv) {
    os << "anchor";
    for (const auto& id : q) os << ',' << csv_field(id);
    os << '\n';
    for (std::size_t i = 0; i < matrix.anchor_count(); ++i) {
      os << csv_field(matrix.anchors()[i].id);
      for (double p : matrix.row(i)) os << ',' << fixed4(p);
      os << '\n';
    }
    return os.str();
  }
  os << "# Capability matrix\n\n"
     << "Success probability of each anchor on each query over O=" << matrix.trials_per_cell()
     << " trials. Extreme values {0%, 100%} modulated to {" << percent(matrix.epsilon()) << ", "
     << percent(1.0 - matrix.epsilon()) << "}.\n\n| Anchor | Theta |";
  for (const auto& id : q) os << ' ' << md_escape(id) << " |";
  os << "\n|---|---|";
  for (std::size_t j = 0; j < q.size(); ++j) os << "---|";
  os << '\n';
  for (std::size_t i = 0; i < matrix.anchor_count(); ++i) {
    os << "| " << md_escape(matrix.anchors()[i].id) << " | " << fixed4(matrix.theta(i)) << " |";
    for (double p : matrix.row(i)) os << ' ' << fixed4(p) << " |";
    os << '\n';
  }
  return os.str();
}

std::string render_document(const Json& doc, ReportFormat format) {
  if (!doc.is_object() || !doc.contains("format") || !doc.at("format").is_string()) {
    throw FormatError("document has no 'format' field");
  }
  const auto kind = doc.at("format").get<std::string>();
  if (kind == kMatrixFormat) return render(matrix_from_json(doc), format);
  if (kind == kRankReportFormat) return render(rank_report_from_json(doc), format);
  if (kind == kSimulationReportFormat) return render(simulation_report_from_json(doc), format);
  if (kind == kComparisonFormat) return render(comparison_from_json(doc), format);
  throw FormatError("unknown document format '" + kind + "'");
}

}  // namespace io

}  // namespace bayesrank
