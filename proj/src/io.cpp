#include "bayesrank/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bayesrank::io {

namespace {

template <class T>
T field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, where);
}

void reject_unknown_keys(const Json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw FormatError(where + ": unknown key '" + key + "'");
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::string metadata_value(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

Json matrix_to_json(const CapabilityMatrix& matrix) {
  Json doc;
  doc["format"] = kMatrixFormat;
  doc["version"] = kFormatVersion;
  doc["epsilon"] = matrix.epsilon();
  doc["trials_per_cell"] = matrix.trials_per_cell();
  Json anchors = Json::array();
  for (const auto& a : matrix.anchors()) anchors.push_back({{"id", a.id}, {"theta", a.theta}});
  doc["anchors"] = std::move(anchors);
  doc["query_ids"] = matrix.query_ids();
  Json grid = Json::array();
  for (std::size_t i = 0; i < matrix.anchor_count(); ++i) {
    const auto row = matrix.row(i);
    grid.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["probs"] = std::move(grid);
  return doc;
}

CapabilityMatrix matrix_from_json(const Json& doc) {
  const std::string where = "capability matrix";
  if (field<std::string>(doc, "format", where) != kMatrixFormat) {
    throw FormatError(where + ": not a capability matrix document");
  }
  if (field<int>(doc, "version", where) != kFormatVersion) {
    throw FormatError(where + ": unsupported version");
  }
  const auto epsilon = field<double>(doc, "epsilon", where);
  const auto trials = field<std::uint32_t>(doc, "trials_per_cell", where);
  const auto query_ids = field<std::vector<std::string>>(doc, "query_ids", where);
  if (!doc.contains("anchors")) throw FormatError(where + ": missing field 'anchors'");
  const Json& anchors = doc.at("anchors");
  if (!anchors.is_array()) throw FormatError(where + ": 'anchors' must be an array");
  const auto grid = field<std::vector<std::vector<double>>>(doc, "probs", where);
  if (grid.size() != anchors.size()) {
    throw FormatError(where + ": " + std::to_string(grid.size()) + " grid rows for " +
                      std::to_string(anchors.size()) + " anchors");
  }

  std::vector<std::string> ids;
  std::vector<double> stored_theta;
  std::vector<double> probs;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    ids.push_back(field<std::string>(anchors[i], "id", where + " anchor"));
    stored_theta.push_back(field<double>(anchors[i], "theta", where + " anchor"));
    if (grid[i].size() != query_ids.size()) {
      throw FormatError(where + ": row " + std::to_string(i) + " has " +
                        std::to_string(grid[i].size()) + " cells for " +
                        std::to_string(query_ids.size()) + " queries");
    }
    probs.insert(probs.end(), grid[i].begin(), grid[i].end());
  }
  CapabilityMatrix matrix(std::move(ids), query_ids, std::move(probs), trials, epsilon);
  for (std::size_t i = 0; i < matrix.anchor_count(); ++i) {
    if (std::abs(matrix.theta(i) - stored_theta[i]) > kThetaTolerance) {
      throw ValidationError(where + ": anchor '" + matrix.anchors()[i].id +
                            "' theta does not match its row mean");
    }
  }
  return matrix;
}

void write_matrix(const CapabilityMatrix& matrix, const std::filesystem::path& path) {
  write_text(matrix_to_json(matrix).dump(2) + "\n", path);
}

CapabilityMatrix read_matrix(const std::filesystem::path& path) {
  return matrix_from_json(read_json(path));
}

TrialLog parse_trial_log(std::istream& in, const std::string& source) {
  TrialLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const Json doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw FormatError(where + ": not a JSON object");
    }
    if (doc.contains("meta")) {
      const Json& meta = doc.at("meta");
      if (!meta.is_object()) throw FormatError(where + ": 'meta' must be an object");
      for (const auto& [k, v] : meta.items()) log.metadata[k] = metadata_value(v);
      continue;
    }
    if (doc.contains("error")) {
      const Json& e = doc.at("error");
      RunError err;
      err.model_id = field<std::string>(e, "model", where);
      err.query_id = field<std::string>(e, "query", where);
      err.trial_index = field<std::uint32_t>(e, "trial", where);
      try {
        err.kind = run_error_kind_from_string(field<std::string>(e, "kind", where));
      } catch (const FormatError& fe) {
        throw FormatError(where + ": " + fe.what());
      }
      err.message = field_or<std::string>(e, "message", "", where);
      log.errors.push_back(std::move(err));
      continue;
    }
    TrialRecord r;
    r.model_id = field<std::string>(doc, "model", where);
    r.query_id = field<std::string>(doc, "query", where);
    if (!doc.contains("trial") || !doc.at("trial").is_number_unsigned()) {
      throw FormatError(where + ": field 'trial' must be a nonnegative integer");
    }
    r.trial_index = doc.at("trial").get<std::uint32_t>();
    if (!doc.contains("correct")) throw FormatError(where + ": missing field 'correct'");
    const Json& c = doc.at("correct");
    if (c.is_boolean()) {
      r.correct = c.get<bool>();
    } else if (c.is_number_integer() && (c.get<int>() == 0 || c.get<int>() == 1)) {
      r.correct = c.get<int>() == 1;
    } else {
      throw FormatError(where + ": field 'correct' must be a boolean");
    }
    if (r.model_id.empty() || r.query_id.empty()) {
      throw FormatError(where + ": empty model or query id");
    }
    log.records.push_back(std::move(r));
  }
  log.validate();
  return log;
}

void write_trial_log(const TrialLog& log, std::ostream& out) {
  if (!log.metadata.empty()) {
    Json meta = Json::object();
    for (const auto& [k, v] : log.metadata) meta[k] = v;
    out << Json{{"meta", meta}}.dump() << '\n';
  }
  for (const auto& r : log.records) {
    Json line;
    line["model"] = r.model_id;
    line["query"] = r.query_id;
    line["trial"] = r.trial_index;
    line["correct"] = r.correct;
    out << line.dump() << '\n';
  }
  for (const auto& e : log.errors) {
    Json err;
    err["model"] = e.model_id;
    err["query"] = e.query_id;
    err["trial"] = e.trial_index;
    err["kind"] = to_string(e.kind);
    err["message"] = e.message;
    out << Json{{"error", err}}.dump() << '\n';
  }
}

TrialLog read_trial_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_trial_log(in, path.string());
}

void write_trial_log(const TrialLog& log, const std::filesystem::path& path, bool append) {
  std::ofstream out(path, append ? std::ios::binary | std::ios::app : std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_trial_log(log, out);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace {

DifficultyProfile profile_from_string(const std::string& s) {
  if (s == "uniform") return DifficultyProfile::uniform;
  if (s == "evenly_spaced_anchors") return DifficultyProfile::evenly_spaced_anchors;
  if (s == "from_matrix") return DifficultyProfile::from_matrix;
  throw FormatError("simulation config: unknown difficulty_profile '" + s + "'");
}

const char* to_string(DifficultyProfile p) {
  switch (p) {
    case DifficultyProfile::uniform: return "uniform";
    case DifficultyProfile::evenly_spaced_anchors: return "evenly_spaced_anchors";
    case DifficultyProfile::from_matrix: return "from_matrix";
  }
  return "";
}

}  // namespace

SimulationFile simulation_config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  const std::string where = "simulation config";
  if (!doc.is_object()) throw FormatError(where + ": expected a JSON object");
  reject_unknown_keys(doc,
                      {"n_anchors", "n_queries", "trials_per_cell", "true_theta", "true_interval",
                       "difficulty_profile", "replications", "m_schedule", "span",
                       "discriminative_fraction", "difficulty_spread", "epsilon", "link",
                       "subset", "matrix"},
                      where);
  SimulationFile out;
  SimulationConfig& c = out.config;
  c.n_anchors = field_or<std::uint32_t>(doc, "n_anchors", c.n_anchors, where);
  c.n_queries = field_or<std::uint32_t>(doc, "n_queries", c.n_queries, where);
  c.trials_per_cell = field_or<std::uint32_t>(doc, "trials_per_cell", c.trials_per_cell, where);
  c.true_theta = field_or<double>(doc, "true_theta", c.true_theta, where);
  c.replications = field_or<std::uint32_t>(doc, "replications", c.replications, where);
  c.m_schedule = field_or<std::vector<std::uint32_t>>(doc, "m_schedule", c.m_schedule, where);
  if (doc.contains("span")) {
    const auto span = field<std::vector<double>>(doc, "span", where);
    if (span.size() != 2) throw FormatError(where + ": 'span' must be [low, high]");
    c.span_low = span[0];
    c.span_high = span[1];
  }
  c.discriminative_fraction =
      field_or<double>(doc, "discriminative_fraction", c.discriminative_fraction, where);
  c.difficulty_spread = field_or<double>(doc, "difficulty_spread", c.difficulty_spread, where);
  c.epsilon = field_or<double>(doc, "epsilon", c.epsilon, where);
  c.difficulty_profile = profile_from_string(
      field_or<std::string>(doc, "difficulty_profile", "evenly_spaced_anchors", where));

  const auto link = field_or<std::string>(doc, "link", "linear", where);
  if (link == "linear") {
    c.link = TestModelLink::linear;
  } else if (link == "logistic") {
    c.link = TestModelLink::logistic;
  } else {
    throw FormatError(where + ": unknown link '" + link + "'");
  }
  const auto subset = field_or<std::string>(doc, "subset", "first", where);
  if (subset == "first") {
    c.subset = QuerySubset::first;
  } else if (subset == "random") {
    c.subset = QuerySubset::random;
  } else {
    throw FormatError(where + ": unknown subset '" + subset + "'");
  }

  if (doc.contains("matrix")) {
    std::filesystem::path p = field<std::string>(doc, "matrix", where);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.matrix = read_matrix(p);
  }
  if (c.difficulty_profile == DifficultyProfile::from_matrix) {
    if (!c.matrix) throw FormatError(where + ": from_matrix profile needs a 'matrix' path");
    c.n_anchors = static_cast<std::uint32_t>(c.matrix->anchor_count());
    c.n_queries = static_cast<std::uint32_t>(c.matrix->query_count());
  }
  if (doc.contains("true_interval")) {
    if (doc.contains("true_theta")) {
      throw FormatError(where + ": give either 'true_theta' or 'true_interval', not both");
    }
    out.true_interval = field<std::size_t>(doc, "true_interval", where);
  }
  return out;
}

Json simulation_config_to_json(const SimulationConfig& c) {
  Json doc;
  doc["n_anchors"] = c.n_anchors;
  doc["n_queries"] = c.n_queries;
  doc["trials_per_cell"] = c.trials_per_cell;
  doc["true_theta"] = c.true_theta;
  doc["difficulty_profile"] = to_string(c.difficulty_profile);
  doc["seed"] = c.seed;
  doc["replications"] = c.replications;
  doc["m_schedule"] = c.m_schedule;
  doc["span"] = {c.span_low, c.span_high};
  doc["discriminative_fraction"] = c.discriminative_fraction;
  doc["difficulty_spread"] = c.difficulty_spread;
  doc["epsilon"] = c.epsilon;
  doc["link"] = c.link == TestModelLink::linear ? "linear" : "logistic";
  doc["subset"] = c.subset == QuerySubset::first ? "first" : "random";
  return doc;
}

RunnerConfig runner_config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  const std::string where = "runner config";
  if (!doc.is_object()) throw FormatError(where + ": expected a JSON object");
  reject_unknown_keys(doc,
                      {"model", "trials", "queries", "queries_file", "action", "match",
                       "retry_limit", "timeout_ms", "rate_limit", "max_in_flight",
                       "generation_params"},
                      where);
  RunnerConfig c;
  c.model_id = field<std::string>(doc, "model", where);
  c.trials = field_or<std::uint32_t>(doc, "trials", 1, where);
  c.retry_limit = field_or<std::uint32_t>(doc, "retry_limit", c.retry_limit, where);
  c.timeout = std::chrono::milliseconds(
      field_or<std::int64_t>(doc, "timeout_ms", c.timeout.count(), where));
  c.rate_limit = field_or<double>(doc, "rate_limit", 0.0, where);
  c.max_in_flight = field_or<std::uint32_t>(doc, "max_in_flight", 1, where);

  auto read_query = [&](const Json& q, const std::string& w) {
    return RunnerQuery{field<std::string>(q, "id", w), field<std::string>(q, "prompt", w),
                       field<std::string>(q, "expected", w)};
  };
  if (doc.contains("queries")) {
    const Json& qs = doc.at("queries");
    if (!qs.is_array()) throw FormatError(where + ": 'queries' must be an array");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      c.queries.push_back(read_query(qs[i], where + " query " + std::to_string(i)));
    }
  }
  if (doc.contains("queries_file")) {
    std::filesystem::path p = field<std::string>(doc, "queries_file", where);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    auto in = open_in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string w = p.string() + ":" + std::to_string(n);
      const Json q = Json::parse(line, nullptr, false);
      if (q.is_discarded()) throw FormatError(w + ": not JSON");
      c.queries.push_back(read_query(q, w));
    }
  }

  const Json action = doc.contains("action") ? doc.at("action") : Json::object();
  const auto kind = field<std::string>(action, "kind", where + " action");
  if (kind == "subprocess") {
    c.action = ActionKind::subprocess;
    c.command_template = field<std::string>(action, "command", where + " action");
    c.prompt_via_stdin = field_or<bool>(action, "stdin", false, where + " action");
  } else if (kind == "http") {
    c.action = ActionKind::http;
    c.http.url = field<std::string>(action, "url", where + " action");
    c.http.body_template = field<std::string>(action, "body_template", where + " action");
    c.http.response_path = field<std::string>(action, "response_path", where + " action");
    c.http.bearer_env = field_or<std::string>(action, "bearer_env", "", where + " action");
    c.http.headers = field_or<std::map<std::string, std::string>>(action, "headers", {},
                                                                 where + " action");
  } else {
    throw FormatError(where + ": unknown action kind '" + kind + "'");
  }

  if (doc.contains("match")) {
    const Json& m = doc.at("match");
    const auto rule = field<std::string>(m, "rule", where + " match");
    if (rule == "exact") {
      c.match_rule = MatchRule::exact_match_normalized;
    } else if (rule == "regex") {
      c.match_rule = MatchRule::regex_capture_equals;
      c.match_pattern = field<std::string>(m, "pattern", where + " match");
    } else {
      throw FormatError(where + ": unknown match rule '" + rule + "'");
    }
  }
  if (doc.contains("generation_params")) {
    const Json& g = doc.at("generation_params");
    if (!g.is_object()) throw FormatError(where + ": 'generation_params' must be an object");
    for (const auto& [k, v] : g.items()) c.generation_params[k] = metadata_value(v);
  }
  return c;
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw FormatError("'" + path.string() + "' is not valid JSON");
  return doc;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace bayesrank::io
