#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bayesrank/core.hpp"

namespace bayesrank {

enum class ActionKind { subprocess, http };
enum class MatchRule { exact_match_normalized, regex_capture_equals };

struct RunnerQuery {
  std::string id;
  std::string prompt;
  std::string expected;
};

/// POST `body_template` (with "{prompt}" replaced by the JSON-escaped prompt)
/// to `url`; the answer is the string at JSON pointer `response_path` in the
/// response body.
struct HttpActionConfig {
  std::string url;
  std::string body_template;
  std::string response_path;
  /// Name of the environment variable holding the bearer token; empty for none.
  std::string bearer_env;
  std::map<std::string, std::string> headers;
};

struct RunnerConfig {
  std::string model_id;
  std::vector<RunnerQuery> queries;
  std::uint32_t trials = 1;

  ActionKind action = ActionKind::subprocess;
  /// Run through /bin/sh -c. "{prompt}", "{query_id}" and "{trial}" are
  /// substituted shell-quoted.
  std::string command_template;
  /// Send the prompt on standard input instead of substituting it.
  bool prompt_via_stdin = false;
  HttpActionConfig http;

  MatchRule match_rule = MatchRule::exact_match_normalized;
  /// For regex_capture_equals: capture group 1 (or the whole match) is compared
  /// to the expected answer after normalization.
  std::string match_pattern;

  std::uint32_t retry_limit = 2;
  std::chrono::milliseconds timeout{60000};
  /// Requests per second across all workers; 0 disables limiting.
  double rate_limit = 0.0;
  std::uint32_t max_in_flight = 1;
  /// Copied verbatim into the log metadata.
  std::map<std::string, std::string> generation_params;

  void validate() const;
};

struct ActionRequest {
  std::string query_id;
  std::string prompt;
  std::uint32_t trial = 0;
};

struct ActionResult {
  enum class Status {
    ok,
    transport_error,  ///< retryable (connection failure, non-zero exit, 429, 5xx)
    timeout,          ///< retryable
    rejected,         ///< non-retryable transport failure (other 4xx)
    malformed,        ///< response arrived but carries no decodable answer
  };
  Status status = Status::ok;
  /// Raw answer bytes when ok.
  std::string output;
  std::string message;
};

/// One evaluation call. Implementations must be safe to invoke concurrently.
class Action {
 public:
  virtual ~Action() = default;
  virtual ActionResult invoke(const ActionRequest& request) = 0;
};

class SubprocessAction final : public Action {
 public:
  SubprocessAction(std::string command_template, bool prompt_via_stdin,
                   std::chrono::milliseconds timeout);
  ActionResult invoke(const ActionRequest& request) override;

 private:
  std::string template_;
  bool via_stdin_;
  std::chrono::milliseconds timeout_;
};

class HttpAction final : public Action {
 public:
  HttpAction(HttpActionConfig config, std::chrono::milliseconds timeout);
  ActionResult invoke(const ActionRequest& request) override;

 private:
  HttpActionConfig config_;
  std::chrono::milliseconds timeout_;
  std::string bearer_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Spaces acquisitions at least 1/rate apart, shared across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  Clock::duration interval_{};
  Clock::time_point next_{};
  bool enabled_;
};

/// Trim, lowercase ASCII, collapse internal whitespace runs to one space.
std::string normalize_answer(std::string_view text);

bool is_valid_utf8(std::string_view text) noexcept;

/// Single-quotes `text` for /bin/sh.
std::string shell_quote(std::string_view text);

/// Applies the config's match rule to a decoded answer.
bool answer_matches(const RunnerConfig& config, std::string_view output,
                    std::string_view expected);

/// Runs trials x queries evaluations with the action described by `config`.
TrialLog collect(const RunnerConfig& config);

/// Same, with a caller-supplied action (used for mocks).
TrialLog collect(const RunnerConfig& config, Action& action);

}  // namespace bayesrank
