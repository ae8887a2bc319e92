#include "bayesrank/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <optional>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

extern char** environ;

namespace bayesrank {

namespace {

using Clock = std::chrono::steady_clock;

std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (const auto& [key, value] : values) {
        const std::string token = "{" + key + "}";
        if (tmpl.compare(pos, token.size(), token) == 0) {
          out += value;
          pos += token.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[pos++];
  }
  return out;
}

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

struct Pipe {
  Fd read;
  Fd write;
  Pipe() {
    int p[2];
    if (::pipe2(p, O_CLOEXEC) != 0) throw IoError("pipe2 failed");
    read.fd = p[0];
    write.fd = p[1];
  }
};

class SpawnActions {
 public:
  SpawnActions() { posix_spawn_file_actions_init(&fa_); }
  ~SpawnActions() { posix_spawn_file_actions_destroy(&fa_); }
  SpawnActions(const SpawnActions&) = delete;
  SpawnActions& operator=(const SpawnActions&) = delete;
  posix_spawn_file_actions_t* get() { return &fa_; }

 private:
  posix_spawn_file_actions_t fa_;
};

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

}  // namespace

void RunnerConfig::validate() const {
  if (model_id.empty()) throw ValidationError("runner: model_id is empty");
  if (queries.empty()) throw ValidationError("runner: no queries");
  if (trials < 1) throw ValidationError("runner: trials must be >= 1");
  if (max_in_flight < 1) throw ValidationError("runner: max_in_flight must be >= 1");
  if (!(rate_limit >= 0.0)) throw ValidationError("runner: rate_limit must be >= 0");
  if (timeout.count() <= 0) throw ValidationError("runner: timeout must be positive");
  std::vector<std::string> ids;
  for (const auto& q : queries) ids.push_back(q.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ValidationError("runner: duplicate query ids");
  }
  if (action == ActionKind::subprocess) {
    if (command_template.empty()) throw ValidationError("runner: command template is empty");
    if (!prompt_via_stdin && command_template.find("{prompt}") == std::string::npos) {
      throw ValidationError(
          "runner: command template needs a {prompt} placeholder unless the prompt goes to stdin");
    }
  } else {
    if (http.url.empty()) throw ValidationError("runner: http url is empty");
    if (http.body_template.find("{prompt}") == std::string::npos) {
      throw ValidationError("runner: http body template needs a {prompt} placeholder");
    }
    if (http.response_path.empty() || http.response_path.front() != '/') {
      throw ValidationError("runner: response_path must be a JSON pointer such as /answer");
    }
  }
  if (match_rule == MatchRule::regex_capture_equals) {
    try {
      std::regex re(match_pattern);
    } catch (const std::regex_error& e) {
      throw ValidationError(std::string("runner: bad match pattern: ") + e.what());
    }
  }
}

SubprocessAction::SubprocessAction(std::string command_template, bool prompt_via_stdin,
                                   std::chrono::milliseconds timeout)
    : template_(std::move(command_template)), via_stdin_(prompt_via_stdin), timeout_(timeout) {
  // A child that exits before reading its stdin must not kill us on write.
  std::signal(SIGPIPE, SIG_IGN);
}

ActionResult SubprocessAction::invoke(const ActionRequest& request) {
  const std::string command =
      substitute(template_, {{"prompt", shell_quote(request.prompt)},
                             {"query_id", shell_quote(request.query_id)},
                             {"trial", std::to_string(request.trial)}});
  Pipe in;
  Pipe out;
  SpawnActions fa;
  if (via_stdin_) {
    posix_spawn_file_actions_adddup2(fa.get(), in.read.fd, STDIN_FILENO);
  } else {
    posix_spawn_file_actions_addopen(fa.get(), STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  }
  posix_spawn_file_actions_adddup2(fa.get(), out.write.fd, STDOUT_FILENO);

  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  if (int rc = posix_spawn(&pid, "/bin/sh", fa.get(), nullptr, argv, environ); rc != 0) {
    return {ActionResult::Status::transport_error, {}, "posix_spawn failed: " + std::to_string(rc)};
  }
  in.read.reset();
  out.write.reset();
  if (!via_stdin_) in.write.reset();
  if (in.write.fd >= 0) ::fcntl(in.write.fd, F_SETFL, O_NONBLOCK);

  const auto deadline = Clock::now() + timeout_;
  std::string output;
  std::size_t written = 0;
  const std::string& payload = request.prompt;
  if (via_stdin_ && payload.empty()) in.write.reset();
  bool timed_out = false;
  char buf[4096];
  while (out.read.fd >= 0) {
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {out.read.fd, POLLIN, 0};
    if (in.write.fd >= 0) fds[nfds++] = {in.write.fd, POLLOUT, 0};
    const int ready = ::poll(fds, nfds, remaining_ms(deadline));
    if (ready == 0) {
      timed_out = true;
      break;
    }
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(in.write.fd, payload.data() + written, payload.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) in.write.reset();
      if (written == payload.size()) in.write.reset();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(out.read.fd, buf, sizeof buf);
      if (n > 0) {
        output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        out.read.reset();
      }
    }
  }
  in.write.reset();

  int status = 0;
  while (!timed_out) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0) return {ActionResult::Status::transport_error, {}, "waitpid failed"};
    if (Clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    return {ActionResult::Status::timeout, {},
            "command exceeded " + std::to_string(timeout_.count()) + " ms"};
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const std::string why = WIFEXITED(status)
                                ? "exited with status " + std::to_string(WEXITSTATUS(status))
                                : "terminated by signal " + std::to_string(WTERMSIG(status));
    return {ActionResult::Status::transport_error, {}, "command " + why};
  }
  return {ActionResult::Status::ok, std::move(output), {}};
}

HttpAction::HttpAction(HttpActionConfig config, std::chrono::milliseconds timeout)
    : config_(std::move(config)), timeout_(timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, url_re)) {
    throw ValidationError("runner: cannot parse url '" + config_.url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.url.rfind("https://", 0) == 0) {
    throw ValidationError("runner: https endpoints need a build with OpenSSL support");
  }
#endif
  if (!config_.bearer_env.empty()) {
    const char* token = std::getenv(config_.bearer_env.c_str());
    if (!token) {
      throw ValidationError("runner: environment variable '" + config_.bearer_env +
                            "' (bearer token) is not set");
    }
    bearer_ = token;
  }
}

ActionResult HttpAction::invoke(const ActionRequest& request) {
  std::string escaped = nlohmann::json(request.prompt).dump();
  escaped = escaped.substr(1, escaped.size() - 2);
  const std::string body = substitute(config_.body_template, {{"prompt", escaped}});

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : config_.headers) headers.emplace(k, v);
  if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

  const auto started = Clock::now();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const bool slow = Clock::now() - started >= timeout_;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && slow)) {
      return {ActionResult::Status::timeout, {}, "http: " + httplib::to_string(err)};
    }
    return {ActionResult::Status::transport_error, {}, "http: " + httplib::to_string(err)};
  }
  if (res->status == 429 || res->status >= 500) {
    return {ActionResult::Status::transport_error, {}, "http status " + std::to_string(res->status)};
  }
  if (res->status < 200 || res->status >= 300) {
    return {ActionResult::Status::rejected, {}, "http status " + std::to_string(res->status)};
  }
  if (!is_valid_utf8(res->body)) {
    return {ActionResult::Status::malformed, {}, "response body is not valid UTF-8"};
  }
  const auto doc = nlohmann::json::parse(res->body, nullptr, false);
  if (doc.is_discarded()) return {ActionResult::Status::malformed, {}, "response is not JSON"};
  try {
    const auto& node = doc.at(nlohmann::json::json_pointer(config_.response_path));
    if (!node.is_string()) {
      return {ActionResult::Status::malformed, {},
              "value at " + config_.response_path + " is not a string"};
    }
    return {ActionResult::Status::ok, node.get<std::string>(), {}};
  } catch (const nlohmann::json::exception&) {
    return {ActionResult::Status::malformed, {},
            "response has no value at " + config_.response_path};
  }
}

RateLimiter::RateLimiter(double per_second) : enabled_(per_second > 0.0) {
  if (enabled_) {
    interval_ = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / per_second));
  }
}

void RateLimiter::acquire() {
  if (!enabled_) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(Clock::now(), next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

bool is_valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, out of range.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::string shell_quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

bool answer_matches(const RunnerConfig& config, std::string_view output,
                    std::string_view expected) {
  const std::string want = normalize_answer(expected);
  if (config.match_rule == MatchRule::exact_match_normalized) {
    return normalize_answer(output) == want;
  }
  const std::regex re(config.match_pattern);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(output.begin(), output.end(), m, re)) return false;
  const auto& group = m.size() > 1 && m[1].matched ? m[1] : m[0];
  return normalize_answer(std::string(group.first, group.second)) == want;
}

TrialLog collect(const RunnerConfig& config) {
  config.validate();
  if (config.action == ActionKind::subprocess) {
    SubprocessAction action(config.command_template, config.prompt_via_stdin, config.timeout);
    return collect(config, action);
  }
  HttpAction action(config.http, config.timeout);
  return collect(config, action);
}

TrialLog collect(const RunnerConfig& config, Action& action) {
  config.validate();

  struct Slot {
    std::optional<bool> correct;
    std::optional<RunError> error;
  };
  const std::size_t n_tasks = config.queries.size() * config.trials;
  std::vector<Slot> slots(n_tasks);
  RateLimiter limiter(config.rate_limit);
  std::atomic<std::size_t> next{0};

  auto fail = [&](Slot& slot, const RunnerQuery& q, std::uint32_t t, RunErrorKind kind,
                  std::string message) {
    slot.error = RunError{config.model_id, q.id, t, kind, std::move(message)};
  };

  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const RunnerQuery& q = config.queries[task / config.trials];
      const auto t = static_cast<std::uint32_t>(task % config.trials);
      Slot& slot = slots[task];
      ActionResult last;
      const std::uint32_t attempts = config.retry_limit + 1;
      bool done = false;
      for (std::uint32_t a = 0; a < attempts && !done; ++a) {
        limiter.acquire();
        ActionResult res;
        try {
          res = action.invoke({q.id, q.prompt, t});
        } catch (const std::exception& e) {
          res = {ActionResult::Status::transport_error, {}, e.what()};
        }
        switch (res.status) {
          case ActionResult::Status::ok:
            if (!is_valid_utf8(res.output)) {
              fail(slot, q, t, RunErrorKind::malformed, "output is not valid UTF-8");
            } else {
              try {
                slot.correct = answer_matches(config, res.output, q.expected);
              } catch (const std::regex_error& e) {
                fail(slot, q, t, RunErrorKind::malformed, std::string("match: ") + e.what());
              }
            }
            done = true;
            break;
          case ActionResult::Status::malformed:
            fail(slot, q, t, RunErrorKind::malformed, res.message);
            done = true;
            break;
          case ActionResult::Status::rejected:
            fail(slot, q, t, RunErrorKind::transport, res.message);
            done = true;
            break;
          case ActionResult::Status::transport_error:
          case ActionResult::Status::timeout:
            last = std::move(res);
            break;
        }
      }
      if (!done) {
        const char* cause =
            last.status == ActionResult::Status::timeout ? "timeout" : "transport";
        fail(slot, q, t, RunErrorKind::exhausted,
             "gave up after " + std::to_string(attempts) + " attempt(s); last " + cause + ": " +
                 last.message);
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(config.max_in_flight, n_tasks);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  TrialLog log;
  log.metadata = config.generation_params;
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const RunnerQuery& q = config.queries[task / config.trials];
    const auto t = static_cast<std::uint32_t>(task % config.trials);
    if (slots[task].correct) {
      log.records.push_back({config.model_id, q.id, t, *slots[task].correct});
    } else {
      log.errors.push_back(std::move(*slots[task].error));
    }
  }
  return log;
}

}  // namespace bayesrank
