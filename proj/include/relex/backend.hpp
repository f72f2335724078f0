#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "relex/chat.hpp"
#include "relex/digest.hpp"

namespace relex {

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string request_tag;  // caller-supplied label, excluded from the cache key

  void validate() const {
    if (messages.empty()) throw std::invalid_argument("chat request has no messages");
    const std::string& role = messages.front().role;
    if (role != "system" && role != "user")
      throw std::invalid_argument("first message role must be system or user, got '" + role + "'");
    if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
  }

  // All message content in order; scripted rules match against this.
  std::string text() const {
    std::string out;
    for (size_t i = 0; i < messages.size(); ++i) {
      if (i) out += '\n';
      out += messages[i].content;
    }
    return out;
  }
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason = "stop";
  TokenUsage usage;
  double latency_ms = 0.0;
  std::string backend_id;
};

// Stable content hash over everything that determines the completion.
inline std::string cache_key(const ChatRequest& request) {
  Fnv1a h;
  h.update_field(request.model_id);
  h.update_field(std::to_string(request.temperature));
  h.update_field(std::to_string(request.max_tokens));
  for (const ChatMessage& m : request.messages) {
    h.update_field(m.role);
    h.update_field(m.content);
  }
  return h.hex();
}

class BackendError : public std::runtime_error {
 public:
  enum class Kind {
    RetriesExhausted,
    AuthFailure,
    ScriptMiss,
    ReplayMiss,
    BadResponse,
    Config,
  };

  BackendError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Append-only JSONL log of every request/response pair. Appends are
// serialized; the file doubles as the source for ReplayBackend.
class AuditLog {
 public:
  explicit AuditLog(std::string path) : path_(std::move(path)) {}

  void append(const ChatRequest& request, const ChatResponse& response) {
    nlohmann::ordered_json entry;
    entry["digest"] = cache_key(request);
    entry["request"] = {{"model", request.model_id},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens},
                        {"tag", request.request_tag}};
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    for (const ChatMessage& m : request.messages)
      messages.push_back({{"role", m.role}, {"content", m.content}});
    entry["request"]["messages"] = std::move(messages);
    entry["response"] = {{"text", response.text},
                         {"finish_reason", response.finish_reason},
                         {"prompt_tokens", response.usage.prompt_tokens},
                         {"completion_tokens", response.usage.completion_tokens},
                         {"backend_id", response.backend_id}};
    entry["unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append to audit log: " + path_);
    out << entry.dump() << '\n';
  }

  // digest -> response text, first occurrence wins.
  static std::map<std::string, std::string> load_responses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open audit log: " + path);
    std::map<std::string, std::string> responses;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json entry = nlohmann::json::parse(line);
      responses.emplace(entry.at("digest").get<std::string>(),
                        entry.at("response").at("text").get<std::string>());
    }
    return responses;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mutex_;
};

// Deterministic test backend. Rules are tried in declaration order: exact
// matches first, then substring matches, then an ordered queue, then the
// optional default. Strict by default: an unmatched request is an error.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;

  void add_exact(std::string prompt, std::string response) {
    exact_.push_back({std::move(prompt), std::move(response)});
  }
  void add_substring(std::string needle, std::string response) {
    substring_.push_back({std::move(needle), std::move(response)});
  }
  void push_queue(std::string response) { queue_.push_back(std::move(response)); }
  void set_default(std::string response) { default_ = std::move(response); }

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    std::string target = request.text();
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    std::optional<std::string> text;
    for (const auto& [prompt, response] : exact_)
      if (prompt == target) {
        text = response;
        break;
      }
    if (!text)
      for (const auto& [needle, response] : substring_)
        if (target.find(needle) != std::string::npos) {
          text = response;
          break;
        }
    if (!text && !queue_.empty()) {
      text = queue_.front();
      queue_.pop_front();
    }
    if (!text) text = default_;
    if (!text)
      throw BackendError(BackendError::Kind::ScriptMiss,
                         "no scripted rule matches request '" + request.request_tag + "'");
    ChatResponse response;
    response.text = *text;
    response.backend_id = id();
    return response;
  }

  std::string id() const override { return "scripted"; }

  int calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }

  static std::unique_ptr<ScriptedBackend> from_json(const nlohmann::json& j) {
    auto backend = std::make_unique<ScriptedBackend>();
    if (j.contains("default")) backend->set_default(j.at("default").get<std::string>());
    for (const nlohmann::json& rule : j.value("rules", nlohmann::json::array())) {
      std::string type = rule.at("type").get<std::string>();
      if (type == "exact")
        backend->add_exact(rule.at("pattern").get<std::string>(),
                           rule.at("response").get<std::string>());
      else if (type == "substring")
        backend->add_substring(rule.at("pattern").get<std::string>(),
                               rule.at("response").get<std::string>());
      else if (type == "queue")
        for (const nlohmann::json& r : rule.at("responses"))
          backend->push_queue(r.get<std::string>());
      else
        throw BackendError(BackendError::Kind::Config, "unknown scripted rule type: " + type);
    }
    return backend;
  }

  static std::unique_ptr<ScriptedBackend> load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError(BackendError::Kind::Config, "cannot open script: " + path);
    return from_json(nlohmann::json::parse(in));
  }

 private:
  std::vector<std::pair<std::string, std::string>> exact_;
  std::vector<std::pair<std::string, std::string>> substring_;
  std::deque<std::string> queue_;
  std::optional<std::string> default_;
  mutable std::mutex mutex_;
  int calls_ = 0;
};

// Replays responses recorded in an audit log, keyed by request digest.
// Never touches the network.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::map<std::string, std::string> responses)
      : responses_(std::move(responses)) {}

  static ReplayBackend from_audit_log(const std::string& path) {
    return ReplayBackend(AuditLog::load_responses(path));
  }

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    auto it = responses_.find(cache_key(request));
    if (it == responses_.end())
      throw BackendError(BackendError::Kind::ReplayMiss,
                         "no recorded response for digest " + cache_key(request));
    ChatResponse response;
    response.text = it->second;
    response.backend_id = id();
    return response;
  }

  std::string id() const override { return "replay"; }

 private:
  std::map<std::string, std::string> responses_;
};

struct HttpBackendConfig {
  std::string base_url;                           // e.g. http://127.0.0.1:8080
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "RELEX_API_KEY";      // bearer token read from this variable
  int max_attempts = 5;
  int base_delay_ms = 1000;
  double backoff_factor = 2.0;
  int timeout_sec = 120;
  double requests_per_minute = 0.0;               // 0 = unlimited
};

// Chat-completion client for the de-facto /v1/chat/completions wire shape.
// Transient failures (connect errors, 429, 5xx) are retried with exponential
// backoff and jitter; auth failures and malformed bodies are not.
class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendConfig config, Sleeper sleeper = nullptr,
                       std::uint64_t jitter_seed = std::random_device{}())
      : config_(std::move(config)),
        sleeper_(sleeper ? std::move(sleeper)
                         : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
        jitter_rng_(jitter_seed) {
    if (config_.base_url.empty())
      throw BackendError(BackendError::Kind::Config, "http backend needs a base_url");
  }

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    wait_for_rate_limit();

    nlohmann::ordered_json body;
    body["model"] = request.model_id;
    body["messages"] = nlohmann::ordered_json::array();
    for (const ChatMessage& m : request.messages)
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_failure = "no attempt made";
    auto started = std::chrono::steady_clock::now();
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_sec, 0);
      client.set_read_timeout(config_.timeout_sec, 0);

      httplib::Result result = client.Post(config_.path, headers, payload, "application/json");
      if (result) {
        int status = result->status;
        if (status == 200) {
          ChatResponse response = parse_completion(result->body);
          response.backend_id = id();
          response.latency_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();
          return response;
        }
        if (status == 401 || status == 403)
          throw BackendError(BackendError::Kind::AuthFailure,
                             "authentication failed (HTTP " + std::to_string(status) + ")");
        if (status != 429 && status < 500)
          throw BackendError(BackendError::Kind::BadResponse,
                             "HTTP " + std::to_string(status) + ": " + result->body);
        last_failure = "HTTP " + std::to_string(status);
      } else {
        last_failure = "transport error: " + httplib::to_string(result.error());
      }
      if (attempt < config_.max_attempts) sleeper_(backoff_delay(attempt));
    }
    throw BackendError(BackendError::Kind::RetriesExhausted,
                       "gave up after " + std::to_string(config_.max_attempts) +
                           " attempts; last failure: " + last_failure);
  }

  std::string id() const override { return "http:" + config_.base_url; }

 private:
  static ChatResponse parse_completion(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
      throw BackendError(BackendError::Kind::BadResponse,
                         "completion body has no choices: " + body.substr(0, 200));
    const nlohmann::json& choice = j["choices"][0];
    ChatResponse response;
    response.text = choice.at("message").at("content").get<std::string>();
    response.finish_reason = choice.value("finish_reason", "stop");
    if (j.contains("usage")) {
      response.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      response.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return response;
  }

  std::chrono::milliseconds backoff_delay(int attempt) {
    double delay = config_.base_delay_ms;
    for (int i = 1; i < attempt; ++i) delay *= config_.backoff_factor;
    std::lock_guard<std::mutex> lock(mutex_);
    // Jitter in [delay/2, delay] avoids synchronized retry bursts.
    double low = delay / 2.0;
    double span = delay - low;
    double jittered = low + span * (static_cast<double>(jitter_rng_()) /
                                    static_cast<double>(std::mt19937_64::max()));
    return std::chrono::milliseconds(static_cast<long long>(jittered));
  }

  void wait_for_rate_limit() {
    if (config_.requests_per_minute <= 0) return;
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      using clock = std::chrono::steady_clock;
      const double per_ms = config_.requests_per_minute / 60000.0;
      auto now = clock::now();
      if (bucket_last_.time_since_epoch().count() == 0) {
        bucket_last_ = now;
        bucket_tokens_ = 1.0;
      }
      bucket_tokens_ += std::chrono::duration<double, std::milli>(now - bucket_last_).count() *
                        per_ms;
      if (bucket_tokens_ > config_.requests_per_minute) bucket_tokens_ = config_.requests_per_minute;
      bucket_last_ = now;
      if (bucket_tokens_ < 1.0)
        wait = std::chrono::milliseconds(static_cast<long long>((1.0 - bucket_tokens_) / per_ms));
      else
        bucket_tokens_ -= 1.0;
    }
    if (wait.count() > 0) {
      sleeper_(wait);
      std::lock_guard<std::mutex> lock(mutex_);
      bucket_tokens_ = 0.0;
      bucket_last_ = std::chrono::steady_clock::now();
    }
  }

  HttpBackendConfig config_;
  Sleeper sleeper_;
  std::mt19937_64 jitter_rng_;
  std::mutex mutex_;
  double bucket_tokens_ = 0.0;
  std::chrono::steady_clock::time_point bucket_last_{};
};

inline void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// Content-addressed response cache in front of another backend. At most one
// inner call per distinct cache key: concurrent requests for the same key
// serialize on a per-key mutex while distinct keys proceed in parallel.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::string cache_dir)
      : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(dir_);
  }

  ChatResponse complete(const ChatRequest& request) override {
    const std::string key = cache_key(request);
    const std::string path = dir_ + "/" + key + ".json";

    std::shared_ptr<std::mutex> lock_for_key;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto& slot = key_locks_[key];
      if (!slot) slot = std::make_shared<std::mutex>();
      lock_for_key = slot;
    }
    std::lock_guard<std::mutex> key_lock(*lock_for_key);

    if (std::optional<ChatResponse> cached = read_cached(path)) {
      ++hits_;
      return *cached;
    }
    ChatResponse response = inner_->complete(request);
    ++misses_;
    nlohmann::ordered_json j = {{"text", response.text},
                                {"finish_reason", response.finish_reason},
                                {"prompt_tokens", response.usage.prompt_tokens},
                                {"completion_tokens", response.usage.completion_tokens},
                                {"backend_id", response.backend_id}};
    write_file_atomic(path, j.dump() + "\n");
    return response;
  }

  std::string id() const override { return "cached:" + inner_->id(); }

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  static std::optional<ChatResponse> read_cached(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    ChatResponse response;
    response.text = j.value("text", "");
    response.finish_reason = j.value("finish_reason", "stop");
    response.usage.prompt_tokens = j.value("prompt_tokens", 0);
    response.usage.completion_tokens = j.value("completion_tokens", 0);
    response.backend_id = j.value("backend_id", "");
    return response;
  }

  std::shared_ptr<Backend> inner_;
  std::string dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
  std::atomic<int> hits_{0};
  std::atomic<int> misses_{0};
};

// Wraps a backend so every completed call lands in the audit log.
class AuditingBackend : public Backend {
 public:
  AuditingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<AuditLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}

  ChatResponse complete(const ChatRequest& request) override {
    ChatResponse response = inner_->complete(request);
    log_->append(request, response);
    return response;
  }

  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<AuditLog> log_;
};

}  // namespace relex
