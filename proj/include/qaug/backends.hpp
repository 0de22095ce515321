#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "qaug/model_id.hpp"
#include "qaug/prompt.hpp"

namespace qaug {

enum class BackendKind { HttpChat, Scripted };

inline const char* backend_kind_name(BackendKind kind) {
  return kind == BackendKind::HttpChat ? "http_chat" : "scripted";
}

inline BackendKind parse_backend_kind(const std::string& name) {
  if (name == "http_chat") return BackendKind::HttpChat;
  if (name == "scripted") return BackendKind::Scripted;
  fail(ErrorCode::bad_config, "unknown backend kind \"" + name + "\"");
}

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds base_backoff{250};
};

struct BackendConfig {
  ModelId model;
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint_url;               // HttpChat
  std::string api_key_env;                // HttpChat
  std::filesystem::path fixtures_path;    // Scripted
  RetryPolicy retry;
  double rate_limit = 0.0;                // requests per second, 0 = unlimited
};

inline void validate_backend_config(const BackendConfig& config) {
  if (config.model.name.empty())
    fail(ErrorCode::bad_config, "backend model name is empty");
  if (config.kind == BackendKind::HttpChat) {
    if (config.endpoint_url.empty())
      fail(ErrorCode::bad_config,
           "http_chat backend \"" + config.model.name + "\" needs endpoint_url");
    if (config.api_key_env.empty())
      fail(ErrorCode::bad_config,
           "http_chat backend \"" + config.model.name + "\" needs api_key_env");
  } else {
    if (config.fixtures_path.empty())
      fail(ErrorCode::bad_config,
           "scripted backend \"" + config.model.name + "\" needs fixtures_path");
  }
  if (config.retry.max_attempts < 1)
    fail(ErrorCode::bad_config, "retry.max_attempts must be at least 1");
  if (config.rate_limit < 0.0)
    fail(ErrorCode::bad_config, "rate_limit must be non-negative");
}

inline ojson backend_config_to_json(const BackendConfig& config) {
  ojson obj;
  obj["model"] = config.model.name;
  obj["kind"] = backend_kind_name(config.kind);
  if (config.kind == BackendKind::HttpChat) {
    obj["endpoint_url"] = config.endpoint_url;
    obj["api_key_env"] = config.api_key_env;
  } else {
    obj["fixtures_path"] = config.fixtures_path.string();
  }
  obj["retry"] = ojson{{"max_attempts", config.retry.max_attempts},
                       {"base_backoff_ms", config.retry.base_backoff.count()}};
  obj["rate_limit"] = config.rate_limit;
  return obj;
}

inline BackendConfig backend_config_from_json(const ojson& obj) {
  BackendConfig config;
  try {
    config.model.name = obj.at("model").get<std::string>();
    config.kind = parse_backend_kind(obj.value("kind", std::string("scripted")));
    config.endpoint_url = obj.value("endpoint_url", std::string());
    config.api_key_env = obj.value("api_key_env", std::string());
    config.fixtures_path = obj.value("fixtures_path", std::string());
    if (obj.contains("retry")) {
      const auto& retry = obj.at("retry");
      config.retry.max_attempts =
          retry.value("max_attempts", config.retry.max_attempts);
      config.retry.base_backoff = std::chrono::milliseconds(
          retry.value("base_backoff_ms", config.retry.base_backoff.count()));
    }
    config.rate_limit = obj.value("rate_limit", 0.0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_config, std::string("invalid backend config: ") + e.what());
  }
  return config;
}

struct GenerationRequest {
  RenderedPrompt prompt;
  std::size_t n_candidates = 1;
  double temperature = 0.7;
  std::size_t max_tokens = 256;
};

struct GenerationResponse {
  std::string raw_text;
  std::vector<std::string> candidates;
};

/// The "Q<i>:" lines of the completion, in order, trimmed, empties dropped.
inline std::vector<std::string> parse_candidates(std::string_view raw_text) {
  std::vector<std::string> candidates;
  for (const std::string& raw_line : split_lines(raw_text)) {
    std::string_view line = raw_line;
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] != 'Q') continue;
    ++i;
    const std::size_t digits_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_start || i >= line.size() || line[i] != ':') continue;
    std::string text = trim(line.substr(i + 1));
    if (!text.empty()) candidates.push_back(std::move(text));
  }
  return candidates;
}

inline std::string ensure_digest(const RenderedPrompt& prompt) {
  return prompt.digest.empty() ? prompt_digest(prompt) : prompt.digest;
}

/// Shared per backend; serializes token acquisition so concurrent callers
/// respect the configured requests-per-second budget.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second) {
    if (per_second > 0.0)
      interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / per_second));
  }

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point wake;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      if (next_ < now) next_ = now;
      wake = next_;
      next_ += interval_;
    }
    std::this_thread::sleep_until(wake);
  }

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_{0};
  std::chrono::steady_clock::time_point next_{};
};

class Backend {
 public:
  explicit Backend(BackendConfig config) : config_(std::move(config)) {}
  virtual ~Backend() = default;

  const BackendConfig& config() const { return config_; }

  GenerationResponse generate(const GenerationRequest& request) {
    GenerationResponse response;
    response.raw_text = fetch(request);
    response.candidates = parse_candidates(response.raw_text);
    return response;
  }

 protected:
  virtual std::string fetch(const GenerationRequest& request) = 0;

  BackendConfig config_;
};

/// Replays recorded completions keyed by prompt digest. Lookups are read-only
/// and freely concurrent.
class ScriptedBackend : public Backend {
 public:
  using Backend::Backend;

 protected:
  std::string fetch(const GenerationRequest& request) override {
    const std::string digest = ensure_digest(request.prompt);
    const std::filesystem::path path = config_.fixtures_path / (digest + ".txt");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
      fail(ErrorCode::fixture_missing,
           "backend \"" + config_.model.name + "\" has no fixture for digest " + digest);
    return read_text_file(path);
  }
};

/// OpenAI-compatible chat-completions client with bounded exponential-backoff
/// retries on transient failures (429, 5xx, timeouts).
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(BackendConfig config)
      : Backend(std::move(config)), limiter_(config_.rate_limit) {
    const std::string& url = config_.endpoint_url;
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      fail(ErrorCode::bad_config, "endpoint_url \"" + url + "\" has no scheme");
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = url;
      path_ = "/";
    } else {
      base_ = url.substr(0, path_start);
      path_ = url.substr(path_start);
    }
  }

 protected:
  std::string fetch(const GenerationRequest& request) override {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      fail(ErrorCode::auth,
           "environment variable " + config_.api_key_env + " is not set");

    ojson body;
    body["model"] = config_.model.name;
    body["messages"] = ojson::array(
        {ojson{{"role", "system"}, {"content", request.prompt.system_message}},
         ojson{{"role", "user"}, {"content", request.prompt.user_message}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    const std::size_t max_attempts = config_.retry.max_attempts;
    std::string last_failure;
    for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
      limiter_.acquire();
      httplib::Client client(base_);
      client.set_connection_timeout(30, 0);
      client.set_read_timeout(30, 0);
      auto result = client.Post(path_, headers, payload, "application/json");
      if (result) {
        if (result->status == 200) return extract_content(result->body);
        if (result->status == 401 || result->status == 403)
          fail(ErrorCode::auth, "backend \"" + config_.model.name +
                                    "\" rejected credentials (HTTP " +
                                    std::to_string(result->status) + ")");
        if (result->status == 429 || result->status >= 500) {
          last_failure = "HTTP " + std::to_string(result->status);
        } else {
          fail(ErrorCode::transport, "backend \"" + config_.model.name +
                                         "\" returned HTTP " +
                                         std::to_string(result->status));
        }
      } else {
        last_failure = "connection error " + std::to_string(static_cast<int>(result.error()));
      }
      if (attempt < max_attempts)
        std::this_thread::sleep_for(config_.retry.base_backoff * (1u << (attempt - 1)));
    }
    fail(ErrorCode::transport, "backend \"" + config_.model.name + "\" failed after " +
                                   std::to_string(max_attempts) + " attempts (" +
                                   last_failure + ")");
  }

 private:
  std::string extract_content(const std::string& body) const {
    try {
      const ojson response = ojson::parse(body);
      return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::transport, "backend \"" + config_.model.name +
                                     "\" returned a malformed completion body: " + e.what());
    }
  }

  std::string base_;
  std::string path_;
  RateLimiter limiter_;
};

/// Records every live completion under fixtures_path for later replay.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::filesystem::path fixtures_path)
      : Backend(inner->config()), inner_(std::move(inner)),
        fixtures_path_(std::move(fixtures_path)) {}

 protected:
  std::string fetch(const GenerationRequest& request) override {
    const GenerationResponse response = inner_->generate(request);
    std::error_code ec;
    std::filesystem::create_directories(fixtures_path_, ec);
    write_text_file(fixtures_path_ / (ensure_digest(request.prompt) + ".txt"),
                    response.raw_text);
    return response.raw_text;
  }

 private:
  std::unique_ptr<Backend> inner_;
  std::filesystem::path fixtures_path_;
};

using BackendFactory = std::function<std::unique_ptr<Backend>(const BackendConfig&)>;

inline std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  validate_backend_config(config);
  if (config.kind == BackendKind::HttpChat)
    return std::make_unique<HttpChatBackend>(config);
  return std::make_unique<ScriptedBackend>(config);
}

inline BackendFactory default_backend_factory() {
  return [](const BackendConfig& config) { return make_backend(config); };
}

inline GenerationResponse generate(const BackendConfig& config,
                                   const GenerationRequest& request) {
  return make_backend(config)->generate(request);
}

/// Executes the live call and stores its raw completion as a replayable
/// fixture. Nothing is written when the call fails.
inline GenerationResponse record_fixture(const BackendConfig& config,
                                         const GenerationRequest& request,
                                         const std::filesystem::path& fixtures_path) {
  if (config.kind != BackendKind::HttpChat)
    fail(ErrorCode::bad_config, "record_fixture requires an http_chat backend");
  HttpChatBackend backend(config);
  GenerationResponse response = backend.generate(request);
  std::error_code ec;
  std::filesystem::create_directories(fixtures_path, ec);
  write_text_file(fixtures_path / (ensure_digest(request.prompt) + ".txt"),
                  response.raw_text);
  return response;
}

}  // namespace qaug
