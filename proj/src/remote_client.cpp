#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "srt/errors.hpp"
#include "srt/gateway.hpp"

namespace srt::gateway {

namespace {

using nlohmann::json;

bool retriable_status(int status) {
  return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

std::string env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  config.base_url = env_or("SRT_API_BASE_URL", "https://api.openai.com");
  config.api_key = env_or("SRT_API_KEY", "");
  config.model = env_or("SRT_API_MODEL", "gpt-4-1106-preview");
  return config;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("remote backend: empty base URL");
  sleep_fn = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
}

GenerationResult RemoteBackend::generate(const GenerationRequest& request) {
  json body = {
      {"model", config_.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_new_tokens},
      {"n", request.n_samples},
  };
  if (request.seed) body["seed"] = *request.seed;

  httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  auto start = std::chrono::steady_clock::now();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      int delay = config_.backoff_base_ms << (attempt - 1);
      sleep_fn(delay);
    }
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_connection_timeout(10, 0);
    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (retriable_status(res->status)) {
      last_error = "http " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw RemoteError("chat completion failed: http " + std::to_string(res->status) + " " +
                        res->body.substr(0, 500));
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices")) {
      throw RemoteError("chat completion: unparseable response body");
    }
    GenerationResult result;
    result.backend = BackendKind::remote;
    result.request_fingerprint = request.fingerprint();
    for (const auto& choice : reply.at("choices")) {
      result.texts.push_back(choice.at("message").at("content").get<std::string>());
    }
    if (static_cast<int>(result.texts.size()) != request.n_samples) {
      throw RemoteError("chat completion: expected " + std::to_string(request.n_samples) +
                        " choices, got " + std::to_string(result.texts.size()));
    }
    auto elapsed = std::chrono::steady_clock::now() - start;
    result.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    return result;
  }
  throw RemoteError("RemoteExhausted after " + std::to_string(config_.max_retries + 1) +
                    " attempts: " + last_error);
}

}  // namespace srt::gateway
