// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/llm.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace commenotes::llm {
namespace {

using nlohmann::json;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(EndpointConfig config) : config_(std::move(config)) {}

  ChatResult complete(const ChatRequest& request) override {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    json body{{"model", request.model},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
    if (request.temperature) body["temperature"] = *request.temperature;
    if (request.top_p) body["top_p"] = *request.top_p;

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) return TransportError{"request failed: " + httplib::to_string(res.error()), 0};
    if (res->status != 200) {
      return TransportError{"HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512),
                            res->status};
    }
    try {
      const auto reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      return TransportError{std::string("unexpected response shape: ") + e.what(), res->status};
    }
  }

 private:
  EndpointConfig config_;
};

}  // namespace

std::optional<EndpointConfig> endpoint_from_env() {
  auto base = env("COMMENOTES_LLM_BASE_URL");
  if (!base) return std::nullopt;
  EndpointConfig config;
  config.base_url = *base;
  config.api_key = env("COMMENOTES_LLM_API_KEY").value_or("");
  if (auto path = env("COMMENOTES_LLM_PATH")) config.path = *path;
  return config;
}

std::unique_ptr<ChatTransport> make_http_transport(EndpointConfig config) {
  return std::make_unique<HttpChatTransport>(std::move(config));
}

ChatResult complete_with_retry(ChatTransport& transport, const ChatRequest& request,
                               const RetryPolicy& policy,
                               const std::function<void(std::chrono::milliseconds)>& sleep) {
  ChatResult last = TransportError{"no attempts made", 0};
  for (int attempt = 0; attempt < std::max(1, policy.max_attempts); ++attempt) {
    if (attempt > 0) {
      const auto wait = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(policy.initial_backoff.count()) *
          std::pow(policy.multiplier, attempt - 1)));
      if (sleep) {
        sleep(wait);
      } else {
        std::this_thread::sleep_for(wait);
      }
    }
    last = transport.complete(request);
    if (std::holds_alternative<std::string>(last)) return last;
  }
  return last;
}

}  // namespace commenotes::llm
