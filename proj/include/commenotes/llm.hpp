// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace commenotes::llm {

/// One single-turn completion request against a chat-completions endpoint.
struct ChatRequest {
  std::string model;
  std::string prompt;
  std::optional<double> temperature;
  std::optional<double> top_p;
};

struct TransportError {
  std::string message;
  int http_status = 0;  // 0 when no response was received
};

using ChatResult = std::variant<std::string, TransportError>;

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns the assistant message content or a transport-level error.
  virtual ChatResult complete(const ChatRequest& request) = 0;
};

struct EndpointConfig {
  std::string base_url;  // e.g. "https://api.openai.com", "http://127.0.0.1:8080"
  std::string api_key;
  std::string path = "/v1/chat/completions";
  std::chrono::seconds timeout{60};
};

/// Environment variables: COMMENOTES_LLM_BASE_URL (required),
/// COMMENOTES_LLM_API_KEY, COMMENOTES_LLM_PATH.
std::optional<EndpointConfig> endpoint_from_env();

/// OpenAI-compatible /v1/chat/completions over HTTP(S).
std::unique_ptr<ChatTransport> make_http_transport(EndpointConfig config);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

/// Calls `transport` until success or `policy.max_attempts` transport errors,
/// sleeping initial_backoff * multiplier^k between attempts.
ChatResult complete_with_retry(ChatTransport& transport, const ChatRequest& request,
                               const RetryPolicy& policy,
                               const std::function<void(std::chrono::milliseconds)>& sleep = {});

}  // namespace commenotes::llm
