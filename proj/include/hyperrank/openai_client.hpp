#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hyperrank {

namespace net {
// Process-wide offline switch. While set, every remote client refuses to construct and
// refuses to send.
void set_offline(bool offline);
bool offline();
}  // namespace net

struct EndpointConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

/// Minimal client for OpenAI-compatible `/chat/completions` and `/embeddings`.
/// Thread-safe: each request opens its own connection.
class OpenAIClient {
 public:
  explicit OpenAIClient(EndpointConfig config, RetryPolicy retry = {},
                        std::chrono::seconds timeout = std::chrono::seconds(120));

  /// POSTs `body` to `<base_url><path>` and returns the parsed response. Retries
  /// transport errors, 408, 429 and 5xx with exponential backoff; throws RemoteError
  /// once attempts are exhausted or on any other non-2xx status.
  nlohmann::json post_json(std::string_view path, const nlohmann::json& body) const;

  /// Chat completion at temperature 0; returns choices[0].message.content.
  std::string chat(const std::vector<ChatMessage>& messages) const;

  /// One embedding per input, in input order.
  std::vector<std::vector<float>> embed(const std::vector<std::string>& inputs) const;

  const EndpointConfig& config() const noexcept { return config_; }
  std::size_t requests_sent() const noexcept { return requests_.load(); }

 private:
  EndpointConfig config_;
  RetryPolicy retry_;
  std::chrono::seconds timeout_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  mutable std::atomic<std::size_t> requests_{0};
};

}  // namespace hyperrank
