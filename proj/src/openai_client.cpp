#include "hyperrank/openai_client.hpp"

#include <algorithm>
#include <thread>

#include "hyperrank/errors.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace hyperrank {

namespace net {
namespace {
std::atomic<bool> g_offline{false};
}
void set_offline(bool offline) { g_offline.store(offline); }
bool offline() { return g_offline.load(); }
}  // namespace net

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

OpenAIClient::OpenAIClient(EndpointConfig config, RetryPolicy retry, std::chrono::seconds timeout)
    : config_(std::move(config)), retry_(retry), timeout_(timeout) {
  if (net::offline()) throw RemoteError("remote client requested while offline mode is on");
  if (config_.base_url.empty()) throw RemoteError("no API base URL configured");
  if (retry_.attempts < 1) throw ContractError("retry attempts must be >= 1");

  auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw RemoteError("API base URL must include a scheme: '" + config_.base_url + "'");
  }
  auto path_start = config_.base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.base_url;
  } else {
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    path_prefix_ = config_.base_url.substr(path_start);
  }
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

nlohmann::json OpenAIClient::post_json(std::string_view path, const nlohmann::json& body) const {
  const std::string payload = body.dump();
  const std::string full_path = path_prefix_ + std::string(path);
  auto backoff = retry_.initial_backoff;
  std::string last_error;

  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    if (net::offline()) throw RemoteError("network access attempted in offline mode");
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * retry_.multiplier));
    }

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    ++requests_;
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw RemoteError(std::string("malformed JSON response: ") + e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (!retryable_status(res->status)) break;
  }
  throw RemoteError("POST " + full_path + " failed: " + last_error);
}

std::string OpenAIClient::chat(const std::vector<ChatMessage>& messages) const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body = {{"model", config_.model}, {"messages", msgs}, {"temperature", 0}};

  auto response = post_json("/chat/completions", body);
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(std::string("unexpected chat completion shape: ") + e.what());
  }
}

std::vector<std::vector<float>> OpenAIClient::embed(const std::vector<std::string>& inputs) const {
  nlohmann::json body = {{"model", config_.model}, {"input", inputs}};
  auto response = post_json("/embeddings", body);

  std::vector<std::vector<float>> out(inputs.size());
  try {
    const auto& data = response.at("data");
    if (data.size() != inputs.size()) {
      throw RemoteError("embedding response has " + std::to_string(data.size()) +
                        " rows for " + std::to_string(inputs.size()) + " inputs");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data[i];
      std::size_t slot = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (slot >= out.size() || !out[slot].empty()) {
        throw RemoteError("embedding response has a bad or repeated index");
      }
      out[slot] = item.at("embedding").get<std::vector<float>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(std::string("unexpected embedding response shape: ") + e.what());
  }
  return out;
}

}  // namespace hyperrank
