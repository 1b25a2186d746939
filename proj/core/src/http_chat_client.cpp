#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/llm.hpp"

namespace situgen {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("LLM base URL must include a scheme: " + base_url);
  }
  const auto path_begin = base_url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = base_url.substr(0, path_begin);
  e.path_prefix = path_begin == std::string::npos ? "" : base_url.substr(path_begin);
  while (!e.path_prefix.empty() && e.path_prefix.back() == '/') {
    e.path_prefix.pop_back();
  }
  return e;
}

}  // namespace

HttpChatClient::HttpChatClient(LlmSettings settings) : settings_(std::move(settings)) {
  split_base_url(settings_.base_url);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  const Endpoint ep = split_base_url(settings_.base_url);
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(std::chrono::seconds(30));
  client.set_read_timeout(settings_.timeout);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + settings_.api_key);
  }
  ChatRequest req = request;
  if (req.model.empty()) {
    req.model = settings_.model;
  }
  const std::string body = to_wire_json(req).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(500 << attempt));
    }
    auto res = client.Post(ep.path_prefix + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw Error("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return extract_completion_text(json::parse(res->body));
  }
  throw Error("chat endpoint failed after retries: " + last_error);
}

}  // namespace situgen
