#include "situgen/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "situgen/error.hpp"

namespace situgen {

using nlohmann::json;

ChatMessage ChatMessage::text(std::string role, std::string body) {
  return {std::move(role), {{ChatContentPart::Kind::text, std::move(body)}}};
}

json to_wire_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content;
    if (m.content.size() == 1 && m.content[0].kind == ChatContentPart::Kind::text) {
      content = m.content[0].value;
    } else {
      content = json::array();
      for (const auto& part : m.content) {
        if (part.kind == ChatContentPart::Kind::text) {
          content.push_back({{"type", "text"}, {"text", part.value}});
        } else {
          content.push_back({{"type", "image_url"}, {"image_url", {{"url", part.value}}}});
        }
      }
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  json body = {{"model", request.model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
  if (request.max_tokens > 0) {
    body["max_tokens"] = request.max_tokens;
  }
  return body;
}

std::string extract_completion_text(const json& response) {
  if (response.contains("error")) {
    throw Error("chat endpoint error: " + response["error"].dump());
  }
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) {
    throw Error("chat response has no choices: " + response.dump());
  }
  const json& msg = response["choices"][0].value("message", json::object());
  const json content = msg.value("content", json());
  if (content.is_string()) {
    return content.get<std::string>();
  }
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") {
        out += part.value("text", "");
      }
    }
    return out;
  }
  throw Error("chat response has no message content: " + response.dump());
}

LlmSettings LlmSettings::from_environment() {
  LlmSettings s;
  const auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
      return std::nullopt;
    }
    return std::string(v);
  };
  if (auto v = env("SITUGEN_LLM_BASE_URL")) s.base_url = *v;
  if (auto v = env("SITUGEN_LLM_API_KEY")) s.api_key = *v;
  if (auto v = env("SITUGEN_LLM_MODEL")) s.model = *v;
  if (auto v = env("SITUGEN_CACHE_DIR")) s.cache_dir = *v;
  return s;
}

// --- hashing / encoding --------------------------------------------------------

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4U]);
    out.push_back(kHex[digest[i] & 0x0FU]);
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string image_data_url(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read image " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string ext = path.extension().string();
  std::string mime = "jpeg";
  if (ext == ".png") mime = "png";
  else if (ext == ".webp") mime = "webp";
  else if (ext == ".gif") mime = "gif";
  return "data:image/" + mime + ";base64," + base64_encode(buf.str());
}

// --- cache ----------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::key_for(const ChatRequest& request) { return sha256_hex(to_wire_json(request).dump()); }

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::mutex& ResponseCache::lock_for(const std::string& key) {
  return locks_[std::hash<std::string>{}(key) % locks_.size()];
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_for(key));
  if (!in) {
    return std::nullopt;
  }
  try {
    const json entry = json::parse(in);
    return entry.at("response").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ChatRequest& request, const std::string& response) {
  const std::lock_guard lock(lock_for(key));
  const auto path = path_for(key);
  if (std::filesystem::exists(path)) {
    return;  // first writer wins
  }
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write cache entry " + tmp);
    }
    out << json{{"request", to_wire_json(request)}, {"response", response}}.dump(1) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

CachedChatClient::CachedChatClient(std::shared_ptr<ChatClient> upstream, std::shared_ptr<ResponseCache> cache)
    : upstream_(std::move(upstream)), cache_(std::move(cache)) {
  if (!cache_) {
    throw Error("CachedChatClient needs a cache");
  }
}

std::string CachedChatClient::complete(const ChatRequest& request) {
  const std::string key = ResponseCache::key_for(request);
  if (auto hit = cache_->get(key)) {
    const std::lock_guard lock(stats_mutex_);
    ++hits_;
    return *hit;
  }
  {
    const std::lock_guard lock(stats_mutex_);
    ++misses_;
  }
  if (!upstream_) {
    throw Error("offline mode: no cached response for request " + key + " in " + cache_->dir().string());
  }
  std::string response = upstream_->complete(request);
  cache_->put(key, request, response);
  return response;
}

std::size_t CachedChatClient::hits() const {
  const std::lock_guard lock(stats_mutex_);
  return hits_;
}

std::size_t CachedChatClient::misses() const {
  const std::lock_guard lock(stats_mutex_);
  return misses_;
}

std::shared_ptr<ChatClient> make_chat_client(const LlmSettings& settings, bool offline) {
  auto cache = std::make_shared<ResponseCache>(settings.cache_dir);
  std::shared_ptr<ChatClient> upstream;
  if (!offline) {
    if (settings.base_url.empty()) {
      throw Error("SITUGEN_LLM_BASE_URL is not set (use --offline to replay the cache)");
    }
    upstream = std::make_shared<HttpChatClient>(settings);
  }
  return std::make_shared<CachedChatClient>(std::move(upstream), std::move(cache));
}

}  // namespace situgen
