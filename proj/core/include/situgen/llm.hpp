#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace situgen {

struct ChatContentPart {
  enum class Kind { text, image_url };

  Kind kind = Kind::text;
  std::string value;  // text, or a data:/http URL for images
};

struct ChatMessage {
  std::string role;
  std::vector<ChatContentPart> content;

  static ChatMessage text(std::string role, std::string body);
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 0;  // 0 = provider default
};

/// Chat-completion wire body (`{"model", "messages": [...]}`); image parts use
/// `{"type": "image_url", "image_url": {"url": ...}}`.
nlohmann::json to_wire_json(const ChatRequest& request);

/// Pulls `choices[0].message.content` out of a chat-completion response.
std::string extract_completion_text(const nlohmann::json& response);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct LlmSettings {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model = "gpt-4o-mini";
  std::filesystem::path cache_dir = ".situgen-cache";
  std::chrono::seconds timeout{120};
  int max_retries = 2;

  /// Reads SITUGEN_LLM_BASE_URL, SITUGEN_LLM_API_KEY, SITUGEN_LLM_MODEL and
  /// SITUGEN_CACHE_DIR.
  static LlmSettings from_environment();
};

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(LlmSettings settings);
  std::string complete(const ChatRequest& request) override;

 private:
  LlmSettings settings_;
};

/// Content-addressed response store: one file per SHA-256 of the canonical
/// request body. Reads are lock-free; inserts for the same key are
/// serialized and land atomically via rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_for(const ChatRequest& request);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const ChatRequest& request, const std::string& response);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::mutex& lock_for(const std::string& key);

  std::filesystem::path dir_;
  std::array<std::mutex, 64> locks_;
};

/// Replay layer in front of an upstream client. With no upstream (offline
/// mode) a cache miss is an error.
class CachedChatClient final : public ChatClient {
 public:
  CachedChatClient(std::shared_ptr<ChatClient> upstream, std::shared_ptr<ResponseCache> cache);
  std::string complete(const ChatRequest& request) override;

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<ChatClient> upstream_;
  std::shared_ptr<ResponseCache> cache_;
  mutable std::mutex stats_mutex_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Cached client over HTTP, or a replay-only client when `offline`.
std::shared_ptr<ChatClient> make_chat_client(const LlmSettings& settings, bool offline);

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view bytes);
/// `data:image/<type>;base64,...` for a local image file.
std::string image_data_url(const std::filesystem::path& path);

}  // namespace situgen
