#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "situgen/llm.hpp"
#include "situgen/scene.hpp"

namespace situgen::test {

inline std::filesystem::path fixtures_dir() { return SITUGEN_FIXTURES_DIR; }
inline std::filesystem::path scenes_dir() { return fixtures_dir() / "scenes"; }

inline Scene fixture_scene(const std::string& name) { return load_scene(scenes_dir() / (name + ".json")); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("situgen_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Chat client answering from a callback and recording every request.
class FakeChat final : public ChatClient {
 public:
  explicit FakeChat(std::function<std::string(const ChatRequest&)> reply) : reply_(std::move(reply)) {}

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    return reply_(request);
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }
  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  std::function<std::string(const ChatRequest&)> reply_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

inline std::string user_text(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) {
    for (const auto& part : m.content) {
      if (part.kind == ChatContentPart::Kind::text) out += part.value;
    }
  }
  return out;
}

}  // namespace situgen::test
