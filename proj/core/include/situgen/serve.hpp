#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/qa.hpp"
#include "situgen/refinement.hpp"
#include "situgen/scene.hpp"

namespace situgen {

struct ServeConfig {
  std::filesystem::path dataset;
  std::filesystem::path scenes_dir;
  std::filesystem::path verdicts;
  std::optional<std::filesystem::path> static_dir;  // review UI build; a stub page otherwise
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string cors_origin = "*";
  std::size_t page_size = 50;

  /// Defaults under SITUGEN_DATA_DIR (or the working directory):
  /// dataset.jsonl, scenes/ and verdicts.jsonl.
  static ServeConfig from_environment();
};

/// Parses "host:port"; a bare port keeps the default host.
std::pair<std::string, int> parse_address(const std::string& addr);

/// In-memory review state backed by an append-only verdict log. Reads run
/// concurrently; appends are serialized and fsync'ed before they are visible.
class ReviewStore {
 public:
  enum class Submit { recorded, duplicate };

  ReviewStore(std::vector<QAPair> items, std::vector<Scene> scenes, std::filesystem::path verdict_log);
  ~ReviewStore();
  ReviewStore(const ReviewStore&) = delete;
  ReviewStore& operator=(const ReviewStore&) = delete;

  const std::vector<QAPair>& items() const { return items_; }
  const std::vector<Scene>& scenes() const { return scenes_; }
  const QAPair* item(const std::string& qa_id) const;
  const Scene* scene(const std::string& scene_id) const;

  /// Appends unless the same reviewer already filed an identical verdict
  /// (timestamps aside) for the item.
  Submit submit(ReviewVerdict verdict);

  std::optional<ReviewVerdict> latest(const std::string& qa_id) const;
  std::vector<ReviewVerdict> history(const std::string& qa_id) const;
  std::size_t log_size() const;
  /// Log lines naming items that are not in the dataset.
  std::size_t orphaned() const { return orphaned_; }

  nlohmann::json progress() const;

 private:
  void apply(const ReviewVerdict& verdict);

  std::vector<QAPair> items_;
  std::vector<Scene> scenes_;
  std::map<std::string, std::size_t> item_index_;
  std::map<std::string, std::size_t> scene_index_;
  std::filesystem::path log_path_;
  int log_fd_ = -1;
  std::size_t orphaned_ = 0;

  mutable std::shared_mutex mutex_;
  std::mutex write_mutex_;
  std::map<std::string, std::vector<ReviewVerdict>> history_;
  std::size_t log_size_ = 0;
};

/// JSON API plus static files for the review UI.
class ReviewServer {
 public:
  explicit ReviewServer(const ServeConfig& config);
  ReviewServer(const ServeConfig& config, std::shared_ptr<ReviewStore> store);
  ~ReviewServer();

  ReviewStore& store() { return *store_; }

  /// Binds without serving; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  ServeConfig config_;
  std::shared_ptr<ReviewStore> store_;
  std::unique_ptr<Impl> impl_;
};

/// Top-down payload for the review canvas: floor outline, object rectangles
/// and, for an item, the agent pose and the objects it references.
nlohmann::json topdown_payload(const Scene& scene, const QAPair* item);

}  // namespace situgen
