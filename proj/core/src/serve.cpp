#include "situgen/serve.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <set>

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/pipeline.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

constexpr const char* kStubPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>situgen review</title></head>
<body>
<h1>situgen review service</h1>
<p>The review UI is not installed. Start the server with --static pointing at a UI build,
or use the JSON API under <code>/api/</code>.</p>
<ul>
<li><a href="/api/scenes">/api/scenes</a></li>
<li><a href="/api/items">/api/items</a></li>
<li><a href="/api/progress">/api/progress</a></li>
</ul>
</body></html>
)";

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same_verdict(const ReviewVerdict& a, const ReviewVerdict& b) {
  return a.qa_id == b.qa_id && a.scores == b.scores && a.verdict == b.verdict && a.fixed_answer == b.fixed_answer &&
         a.reviewer == b.reviewer;
}

json vec2(Vec2 p) { return json::array({p.x, p.y}); }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

bool needs_review(const QAPair& qa) {
  const auto it = qa.meta.find("review");
  return it != qa.meta.end() && (it->second == "corrected" || it->second == "flagged");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    const long long v = std::stoll(req.get_param_value(key));
    return v < 0 ? fallback : static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace

ServeConfig ServeConfig::from_environment() {
  ServeConfig c;
  std::filesystem::path root = ".";
  if (const char* dir = std::getenv("SITUGEN_DATA_DIR"); dir != nullptr && *dir != '\0') root = dir;
  c.dataset = root / "dataset.jsonl";
  c.scenes_dir = root / "scenes";
  c.verdicts = root / "verdicts.jsonl";
  return c;
}

std::pair<std::string, int> parse_address(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port = addr;
  if (const auto colon = addr.rfind(':'); colon != std::string::npos) {
    host = addr.substr(0, colon);
    port = addr.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    return {host.empty() ? "127.0.0.1" : host, p};
  } catch (const std::exception&) {
    throw Error("invalid address '" + addr + "', expected host:port");
  }
}

ReviewStore::ReviewStore(std::vector<QAPair> items, std::vector<Scene> scenes, std::filesystem::path verdict_log)
    : items_(std::move(items)), scenes_(std::move(scenes)), log_path_(std::move(verdict_log)) {
  for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i].qa_id] = i;
  for (std::size_t i = 0; i < scenes_.size(); ++i) scene_index_[scenes_[i].scene_id] = i;
  if (std::filesystem::exists(log_path_)) {
    for (const auto& v : load_verdicts(log_path_)) {
      ++log_size_;
      if (item_index_.count(v.qa_id) == 0) {
        ++orphaned_;
        continue;
      }
      apply(v);
    }
  } else if (log_path_.has_parent_path()) {
    std::filesystem::create_directories(log_path_.parent_path());
  }
  log_fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (log_fd_ < 0) {
    throw Error("cannot open verdict log " + log_path_.string());
  }
}

ReviewStore::~ReviewStore() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

const QAPair* ReviewStore::item(const std::string& qa_id) const {
  const auto it = item_index_.find(qa_id);
  return it == item_index_.end() ? nullptr : &items_[it->second];
}

const Scene* ReviewStore::scene(const std::string& scene_id) const {
  const auto it = scene_index_.find(scene_id);
  return it == scene_index_.end() ? nullptr : &scenes_[it->second];
}

void ReviewStore::apply(const ReviewVerdict& verdict) { history_[verdict.qa_id].push_back(verdict); }

ReviewStore::Submit ReviewStore::submit(ReviewVerdict verdict) {
  if (item(verdict.qa_id) == nullptr) {
    throw Error("unknown qa_id " + verdict.qa_id);
  }
  if (verdict.timestamp.empty()) verdict.timestamp = utc_now();
  std::lock_guard writer(write_mutex_);
  {
    std::shared_lock read(mutex_);
    const auto it = history_.find(verdict.qa_id);
    if (it != history_.end()) {
      for (auto v = it->second.rbegin(); v != it->second.rend(); ++v) {
        if (v->reviewer != verdict.reviewer) continue;
        if (same_verdict(*v, verdict)) return Submit::duplicate;
        break;
      }
    }
  }
  const std::string line = verdict_to_json(verdict).dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(log_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("verdict log write failed: " + log_path_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(log_fd_) != 0) {
    throw Error("verdict log fsync failed: " + log_path_.string());
  }
  std::unique_lock write(mutex_);
  apply(verdict);
  ++log_size_;
  return Submit::recorded;
}

std::optional<ReviewVerdict> ReviewStore::latest(const std::string& qa_id) const {
  std::shared_lock lock(mutex_);
  const auto it = history_.find(qa_id);
  if (it == history_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<ReviewVerdict> ReviewStore::history(const std::string& qa_id) const {
  std::shared_lock lock(mutex_);
  const auto it = history_.find(qa_id);
  return it == history_.end() ? std::vector<ReviewVerdict>{} : it->second;
}

std::size_t ReviewStore::log_size() const {
  std::shared_lock lock(mutex_);
  return log_size_;
}

json ReviewStore::progress() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> by_kind = {{"accept", 0}, {"reject", 0}, {"fix", 0}};
  std::size_t reviewed = 0;
  for (const auto& [id, list] : history_) {
    if (list.empty()) continue;
    ++reviewed;
    ++by_kind[std::string(to_string(list.back().verdict))];
  }
  return {{"total", items_.size()},
          {"reviewed", reviewed},
          {"remaining", items_.size() - reviewed},
          {"accept", by_kind["accept"]},
          {"reject", by_kind["reject"]},
          {"fix", by_kind["fix"]},
          {"verdicts", log_size_}};
}

json topdown_payload(const Scene& scene, const QAPair* item) {
  json floor = json::array();
  if (scene.floor.polygon) {
    for (const auto& p : *scene.floor.polygon) floor.push_back(vec2(p));
  } else {
    const Rect b = scene.floor.bounds();
    for (const Vec2 p : {b.min, Vec2{b.max.x, b.min.y}, b.max, Vec2{b.min.x, b.max.y}}) floor.push_back(vec2(p));
  }
  json objects = json::array();
  for (const auto& obj : scene.objects) {
    json corners = json::array();
    for (const auto& c : obj.footprint().corners()) corners.push_back(vec2(c));
    json attributes = json::object();
    for (const auto attr : kAllAttributes) {
      if (const auto& v = obj.attributes.get(attr)) attributes[std::string(attribute_key(attr))] = *v;
    }
    json o = {{"id", obj.id},
              {"label", obj.label},
              {"center", vec2({obj.centroid.x, obj.centroid.y})},
              {"size", vec2({obj.size.x, obj.size.y})},
              {"yaw_deg", file_degrees(obj.yaw)},
              {"corners", corners},
              {"attributes", attributes}};
    if (obj.image_ref) o["image_ref"] = *obj.image_ref;
    objects.push_back(std::move(o));
  }
  json out = {{"scene_id", scene.scene_id}, {"floor", {{"polygon", floor}, {"z", scene.floor.z}}}, {"objects", objects}};
  if (item != nullptr) {
    std::set<int> ids;
    for (const auto* text : {&item->question, &item->situation.action_text, &item->situation.location_text}) {
      for (const int id : text->referenced_ids()) ids.insert(id);
    }
    for (const int id : interleave(item->answer, &scene).referenced_ids()) ids.insert(id);
    out["agent"] = {{"qa_id", item->qa_id},
                    {"loc", vec2({item->situation.location.x, item->situation.location.y})},
                    {"rot_deg", file_degrees(item->situation.rotation)}};
    out["highlight"] = std::vector<int>(ids.begin(), ids.end());
  }
  return out;
}

struct ReviewServer::Impl {
  httplib::Server server;
};

ReviewServer::ReviewServer(const ServeConfig& config)
    : ReviewServer(config, std::make_shared<ReviewStore>(load_dataset(config.dataset),
                                                         load_scene_pack(config.scenes_dir), config.verdicts)) {}

ReviewServer::ReviewServer(const ServeConfig& config, std::shared_ptr<ReviewStore> store)
    : config_(config), store_(std::move(store)), impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  ReviewStore& st = *store_;
  const std::string origin = config_.cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/scenes", [&st](const httplib::Request&, httplib::Response& res) {
    std::map<std::string, std::size_t> counts;
    for (const auto& qa : st.items()) ++counts[qa.scene_id];
    json out = json::array();
    for (const auto& scene : st.scenes()) {
      out.push_back({{"scene_id", scene.scene_id}, {"objects", scene.objects.size()}, {"items", counts[scene.scene_id]}});
    }
    send_json(res, 200, out);
  });

  server.Get(R"(/api/scenes/([^/]+)/topdown)", [&st](const httplib::Request& req, httplib::Response& res) {
    const Scene* scene = st.scene(req.matches[1]);
    if (scene == nullptr) return send_error(res, 404, "unknown scene " + std::string(req.matches[1]));
    const QAPair* item = nullptr;
    if (req.has_param("qa_id")) {
      item = st.item(req.get_param_value("qa_id"));
      if (item == nullptr) return send_error(res, 404, "unknown qa_id " + req.get_param_value("qa_id"));
      if (item->scene_id != scene->scene_id) return send_error(res, 400, "item belongs to scene " + item->scene_id);
    }
    send_json(res, 200, topdown_payload(*scene, item));
  });

  const std::size_t page_size = config_.page_size;
  server.Get("/api/items", [&st, page_size](const httplib::Request& req, httplib::Response& res) {
    const std::string scene = req.has_param("scene") ? req.get_param_value("scene") : std::string();
    const std::size_t cursor = query_size(req, "cursor", 0);
    const std::size_t limit = std::clamp<std::size_t>(query_size(req, "limit", page_size), 1, 500);
    const bool dataset_order = req.has_param("order") && req.get_param_value("order") == "dataset";
    if (req.has_param("order") && !dataset_order && req.get_param_value("order") != "review") {
      return send_error(res, 400, "order must be review or dataset");
    }
    std::vector<const QAPair*> matches;
    for (const auto& qa : st.items()) {
      if (scene.empty() || qa.scene_id == scene) matches.push_back(&qa);
    }
    if (!dataset_order) {
      // corrected and flagged pairs first
      std::stable_partition(matches.begin(), matches.end(), [](const QAPair* qa) { return needs_review(*qa); });
    }
    json items = json::array();
    for (std::size_t i = cursor; i < matches.size() && i < cursor + limit; ++i) {
      const QAPair& qa = *matches[i];
      const auto verdict = st.latest(qa.qa_id);
      items.push_back({{"qa_id", qa.qa_id},
                       {"scene_id", qa.scene_id},
                       {"category", to_string(qa.category)},
                       {"question", qa.question.flat()},
                       {"answer", qa.answer},
                       {"review", needs_review(qa) ? json(qa.meta.at("review")) : json(nullptr)},
                       {"verdict", verdict ? json(to_string(verdict->verdict)) : json(nullptr)}});
    }
    const std::size_t next = cursor + limit;
    send_json(res, 200,
              {{"items", items},
               {"total", matches.size()},
               {"cursor", cursor},
               {"next_cursor", next < matches.size() ? json(next) : json(nullptr)}});
  });

  server.Get(R"(/api/items/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
    const QAPair* item = st.item(req.matches[1]);
    if (item == nullptr) return send_error(res, 404, "unknown qa_id " + std::string(req.matches[1]));
    json history = json::array();
    for (const auto& v : st.history(item->qa_id)) history.push_back(verdict_to_json(v));
    const auto latest = st.latest(item->qa_id);
    send_json(res, 200,
              {{"item", qa_to_json(*item)},
               {"verdict", latest ? verdict_to_json(*latest) : json(nullptr)},
               {"history", history}});
  });

  server.Post(R"(/api/items/([^/]+)/verdict)", [&st](const httplib::Request& req, httplib::Response& res) {
    const std::string qa_id = req.matches[1];
    if (st.item(qa_id) == nullptr) return send_error(res, 404, "unknown qa_id " + qa_id);
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      return send_json(res, 422, {{"errors", json::array({{{"field", "body"}, {"message", "invalid JSON"}}})}});
    }
    auto errors = validate_verdict_json(body);
    if (body.is_object() && body.contains("qa_id") && body.at("qa_id").is_string() &&
        body.at("qa_id").get<std::string>() != qa_id) {
      errors.push_back({"qa_id", "does not match the item in the URL"});
    }
    if (!errors.empty()) {
      json list = json::array();
      for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
      return send_json(res, 422, {{"errors", list}});
    }
    body["qa_id"] = qa_id;
    ReviewVerdict verdict = verdict_from_json(body);
    const auto status = st.submit(verdict);
    const auto stored = st.latest(qa_id);
    send_json(res, status == ReviewStore::Submit::recorded ? 201 : 200,
              {{"status", status == ReviewStore::Submit::recorded ? "recorded" : "duplicate"},
               {"verdict", verdict_to_json(*stored)}});
  });

  server.Get("/api/progress", [&st](const httplib::Request&, httplib::Response& res) { send_json(res, 200, st.progress()); });

  if (config_.static_dir) {
    if (!server.set_mount_point("/", config_.static_dir->string())) {
      throw Error("static directory not found: " + config_.static_dir->string());
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kStubPage, "text/html"); });
  }

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  if (port == 0) {
    const int bound = server.bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ReviewServer::serve() {
  if (!impl_->server.listen_after_bind()) {
    throw Error("server stopped with an error");
  }
}

void ReviewServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ReviewServer::running() const { return impl_->server.is_running(); }

}  // namespace situgen
