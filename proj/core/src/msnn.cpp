#include "situgen/msnn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <regex>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "bundled_data.hpp"
#include "situgen/error.hpp"
#include "situgen/llm.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kActionNames = {"move_forward", "turn_left", "move_backward", "turn_right"};
constexpr std::array<std::pair<int, int>, 4> kSteps4 = {{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
constexpr std::array<std::pair<int, int>, 8> kSteps8 = {
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
constexpr double kSqrt2 = 1.4142135623730951;

double heuristic(Cell c, const std::vector<Cell>& goals, bool octile) {
  double best = std::numeric_limits<double>::infinity();
  for (const Cell g : goals) {
    const int dr = std::abs(g.row - c.row);
    const int dc = std::abs(g.col - c.col);
    const double h = octile ? std::max(dr, dc) + (kSqrt2 - 1.0) * std::min(dr, dc) : dr + dc;
    best = std::min(best, h);
  }
  return best;
}

const std::map<std::string, std::string, std::less<>>& goal_verbs() {
  static const auto verbs = [] {
    std::map<std::string, std::string, std::less<>> out;
    const json doc = json::parse(data::goal_verbs_json());
    for (const auto& [k, v] : doc.items()) {
      out[k] = v.get<std::string>();
    }
    return out;
  }();
  return verbs;
}

std::optional<std::string> short_color(const ObjectInstance& obj) {
  const auto& c = obj.attributes.get(Attribute::color);
  if (!c) return std::nullopt;
  const auto words = text::split_words(text::lower(*c));
  if (words.empty() || words.size() > 2) return std::nullopt;
  return text::join(words, " ");
}

}  // namespace

std::string_view to_string(NavAction action) { return kActionNames[static_cast<std::size_t>(action)]; }

std::optional<NavAction> nav_action_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == text) return static_cast<NavAction>(i);
  }
  return std::nullopt;
}

std::vector<Cell> plan_path(const OccupancyGrid& grid, Cell start, const std::vector<Cell>& goal_region,
                            const PlanOptions& options) {
  if (!grid.passable(start)) {
    throw Error("plan_path: start cell is not passable");
  }
  if (goal_region.empty()) {
    throw Error("plan_path: empty goal region");
  }
  const bool octile = options.eight_connected;
  std::vector<bool> is_goal(grid.cells.size(), false);
  for (const Cell g : goal_region) {
    if (grid.passable(g)) is_goal[grid.index(g)] = true;
  }

  using Entry = std::tuple<double, double, std::size_t>;  // f, h, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<double> cost(grid.cells.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(grid.cells.size(), std::numeric_limits<std::size_t>::max());
  std::vector<bool> closed(grid.cells.size(), false);

  const std::size_t s = grid.index(start);
  cost[s] = 0.0;
  const double h0 = heuristic(start, goal_region, octile);
  open.emplace(h0, h0, s);

  while (!open.empty()) {
    const auto [f, h, current] = open.top();
    open.pop();
    if (closed[current]) continue;
    closed[current] = true;
    if (is_goal[current]) {
      std::vector<Cell> path;
      for (std::size_t at = current; at != std::numeric_limits<std::size_t>::max(); at = parent[at]) {
        path.push_back(grid.cell_of(at));
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    const Cell c = grid.cell_of(current);
    const auto relax = [&](int dr, int dc, double step) {
      const Cell n{c.row + dr, c.col + dc};
      if (!grid.passable(n)) return;
      const std::size_t ni = grid.index(n);
      if (closed[ni]) return;
      const double g = cost[current] + step;
      if (g < cost[ni]) {
        cost[ni] = g;
        parent[ni] = current;
        const double hn = heuristic(n, goal_region, octile);
        open.emplace(g + hn, hn, ni);
      }
    };
    if (octile) {
      for (const auto& [dr, dc] : kSteps8) {
        const bool diagonal = dr != 0 && dc != 0;
        if (diagonal && (!grid.passable({c.row + dr, c.col}) || !grid.passable({c.row, c.col + dc}))) continue;
        relax(dr, dc, diagonal ? kSqrt2 : 1.0);
      }
    } else {
      for (const auto& [dr, dc] : kSteps4) relax(dr, dc, 1.0);
    }
  }
  throw Error("goal unreachable");
}

std::optional<int> bfs_distance(const OccupancyGrid& grid, Cell start, const std::vector<Cell>& goal_region) {
  if (!grid.passable(start)) return std::nullopt;
  std::vector<bool> is_goal(grid.cells.size(), false);
  for (const Cell g : goal_region) {
    if (grid.passable(g)) is_goal[grid.index(g)] = true;
  }
  std::vector<int> dist(grid.cells.size(), -1);
  std::deque<std::size_t> queue{grid.index(start)};
  dist[queue.front()] = 0;
  while (!queue.empty()) {
    const std::size_t at = queue.front();
    queue.pop_front();
    if (is_goal[at]) return dist[at];
    const Cell c = grid.cell_of(at);
    for (const auto& [dr, dc] : kSteps4) {
      const Cell n{c.row + dr, c.col + dc};
      if (grid.passable(n) && dist[grid.index(n)] < 0) {
        dist[grid.index(n)] = dist[at] + 1;
        queue.push_back(grid.index(n));
      }
    }
  }
  return std::nullopt;
}

std::vector<Cell> goal_region(const OccupancyGrid& grid, const ObjectInstance& goal, double radius) {
  const Footprint fp = goal.footprint();
  std::vector<Cell> out;
  for (const Cell c : grid.passable_cells()) {
    if (fp.distance(grid.center(c)) <= radius) out.push_back(c);
  }
  return out;
}

std::optional<Cell> start_cell(const OccupancyGrid& grid, Vec3 location) {
  const Vec2 p{location.x, location.y};
  if (const auto c = grid.locate(p); c && grid.passable(*c)) {
    return c;
  }
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Cell c : grid.passable_cells()) {
    const double d = distance(grid.center(c), p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double step_angle(double heading, Cell from, Cell to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  if (dr == 0 && dc == 0) {
    throw Error("next_action: zero-length step");
  }
  double theta = to_degrees(std::atan2(static_cast<double>(dr), static_cast<double>(dc)) - heading);
  theta = std::fmod(theta, 360.0);
  if (theta <= -180.0) theta += 360.0;
  if (theta > 180.0) theta -= 360.0;
  theta = std::round(theta * 1e9) / 1e9;
  if (theta <= -180.0) theta = 180.0;
  return theta;
}

NavAction action_for_angle(double theta) {
  if (std::abs(theta) < 45.0) return NavAction::move_forward;
  if (theta >= 45.0 && theta < 135.0) return NavAction::turn_left;
  if (theta > -135.0 && theta <= -45.0) return NavAction::turn_right;
  return NavAction::move_backward;
}

NavAction next_action(const std::vector<Cell>& path, const Situation& start) {
  if (path.size() < 2) {
    throw Error("next_action: path needs at least two cells");
  }
  return action_for_angle(step_angle(start.rotation, path[0], path[1]));
}

json msnn_to_json(const MsnnRecord& r) {
  json path = json::array();
  for (const Cell c : r.path) path.push_back({c.row, c.col});
  return {{"record_id", r.record_id},
          {"scene_id", r.scene_id},
          {"start", situation_to_json(r.start)},
          {"goal", {{"object_id", r.goal.object_id}, {"text", to_json(r.goal.text)}}},
          {"path", path},
          {"action", to_string(r.action)}};
}

MsnnRecord msnn_from_json(const json& value) {
  if (!value.is_object()) throw SchemaError("msnn", "expected an object");
  MsnnRecord r;
  try {
    r.record_id = value.value("record_id", std::string());
    r.scene_id = value.at("scene_id").get<std::string>();
    r.start = situation_from_json(value.at("start"));
    r.goal.object_id = value.at("goal").at("object_id").get<int>();
    r.goal.text = interleaved_from_json(value.at("goal").at("text"));
    for (const auto& c : value.at("path")) {
      r.path.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    }
  } catch (const json::exception& e) {
    throw SchemaError("msnn", e.what());
  }
  const auto action = nav_action_from_string(value.value("action", std::string()));
  if (!action) throw SchemaError("action", "unknown action");
  r.action = *action;
  if (r.path.empty()) throw SchemaError("path", "must be non-empty");
  return r;
}

InterleavedText goal_text(const Scene& scene, const ObjectInstance& obj, const HoiBank& bank, Rng& rng) {
  const std::string token = placeholder_token(obj.label, obj.id);
  const auto color = short_color(obj);
  const std::string object = "the " + (color ? *color + " " : std::string()) + token;
  std::string sentence = "I want to go to " + object + ".";
  if (const auto* templates = bank.find(obj.label); templates != nullptr && !templates->empty()) {
    static const std::regex shape("^I am ([a-z]+) (.*)the <[a-z0-9_ ]+-<ID>-IMG>(.*)$");
    const std::string& tpl = (*templates)[rng.index(templates->size())];
    std::smatch m;
    if (std::regex_match(tpl, m, shape)) {
      const auto& verbs = goal_verbs();
      if (const auto it = verbs.find(m[1].str()); it != verbs.end()) {
        sentence = "I want to " + it->second + " " + m[2].str() + object + m[3].str();
      }
    }
  }
  return interleave(sentence, &scene);
}

MsnnGenerator::MsnnGenerator(const Scene& scene, MsnnConfig config, const HoiBank& bank)
    : scene_(&scene), config_(std::move(config)), bank_(bank), sampler_(scene, config_.sampler) {}

std::vector<const ObjectInstance*> MsnnGenerator::goal_candidates() const {
  std::vector<const ObjectInstance*> out;
  for (const auto& obj : scene_->objects) {
    if (sampler_.is_large_interactable(obj) || sampler_.is_small_interactable(obj)) out.push_back(&obj);
  }
  return out;
}

NavGoal MsnnGenerator::sample_goal(Rng& rng, ChatClient* llm, const std::string& model,
                                   std::optional<int> exclude) const {
  auto candidates = goal_candidates();
  std::erase_if(candidates, [&](const ObjectInstance* o) { return exclude == o->id; });
  if (candidates.empty()) {
    throw Error("scene " + scene_->scene_id + " has no interactable object");
  }
  const ObjectInstance& obj = *candidates[rng.index(candidates.size())];
  NavGoal goal;
  goal.object_id = obj.id;
  if (llm == nullptr) {
    goal.text = goal_text(*scene_, obj, bank_, rng);
    return goal;
  }
  json attributes = json::object();
  for (const auto attr : kAllAttributes) {
    if (const auto& v = obj.attributes.get(attr)) attributes[std::string(attribute_phrase(attr))] = *v;
  }
  const json description = {{"object_name", placeholder_token(obj.label, obj.id)}, {"attributes", attributes}};
  ChatRequest request;
  request.model = model;
  request.messages.push_back(ChatMessage::text(
      "user", "Please generate a sentence about doing something with the object " +
                  placeholder_token(obj.label, obj.id) +
                  " based on the following information. Object attributes are given in the following json: " +
                  description.dump() +
                  ". You can select part of the given information to generate the sentence. The generated sentence "
                  "should be natural and keep the object token unchanged. For example: result: \"I want to open the "
                  "white metal <refrigerator-4-IMG>.\" The generated result should be one sentence in the format "
                  "result: \"...\"."));
  std::string reply = llm->complete(request);
  static const std::regex result("result:\\s*\"([^\"]+)\"", std::regex::icase);
  std::smatch m;
  if (std::regex_search(reply, m, result)) reply = m[1].str();
  goal.text = interleave(text::trim(reply), scene_);
  return goal;
}

std::optional<MsnnRecord> MsnnGenerator::generate(Rng& rng, ChatClient* llm, const std::string& model) const {
  const OccupancyGrid& grid = sampler_.grid();
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    const Interaction type = kAllInteractions[rng.index(kAllInteractions.size())];
    Situation start;
    try {
      start = canonicalized(sampler_.sample(type, rng));
    } catch (const Error&) {
      continue;
    }
    NavGoal goal;
    try {
      goal = sample_goal(rng, llm, model, start.anchor_object);
    } catch (const Error&) {
      continue;
    }
    const ObjectInstance& target = *scene_->find(goal.object_id);
    const auto region = goal_region(grid, target, config_.goal_radius);
    const auto from = start_cell(grid, start.location);
    if (region.empty() || !from || std::find(region.begin(), region.end(), *from) != region.end()) {
      continue;
    }
    std::vector<Cell> path;
    try {
      path = plan_path(grid, *from, region, config_.plan);
    } catch (const Error&) {
      continue;
    }
    start.action_text = render_action_description(start, *scene_, bank_, rng);
    start.location_text =
        render_location_description(*scene_, start, std::max(1, config_.location_objects), nullptr, config_.relations);
    MsnnRecord record;
    record.scene_id = scene_->scene_id;
    record.start = std::move(start);
    record.goal = std::move(goal);
    record.path = std::move(path);
    record.action = next_action(record.path, record.start);
    return record;
  }
  return std::nullopt;
}

std::vector<std::string> MsnnGenerator::check(const MsnnRecord& record) const {
  std::vector<std::string> problems;
  const OccupancyGrid& grid = sampler_.grid();
  if (record.path.empty()) {
    return {"empty path"};
  }
  const auto from = start_cell(grid, record.start.location);
  if (!from || *from != record.path.front()) {
    problems.push_back("path does not begin at the start cell");
  }
  const bool octile = config_.plan.eight_connected;
  for (std::size_t i = 0; i < record.path.size(); ++i) {
    const Cell c = record.path[i];
    if (!grid.passable(c)) {
      problems.push_back("path cell " + std::to_string(i) + " is not passable");
    }
    if (i > 0) {
      const int dr = std::abs(c.row - record.path[i - 1].row);
      const int dc = std::abs(c.col - record.path[i - 1].col);
      const bool adjacent = octile ? std::max(dr, dc) == 1 : dr + dc == 1;
      if (!adjacent) problems.push_back("path step " + std::to_string(i) + " is not between neighbouring cells");
    }
  }
  const ObjectInstance* target = scene_->find(record.goal.object_id);
  if (target == nullptr) {
    problems.push_back("goal object " + std::to_string(record.goal.object_id) + " does not exist");
    return problems;
  }
  const auto region = goal_region(grid, *target, config_.goal_radius);
  if (std::find(region.begin(), region.end(), record.path.back()) == region.end()) {
    problems.push_back("path does not end in the goal region");
  }
  if (!octile && from) {
    const auto best = bfs_distance(grid, *from, region);
    if (!best || static_cast<std::size_t>(*best) + 1 != record.path.size()) {
      problems.push_back("path is not a shortest path");
    }
  }
  if (record.path.size() >= 2 && next_action(record.path, record.start) != record.action) {
    problems.push_back("action does not match the first path step");
  }
  if (!has_referential_integrity(record.goal.text, *scene_)) {
    problems.push_back("goal text references a missing object");
  }
  return problems;
}

}  // namespace situgen
