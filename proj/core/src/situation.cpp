#include "situgen/situation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bundled_data.hpp"
#include "situgen/error.hpp"
#include "situgen/llm.hpp"
#include "text_util.hpp"

namespace situgen {

using nlohmann::json;

namespace {

constexpr std::string_view kSlotOpen = "-<ID>-IMG>";

Situation make_situation(Vec2 xy, double z, double rotation, Interaction interaction, std::optional<int> anchor) {
  Situation s;
  s.location = {xy.x, xy.y, z};
  s.rotation = wrap_two_pi(rotation);
  s.interaction = interaction;
  s.anchor_object = anchor;
  return s;
}

}  // namespace

// --- enums / json -------------------------------------------------------------

std::string_view to_string(Interaction interaction) {
  switch (interaction) {
    case Interaction::standing: return "standing";
    case Interaction::sitting: return "sitting";
    case Interaction::interact_large: return "interact_large";
    case Interaction::interact_small: return "interact_small";
  }
  return "standing";
}

std::optional<Interaction> interaction_from_string(std::string_view text) {
  for (const Interaction i : kAllInteractions) {
    if (to_string(i) == text) {
      return i;
    }
  }
  return std::nullopt;
}

json situation_to_json(const Situation& s) {
  return {{"loc", {s.location.x, s.location.y, s.location.z}},
          {"rot_deg", file_degrees(s.rotation)},
          {"interaction", std::string(to_string(s.interaction))},
          {"anchor_object", s.anchor_object ? json(*s.anchor_object) : json(nullptr)},
          {"action_text", to_json(s.action_text)},
          {"location_text", to_json(s.location_text)}};
}

Situation situation_from_json(const json& value) {
  if (!value.is_object() || !value.contains("loc") || !value.contains("rot_deg")) {
    throw SchemaError("situation", "expected {\"loc\", \"rot_deg\", ...}");
  }
  Situation s;
  const json& loc = value.at("loc");
  if (!loc.is_array() || loc.size() != 3) {
    throw SchemaError("situation.loc", "expected [x, y, z]");
  }
  s.location = {loc[0].get<double>(), loc[1].get<double>(), loc[2].get<double>()};
  s.rotation = file_radians(value.at("rot_deg").get<double>());
  if (value.contains("interaction")) {
    const auto text = value.at("interaction").get<std::string>();
    const auto interaction = interaction_from_string(text);
    if (!interaction) {
      throw SchemaError("situation.interaction", "unknown interaction '" + text + "'");
    }
    s.interaction = *interaction;
  }
  if (value.contains("anchor_object") && !value.at("anchor_object").is_null()) {
    s.anchor_object = value.at("anchor_object").get<int>();
  }
  if (value.contains("action_text")) {
    s.action_text = interleaved_from_json(value.at("action_text"));
  }
  if (value.contains("location_text")) {
    s.location_text = interleaved_from_json(value.at("location_text"));
  }
  return s;
}

Situation canonicalized(Situation s) {
  s.rotation = file_radians(file_degrees(s.rotation));
  return s;
}

// --- HOI bank ------------------------------------------------------------------

std::size_t count_template_slots(std::string_view sentence) {
  std::size_t count = 0;
  for (auto pos = sentence.find(kSlotOpen); pos != std::string_view::npos;
       pos = sentence.find(kSlotOpen, pos + 1)) {
    ++count;
  }
  return count;
}

void HoiBank::add(const std::string& label, const std::string& sentence) {
  if (!is_valid_label(label)) {
    throw SchemaError("hoi_bank." + label, "invalid label");
  }
  if (count_template_slots(sentence) != 1) {
    throw SchemaError("hoi_bank." + label, "template must contain exactly one <label-<ID>-IMG> slot: " + sentence);
  }
  templates_[label].push_back(sentence);
}

HoiBank HoiBank::from_json(const json& value) {
  if (!value.is_object()) {
    throw SchemaError("hoi_bank", "expected a map of label -> [templates]");
  }
  HoiBank bank;
  for (const auto& [label, list] : value.items()) {
    if (!list.is_array()) {
      throw SchemaError("hoi_bank." + label, "expected an array of strings");
    }
    for (const auto& t : list) {
      bank.add(label, t.get<std::string>());
    }
  }
  return bank;
}

HoiBank HoiBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open HOI bank " + path.string());
  }
  return from_json(json::parse(in));
}

HoiBank HoiBank::bundled() { return from_json(json::parse(data::hoi_bank_json())); }

const std::vector<std::string>* HoiBank::find(std::string_view label) const {
  const auto it = templates_.find(label);
  return it == templates_.end() ? nullptr : &it->second;
}

std::size_t HoiBank::template_count() const {
  std::size_t n = 0;
  for (const auto& [_, list] : templates_) {
    n += list.size();
  }
  return n;
}

json HoiBank::to_json() const {
  json out = json::object();
  for (const auto& [label, list] : templates_) {
    out[label] = list;
  }
  return out;
}

// --- sampler ---------------------------------------------------------------------

SituationSampler::SituationSampler(const Scene& scene, SamplerConfig config)
    : scene_(&scene), config_(config), grid_(navigation_grid(scene, config.raster)) {
  has_interaction_flags_ = std::any_of(scene.objects.begin(), scene.objects.end(), [](const auto& o) {
    return o.has(ObjectFlag::large_interactable) || o.has(ObjectFlag::small_interactable);
  });
}

bool SituationSampler::is_large_interactable(const ObjectInstance& obj) const {
  if (has_interaction_flags_) {
    return obj.has(ObjectFlag::large_interactable);
  }
  return obj.volume() >= config_.large_volume_threshold;
}

bool SituationSampler::is_small_interactable(const ObjectInstance& obj) const {
  if (has_interaction_flags_) {
    return obj.has(ObjectFlag::small_interactable);
  }
  return obj.volume() < config_.large_volume_threshold;
}

std::vector<const ObjectInstance*> SituationSampler::sittable_objects() const {
  std::vector<const ObjectInstance*> out;
  for (const auto& o : scene_->objects) {
    if (o.has(ObjectFlag::sittable) && o.front_normal) {
      out.push_back(&o);
    }
  }
  return out;
}

std::vector<const ObjectInstance*> SituationSampler::large_interactables() const {
  std::vector<const ObjectInstance*> out;
  for (const auto& o : scene_->objects) {
    if (is_large_interactable(o) && o.interactive_part) {
      out.push_back(&o);
    }
  }
  return out;
}

std::vector<const ObjectInstance*> SituationSampler::small_interactables() const {
  std::vector<const ObjectInstance*> out;
  for (const auto& o : scene_->objects) {
    if (is_small_interactable(o)) {
      out.push_back(&o);
    }
  }
  return out;
}

Situation SituationSampler::standing(Rng& rng) const {
  const auto cells = grid_.passable_cells();
  if (cells.empty()) {
    throw Error("scene has no standable area");
  }
  const Cell c = cells[rng.index(cells.size())];
  const double rotation = rng.uniform() * kTwoPi;
  return make_situation(grid_.center(c), scene_->floor.z, rotation, Interaction::standing, std::nullopt);
}

Situation SituationSampler::sitting(Rng& rng) const {
  const auto seats = sittable_objects();
  if (seats.empty()) {
    throw Error("scene has no sittable object with a front normal");
  }
  const ObjectInstance& seat = *seats[rng.index(seats.size())];
  const Footprint fp = seat.footprint();
  const double keep = 1.0 - config_.seat_shrink;
  const double u = rng.uniform(-1.0, 1.0) * fp.half.x * keep;
  const double v = rng.uniform(-1.0, 1.0) * fp.half.y * keep;
  const Vec2 xy = fp.center + rotate({u, v}, fp.yaw);
  return make_situation(xy, seat.top(), heading_of(*seat.front_normal), Interaction::sitting, seat.id);
}

std::vector<Cell> SituationSampler::large_interaction_cells(const ObjectInstance& obj) const {
  std::vector<Cell> out;
  if (!obj.interactive_part) {
    return out;
  }
  const Vec2 part = obj.interactive_part->center.xy();
  const Vec2 normal = obj.interactive_part->normal;
  for (const Cell c : grid_.passable_cells()) {
    const Vec2 p = grid_.center(c);
    if (distance(p, part) <= config_.interaction_radius && dot(p - part, normal) > 0.0) {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Cell> SituationSampler::small_interaction_cells(const ObjectInstance& obj) const {
  std::vector<Cell> out;
  const Vec2 center = obj.centroid.xy();
  for (const Cell c : grid_.passable_cells()) {
    if (distance(grid_.center(c), center) <= config_.interaction_radius) {
      out.push_back(c);
    }
  }
  return out;
}

Situation SituationSampler::interact_large(const ObjectInstance& obj, Rng& rng) const {
  if (!obj.interactive_part) {
    throw Error("object " + std::to_string(obj.id) + " has no interactive part");
  }
  if (!is_large_interactable(obj)) {
    throw Error("object " + std::to_string(obj.id) + " is not a large interactable");
  }
  const auto cells = large_interaction_cells(obj);
  if (cells.empty()) {
    throw Error("object unreachable");
  }
  const Vec2 p = grid_.center(cells[rng.index(cells.size())]);
  return make_situation(p, scene_->floor.z, heading_of(-obj.interactive_part->normal),
                        Interaction::interact_large, obj.id);
}

Situation SituationSampler::interact_small(const ObjectInstance& obj, Rng& rng) const {
  if (!is_small_interactable(obj)) {
    throw Error("object " + std::to_string(obj.id) + " is not a small interactable");
  }
  const auto cells = small_interaction_cells(obj);
  if (cells.empty()) {
    throw Error("object unreachable");
  }
  const Vec2 p = grid_.center(cells[rng.index(cells.size())]);
  return make_situation(p, scene_->floor.z, heading_of(obj.centroid.xy() - p), Interaction::interact_small,
                        obj.id);
}

Situation SituationSampler::sample(Interaction interaction, Rng& rng) const {
  switch (interaction) {
    case Interaction::standing: return standing(rng);
    case Interaction::sitting: return sitting(rng);
    case Interaction::interact_large: {
      std::vector<const ObjectInstance*> ok;
      for (const auto* o : large_interactables()) {
        if (!large_interaction_cells(*o).empty()) {
          ok.push_back(o);
        }
      }
      if (ok.empty()) {
        throw Error("no reachable large interactable object");
      }
      return interact_large(*ok[rng.index(ok.size())], rng);
    }
    case Interaction::interact_small: {
      std::vector<const ObjectInstance*> ok;
      for (const auto* o : small_interactables()) {
        if (!small_interaction_cells(*o).empty()) {
          ok.push_back(o);
        }
      }
      if (ok.empty()) {
        throw Error("no reachable small interactable object");
      }
      return interact_small(*ok[rng.index(ok.size())], rng);
    }
  }
  throw Error("unknown interaction");
}

Situation sample_standing(const Scene& scene, Rng& rng, const SamplerConfig& config) {
  return SituationSampler(scene, config).standing(rng);
}

Situation sample_sitting(const Scene& scene, Rng& rng, const SamplerConfig& config) {
  return SituationSampler(scene, config).sitting(rng);
}

Situation sample_interact_large(const Scene& scene, const ObjectInstance& obj, Rng& rng,
                                const SamplerConfig& config) {
  return SituationSampler(scene, config).interact_large(obj, rng);
}

Situation sample_interact_small(const Scene& scene, const ObjectInstance& obj, Rng& rng,
                                const SamplerConfig& config) {
  return SituationSampler(scene, config).interact_small(obj, rng);
}

// --- descriptions ----------------------------------------------------------------

InterleavedText render_action_description(const Situation& s, const Scene& scene, const HoiBank& bank,
                                          Rng& rng) {
  InterleavedText out;
  if (s.interaction == Interaction::standing) {
    out.append_text("I am standing on the floor.");
    return out;
  }
  if (!s.anchor_object) {
    throw Error("situation of type " + std::string(to_string(s.interaction)) + " has no anchor object");
  }
  const ObjectInstance* anchor = scene.find(*s.anchor_object);
  if (anchor == nullptr) {
    throw Error("anchor object " + std::to_string(*s.anchor_object) + " not in scene " + scene.scene_id);
  }
  if (s.interaction == Interaction::sitting) {
    out.append_text("I am sitting on the ");
    out.append_image(anchor->label, anchor->id, anchor->image_ref);
    out.append_text(".");
    return out;
  }
  const auto* templates = bank.find(anchor->label);
  if (templates == nullptr || templates->empty()) {
    out.append_text("I am interacting with the ");
    out.append_image(anchor->label, anchor->id, anchor->image_ref);
    out.append_text(".");
    return out;
  }
  const std::string& sentence = (*templates)[rng.index(templates->size())];
  const auto slot_end = sentence.find(kSlotOpen);
  const auto slot_begin = sentence.rfind('<', slot_end);
  out.append_text(std::string_view(sentence).substr(0, slot_begin));
  out.append_image(anchor->label, anchor->id, anchor->image_ref);
  out.append_text(std::string_view(sentence).substr(slot_end + kSlotOpen.size()));
  return out;
}

std::string band_phrase(DistanceBand band) {
  switch (band) {
    case DistanceBand::near: return "near";
    case DistanceBand::middle: return "at a middle distance";
    case DistanceBand::far: return "far away";
  }
  return "near";
}

namespace {

std::vector<AgentEdge> nearest_edges(const Scene& scene, const Situation& s, int k, const RelationConfig& config) {
  auto edges = compute_agent_edges(scene, s.pose(), config);
  std::erase_if(edges, [&](const AgentEdge& e) { return s.anchor_object && e.object == *s.anchor_object; });
  std::sort(edges.begin(), edges.end(), [](const AgentEdge& a, const AgentEdge& b) {
    return a.distance_m != b.distance_m ? a.distance_m < b.distance_m : a.object < b.object;
  });
  if (k >= 0 && static_cast<std::size_t>(k) < edges.size()) {
    edges.resize(static_cast<std::size_t>(k));
  }
  return edges;
}

}  // namespace

InterleavedText render_location_description(const Scene& scene, const Situation& s, int k, ChatClient* llm,
                                            const RelationConfig& config, const std::string& model) {
  if (k < 1) {
    throw Error("render_location_description: k must be >= 1");
  }
  const auto edges = nearest_edges(scene, s, k, config);
  if (llm == nullptr) {
    InterleavedText out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const ObjectInstance& obj = *scene.find(edges[i].object);
      out.append_text(i == 0 ? "There is " : " There is ");
      out.append_text(text::indefinite_article(obj.label));
      out.append_text(" ");
      if (obj.image_ref) {
        out.append_image(obj.label, obj.id, obj.image_ref);
      } else {
        out.append_text(obj.label);
      }
      out.append_text(" at my " + std::to_string(edges[i].clock) + " o'clock, " + band_phrase(edges[i].band) + ".");
    }
    return out;
  }

  std::ostringstream relations;
  relations.setf(std::ios::fixed);
  relations.precision(2);
  for (const auto& e : edges) {
    const ObjectInstance& obj = *scene.find(e.object);
    relations << placeholder_token(obj.label, obj.id) << ": distance " << e.distance_m << " m ("
              << to_string(e.band) << "), " << to_string(e.coarse) << ", " << e.clock << " o'clock\n";
  }
  ChatRequest request;
  request.model = model;
  request.messages.push_back(ChatMessage::text(
      "user",
      "You are an agent standing in an indoor room. Using only the spatial relations listed below, write one "
      "or two natural first-person sentences that describe where you are relative to the surrounding "
      "objects. Mention each object exactly by its token (for example <chair-3-IMG>), keep the clock "
      "directions, and do not invent objects.\n\nRelations:\n" +
          relations.str()));
  return interleave(text::trim(llm->complete(request)), &scene);
}

}  // namespace situgen
