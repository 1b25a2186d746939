#include "situgen/qa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "bundled_data.hpp"
#include "situgen/error.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kCategoryNames = {
    "counting", "existence", "attribute", "description", "spatial", "navigation", "refer", "room_type", "affordance"};
constexpr std::array<std::string_view, 3> kProvenanceNames = {"template", "llm", "augmented"};

std::vector<std::string> string_list(const json& value, const std::string& field) {
  if (!value.is_array()) {
    throw SchemaError(field, "expected an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw SchemaError(field, "expected an array of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(Category category) { return kCategoryNames[static_cast<std::size_t>(category)]; }

std::optional<Category> category_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == text) {
      return kAllCategories[i];
    }
  }
  return std::nullopt;
}

std::string_view to_string(Provenance provenance) { return kProvenanceNames[static_cast<std::size_t>(provenance)]; }

std::optional<Provenance> provenance_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kProvenanceNames.size(); ++i) {
    if (kProvenanceNames[i] == text) {
      return static_cast<Provenance>(i);
    }
  }
  return std::nullopt;
}

json qa_to_json(const QAPair& qa) {
  json meta = json::object();
  for (const auto& [k, v] : qa.meta) {
    meta[k] = v;
  }
  return {{"qa_id", qa.qa_id},
          {"scene_id", qa.scene_id},
          {"situation_id", qa.situation_id},
          {"situation", situation_to_json(qa.situation)},
          {"question", to_json(qa.question)},
          {"answer", qa.answer},
          {"category", to_string(qa.category)},
          {"provenance", to_string(qa.provenance)},
          {"meta", meta}};
}

QAPair qa_from_json(const json& value) {
  if (!value.is_object()) {
    throw SchemaError("qa", "expected an object");
  }
  const auto str = [&](const char* key, bool required) -> std::string {
    const auto it = value.find(key);
    if (it == value.end()) {
      if (required) throw SchemaError(key, "missing field");
      return {};
    }
    if (!it->is_string()) throw SchemaError(key, "expected a string");
    return it->get<std::string>();
  };
  QAPair qa;
  qa.qa_id = str("qa_id", false);
  qa.scene_id = str("scene_id", true);
  qa.situation_id = str("situation_id", false);
  if (!value.contains("situation")) throw SchemaError("situation", "missing field");
  qa.situation = situation_from_json(value.at("situation"));
  if (!value.contains("question")) throw SchemaError("question", "missing field");
  qa.question = interleaved_from_json(value.at("question"));
  qa.answer = str("answer", true);
  if (qa.answer.empty()) throw SchemaError("answer", "must be non-empty");
  const auto category = category_from_string(str("category", true));
  if (!category) throw SchemaError("category", "unknown category");
  qa.category = *category;
  const auto provenance = provenance_from_string(str("provenance", true));
  if (!provenance) throw SchemaError("provenance", "unknown provenance");
  qa.provenance = *provenance;
  if (const auto it = value.find("meta"); it != value.end()) {
    if (!it->is_object()) throw SchemaError("meta", "expected an object");
    for (const auto& [k, v] : it->items()) {
      qa.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return qa;
}

// --- resources -------------------------------------------------------------------

WildVocab WildVocab::bundled() { return {string_list(json::parse(data::wild_vocab_json()), "wild_vocab")}; }

WildVocab WildVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open wild vocabulary " + path.string());
  }
  return {string_list(json::parse(in), "wild_vocab")};
}

bool WildVocab::contains(std::string_view label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

const QaResources& QaResources::bundled() {
  static const QaResources resources = [] {
    QaResources r;
    for (const auto& rule : json::parse(data::room_rules_json())) {
      r.room_rules.push_back({rule.at("room").get<std::string>(), string_list(rule.at("labels"), "room_rules")});
    }
    for (const auto& rule : json::parse(data::affordance_rules_json())) {
      r.affordances.push_back(
          {rule.at("purpose").get<std::string>(), string_list(rule.at("labels"), "affordance_rules")});
    }
    r.colors = string_list(json::parse(data::colors_json()), "colors");
    for (const auto& seed : json::parse(data::seed_examples_json())) {
      const auto category = category_from_string(seed.at("category").get<std::string>());
      if (!category) {
        throw Error("bundled seed example has an unknown category");
      }
      r.seeds.push_back({seed.at("graph").get<std::string>(), seed.at("question").get<std::string>(),
                         seed.at("answer").get<std::string>(), *category});
    }
    r.wild = WildVocab::bundled();
    return r;
  }();
  return resources;
}

bool QaResources::is_color(std::string_view word) const {
  return std::find(colors.begin(), colors.end(), word) != colors.end();
}

// --- grammar ---------------------------------------------------------------------

namespace {

const std::string kRegionAlt =
    "(in the room|in the scene|in this room|on my left|to my left|on my right|to my right|in front of me|"
    "ahead of me|behind me|(?:at|on) my (\\d{1,2}) o'clock)";
const std::string kDirectionAlt = "(on my left|on my right|in front of me|behind me)";
const std::string kToken = "(<[a-z0-9_ ]+-[0-9]+-IMG>)";

std::optional<Region> region_from_phrase(const std::string& phrase, const std::string& hour) {
  Region r;
  if (phrase.empty() || phrase == "in the room" || phrase == "in the scene" || phrase == "in this room") {
    return r;
  }
  if (!hour.empty()) {
    const int h = std::stoi(hour);
    if (h < 1 || h > 12) {
      return std::nullopt;
    }
    r.kind = RegionKind::clock;
    r.clock = h;
    return r;
  }
  r.kind = RegionKind::direction;
  if (phrase == "on my left" || phrase == "to my left") {
    r.direction = Direction::left;
  } else if (phrase == "on my right" || phrase == "to my right") {
    r.direction = Direction::right;
  } else if (phrase == "in front of me" || phrase == "ahead of me") {
    r.direction = Direction::front;
  } else if (phrase == "behind me") {
    r.direction = Direction::behind;
  } else {
    return std::nullopt;
  }
  return r;
}

/// Lowercase, single spaces, trailing punctuation removed.
std::string normalize_question(std::string_view question) {
  std::string s = text::squash(question);
  while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == '!' || s.back() == ' ')) {
    s.pop_back();
  }
  return s;
}

std::set<std::string> graph_labels(const SituatedGraph& graph) {
  std::set<std::string> out;
  for (const auto& [id, node] : graph.nodes) {
    out.insert(node.label);
  }
  return out;
}

/// Resolves "<color> <label>" against the graph's labels (singular or plural).
std::optional<ObjectQuery> resolve_noun_phrase(const std::string& np, const SituatedGraph& graph,
                                               const QaResources& resources) {
  if (np.empty()) {
    return std::nullopt;
  }
  const auto labels = graph_labels(graph);
  const auto match = [&](const std::string& phrase) -> std::optional<std::string> {
    for (const auto& l : labels) {
      if (phrase == l || phrase == text::pluralize(l)) {
        return l;
      }
    }
    return std::nullopt;
  };
  ObjectQuery q;
  if (auto l = match(np)) {
    q.label = *l;
    return q;
  }
  const auto words = text::split_words(np);
  std::string bare = np;
  if (words.size() >= 2 && resources.is_color(words[0])) {
    q.color = words[0];
    bare = text::join(std::vector<std::string>(words.begin() + 1, words.end()), " ");
    if (auto l = match(bare)) {
      q.label = *l;
      return q;
    }
  }
  q.label_in_graph = false;
  if (!resources.wild.contains(bare)) {
    for (const auto& w : resources.wild.labels) {
      if (text::pluralize(w) == bare) {
        bare = w;
        break;
      }
    }
  }
  q.label = bare;
  return q;
}

bool color_matches(const std::string& object_color, const std::string& wanted) {
  const auto words = text::split_words(text::lower(object_color));
  for (auto w : words) {
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.back()))) w.pop_back();
    if (w == wanted) return true;
  }
  return false;
}

const ObjectInstance* node_for_token(const std::string& token, const SituatedGraph& graph) {
  const auto ref = parse_placeholder(token);
  if (!ref) {
    return nullptr;
  }
  const ObjectInstance* node = graph.node(ref->id);
  return node != nullptr && node->label == ref->label ? node : nullptr;
}

bool has_edge(const SituatedGraph& graph, RelationKind kind, int src, int dst) {
  const auto test = [&](const Edge& e) { return e.kind == kind && e.src == src && e.dst == dst; };
  return std::any_of(graph.static_edges.begin(), graph.static_edges.end(), test) ||
         std::any_of(graph.situated_edges.begin(), graph.situated_edges.end(), test);
}

struct PhraseRule {
  RelationKind kind;
  bool reversed;  // edge reads (b, a)
  std::string_view phrase;
};

constexpr std::array<PhraseRule, 12> kPhraseRules = {{
    {RelationKind::support, true, "on top of"},
    {RelationKind::inside, true, "inside"},
    {RelationKind::support, false, "supporting"},
    {RelationKind::inside, false, "containing"},
    {RelationKind::above, false, "above"},
    {RelationKind::below, false, "below"},
    {RelationKind::left, false, "to the left of"},
    {RelationKind::right, false, "to the right of"},
    {RelationKind::front, false, "in front of"},
    {RelationKind::behind, false, "behind"},
    {RelationKind::near, false, "near"},
    {RelationKind::far, false, "far from"},
}};

std::optional<std::string> relation_phrase(const SituatedGraph& graph, int a, int b) {
  for (const auto& rule : kPhraseRules) {
    if (rule.reversed ? has_edge(graph, rule.kind, b, a) : has_edge(graph, rule.kind, a, b)) {
      return std::string(rule.phrase);
    }
  }
  return std::nullopt;
}

std::vector<int> between_objects(const SituatedGraph& graph, int b, int c) {
  if (b > c) std::swap(b, c);
  std::vector<int> out;
  for (const auto& e : graph.static_edges) {
    if (e.kind == RelationKind::between && e.dst == b && e.extra == c) {
      out.push_back(e.src);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string sentence(std::string s) {
  s = text::trim(s);
  if (!s.empty() && s.back() != '.' && s.back() != '!' && s.back() != '?') s += '.';
  return capitalize(s);
}

std::optional<std::string> describe(const ObjectInstance& obj) {
  const auto& a = obj.attributes;
  std::vector<std::string> parts;
  for (const auto attr : kAllAttributes) {
    if (const auto& d = a.get_descriptive(attr)) {
      parts.push_back(sentence(*d));
    }
  }
  if (!parts.empty()) {
    return text::join(parts, " ");
  }
  if (a.empty()) {
    return std::nullopt;
  }
  const auto get = [&](Attribute attr) -> const std::optional<std::string>& { return a.get(attr); };
  std::string head = get(Attribute::color) ? *get(Attribute::color) + " " + obj.label : obj.label;
  if (get(Attribute::material)) head += " made of " + *get(Attribute::material);
  parts.push_back(sentence(head));
  if (get(Attribute::shape3d)) parts.push_back("Its 3D shape is " + *get(Attribute::shape3d) + ".");
  if (get(Attribute::usage)) parts.push_back("It is used for " + *get(Attribute::usage) + ".");
  if (get(Attribute::texture)) parts.push_back("Its texture is " + *get(Attribute::texture) + ".");
  if (get(Attribute::structure)) parts.push_back("Its structure is " + *get(Attribute::structure) + ".");
  if (get(Attribute::state)) parts.push_back("It is " + *get(Attribute::state) + ".");
  return text::join(parts, " ");
}

std::string_view turn_phrase(Direction d) {
  switch (d) {
    case Direction::front: return "keep facing forward";
    case Direction::left: return "turn left";
    case Direction::right: return "turn right";
    case Direction::behind: return "turn around";
  }
  return "keep facing forward";
}

std::string_view walk_phrase(DistanceBand band) {
  switch (band) {
    case DistanceBand::near: return "walk a few steps";
    case DistanceBand::middle: return "walk to the middle distance";
    case DistanceBand::far: return "walk a long way";
  }
  return "walk a few steps";
}

const RoomRule* best_room(const SituatedGraph& graph, const QaResources& resources) {
  const auto labels = graph_labels(graph);
  const RoomRule* best = nullptr;
  std::size_t best_hits = 0;
  for (const auto& rule : resources.room_rules) {
    const auto hits = static_cast<std::size_t>(
        std::count_if(rule.labels.begin(), rule.labels.end(), [&](const std::string& l) { return labels.count(l) > 0; }));
    if (hits > best_hits) {
      best = &rule;
      best_hits = hits;
    }
  }
  return best;
}

/// Nearest non-anchor object serving `rule`, ties to the lower id.
const AgentEdge* affordance_target(const SituatedGraph& graph, const AffordanceRule& rule) {
  const AgentEdge* best = nullptr;
  for (const auto& e : graph.agent_edges) {
    if (graph.situation.anchor_object == e.object) continue;
    const ObjectInstance* node = graph.node(e.object);
    if (node == nullptr) continue;
    if (std::find(rule.labels.begin(), rule.labels.end(), node->label) == rule.labels.end()) continue;
    if (best == nullptr || e.distance_m < best->distance_m ||
        (e.distance_m == best->distance_m && e.object < best->object)) {
      best = &e;
    }
  }
  return best;
}

std::string descriptor_phrase(const ObjectQuery& q) {
  std::string out = q.color ? *q.color + " " + q.label : q.label;
  if (q.region.kind != RegionKind::room) {
    out += " " + region_phrase(q.region);
  }
  return out;
}

std::optional<std::string> refer_answer(const SituatedGraph& graph, int target, const std::string& relation) {
  const RelationKind kind = relation == "on" ? RelationKind::support : RelationKind::inside;
  std::vector<int> children;
  for (const auto& e : graph.static_edges) {
    if (e.kind == kind && e.src == target) children.push_back(e.dst);
  }
  std::sort(children.begin(), children.end());
  if (children.empty()) {
    return std::nullopt;
  }
  std::vector<std::string> labels;
  for (const int id : children) labels.push_back(graph.node(id)->label);
  return text::list_sentence(labels);
}

std::optional<int> unique_match(const ObjectQuery& q, const SituatedGraph& graph) {
  const auto m = match_query(q, graph);
  if (!m || m->size() != 1) {
    return std::nullopt;
  }
  return m->front();
}

}  // namespace

std::string region_phrase(const Region& region) {
  switch (region.kind) {
    case RegionKind::room: return "in the room";
    case RegionKind::clock: return "at my " + std::to_string(region.clock) + " o'clock";
    case RegionKind::direction:
      switch (region.direction) {
        case Direction::left: return "on my left";
        case Direction::right: return "on my right";
        case Direction::front: return "in front of me";
        case Direction::behind: return "behind me";
      }
  }
  return "in the room";
}

std::optional<std::vector<int>> match_query(const ObjectQuery& query, const SituatedGraph& graph) {
  std::vector<int> out;
  for (const auto& [id, node] : graph.nodes) {
    if (node.label != query.label) continue;
    if (query.region.kind != RegionKind::room) {
      if (graph.situation.anchor_object == id) continue;
      const AgentEdge* e = graph.agent_edge(id);
      if (e == nullptr) continue;
      if (query.region.kind == RegionKind::direction && e->coarse != query.region.direction) continue;
      if (query.region.kind == RegionKind::clock && e->clock != query.region.clock) continue;
    }
    if (query.color) {
      const auto& c = node.attributes.get(Attribute::color);
      if (!c) return std::nullopt;
      if (!color_matches(*c, *query.color)) continue;
    }
    out.push_back(id);
  }
  return out;
}

std::string render_counting_question(const ObjectQuery& query) {
  const std::string np = (query.color ? *query.color + " " : "") + text::pluralize(query.label);
  if (query.region.kind == RegionKind::room) {
    return "How many " + np + " are there in the room?";
  }
  return "How many " + np + " are " + region_phrase(query.region) + "?";
}

std::string render_existence_question(const ObjectQuery& query, bool can_i_find) {
  const std::string np = (query.color ? *query.color + " " : "") + query.label;
  const std::string lead = can_i_find ? "Can I find " : "Is there ";
  return lead + std::string(text::indefinite_article(np)) + " " + np + " " + region_phrase(query.region) + "?";
}

std::optional<ObjectQuery> parse_counting_question(std::string_view question, const SituatedGraph& graph,
                                                   const QaResources& resources) {
  static const std::regex with_region("^how many (.+?) (?:are|is) (?:there |located )?" + kRegionAlt + "$");
  static const std::regex bare("^how many (.+?) (?:are there|can i find|can i see|do i see|do you see)$");
  const std::string q = normalize_question(question);
  std::smatch m;
  std::optional<ObjectQuery> out;
  if (std::regex_match(q, m, with_region)) {
    const auto region = region_from_phrase(m[2].str(), m[3].str());
    if (!region) return std::nullopt;
    out = resolve_noun_phrase(m[1].str(), graph, resources);
    if (out) out->region = *region;
  } else if (std::regex_match(q, m, bare)) {
    out = resolve_noun_phrase(m[1].str(), graph, resources);
  }
  return out;
}

std::optional<ObjectQuery> parse_existence_question(std::string_view question, const SituatedGraph& graph,
                                                    const QaResources& resources) {
  static const std::string lead =
      "^(?:is there|are there|can i find|can you find|can i see|do i see|do you see) (?:a |an |any |some )?";
  static const std::regex with_region(lead + "(.+?) " + kRegionAlt + "$");
  static const std::regex bare(lead + "(.+)$");
  const std::string q = normalize_question(question);
  std::smatch m;
  std::optional<ObjectQuery> out;
  if (std::regex_match(q, m, with_region)) {
    const auto region = region_from_phrase(m[2].str(), m[3].str());
    if (!region) return std::nullopt;
    out = resolve_noun_phrase(m[1].str(), graph, resources);
    if (out) out->region = *region;
  } else if (std::regex_match(q, m, bare)) {
    out = resolve_noun_phrase(m[1].str(), graph, resources);
  }
  return out;
}

std::optional<int> parse_count_answer(std::string_view answer) {
  std::string s = text::lower(answer);
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
  }
  for (const auto& w : text::split_words(s)) {
    if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
      if (w.size() > 6) return std::nullopt;
      return std::stoi(w);
    }
    if (const auto v = text::number_word_value(w)) return v;
    if (w == "no" || w == "none") return 0;
  }
  return std::nullopt;
}

std::optional<bool> parse_yes_no(std::string_view answer) {
  std::string s = text::lower(answer);
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
  }
  const auto words = text::split_words(s);
  if (words.empty()) return std::nullopt;
  if (words[0] == "yes") return true;
  if (words[0] == "no") return false;
  return std::nullopt;
}

std::optional<std::string> expected_answer(const InterleavedText& question, Category category,
                                           const SituatedGraph& graph, const QaResources& resources) {
  const std::string flat = question.flat();
  std::smatch m;
  switch (category) {
    case Category::counting:
    case Category::existence: {
      const auto q = category == Category::counting ? parse_counting_question(flat, graph, resources)
                                                    : parse_existence_question(flat, graph, resources);
      if (!q) return std::nullopt;
      std::size_t count = 0;
      if (q->label_in_graph) {
        const auto matches = match_query(*q, graph);
        if (!matches) return std::nullopt;
        count = matches->size();
      } else if (!resources.wild.contains(q->label)) {
        return std::nullopt;
      }
      if (category == Category::counting) return std::to_string(count);
      return std::string(count > 0 ? "yes" : "no");
    }
    case Category::attribute: {
      static const std::regex re("^What is the (color|3D shape|material|usage|texture|structure|state) of the " +
                                 kToken + "\\?$");
      if (!std::regex_match(flat, m, re)) return std::nullopt;
      const ObjectInstance* node = node_for_token(m[2].str(), graph);
      if (node == nullptr) return std::nullopt;
      for (const auto attr : kAllAttributes) {
        if (attribute_phrase(attr) == m[1].str()) {
          return node->attributes.get(attr);
        }
      }
      return std::nullopt;
    }
    case Category::description: {
      static const std::regex re("^Describe the " + kToken + "(?: " + kDirectionAlt + ")?\\.$");
      if (!std::regex_match(flat, m, re)) return std::nullopt;
      const ObjectInstance* node = node_for_token(m[1].str(), graph);
      if (node == nullptr) return std::nullopt;
      if (m[2].matched) {
        const auto region = region_from_phrase(m[2].str(), "");
        const AgentEdge* e = graph.agent_edge(node->id);
        if (!region || e == nullptr || graph.situation.anchor_object == node->id ||
            e->coarse != region->direction) {
          return std::nullopt;
        }
      }
      return describe(*node);
    }
    case Category::spatial: {
      static const std::regex rel("^What is the spatial relationship between the " + kToken + " and the " + kToken +
                                  "\\?$");
      static const std::regex between("^What is between the " + kToken + " and the " + kToken + "\\?$");
      if (std::regex_match(flat, m, rel)) {
        const ObjectInstance* a = node_for_token(m[1].str(), graph);
        const ObjectInstance* b = node_for_token(m[2].str(), graph);
        if (a == nullptr || b == nullptr || a->id == b->id) return std::nullopt;
        const auto phrase = relation_phrase(graph, a->id, b->id);
        if (!phrase) return std::nullopt;
        return "The " + a->label + " is " + *phrase + " the " + b->label + ".";
      }
      if (std::regex_match(flat, m, between)) {
        const ObjectInstance* b = node_for_token(m[1].str(), graph);
        const ObjectInstance* c = node_for_token(m[2].str(), graph);
        if (b == nullptr || c == nullptr || b->id == c->id) return std::nullopt;
        const auto ids = between_objects(graph, b->id, c->id);
        if (ids.empty()) return std::nullopt;
        std::vector<std::string> labels;
        for (const int id : ids) labels.push_back(graph.node(id)->label);
        return text::list_sentence(labels);
      }
      return std::nullopt;
    }
    case Category::navigation: {
      static const std::regex how("^How do I get to the " + kToken + " from my current position\\?$");
      static const std::regex where("^Where is the " + kToken + " located in relation to me\\?$");
      const bool is_how = std::regex_match(flat, m, how);
      if (!is_how && !std::regex_match(flat, m, where)) return std::nullopt;
      const ObjectInstance* node = node_for_token(m[1].str(), graph);
      if (node == nullptr) return std::nullopt;
      const AgentEdge* e = graph.agent_edge(node->id);
      if (e == nullptr) return std::nullopt;
      const std::string clock = std::to_string(e->clock) + " o'clock";
      if (!is_how) return "At your " + clock + ".";
      return "It is at your " + clock + ", so " + std::string(turn_phrase(e->coarse)) + " and " +
             std::string(walk_phrase(e->band)) + ".";
    }
    case Category::refer: {
      static const std::regex re("^what is (on|inside) the (.+?)(?: " + kRegionAlt + ")?$");
      const std::string q = normalize_question(flat);
      if (!std::regex_match(q, m, re)) return std::nullopt;
      auto query = resolve_noun_phrase(m[2].str(), graph, resources);
      if (!query || !query->label_in_graph) return std::nullopt;
      if (m[3].matched) {
        const auto region = region_from_phrase(m[3].str(), m[4].str());
        if (!region) return std::nullopt;
        query->region = *region;
      }
      const auto target = unique_match(*query, graph);
      if (!target) return std::nullopt;
      return refer_answer(graph, *target, m[1].str());
    }
    case Category::room_type: {
      static const std::regex re("^what (?:type|kind) of room (?:am i in|is this)$");
      if (!std::regex_match(normalize_question(flat), re)) return std::nullopt;
      const RoomRule* rule = best_room(graph, resources);
      if (rule == nullptr) return std::nullopt;
      return text::list_sentence({rule->room});
    }
    case Category::affordance: {
      static const std::regex re("^which object can i use to (.+)$");
      const std::string q = normalize_question(flat);
      if (!std::regex_match(q, m, re)) return std::nullopt;
      for (const auto& rule : resources.affordances) {
        if (rule.purpose != m[1].str()) continue;
        const AgentEdge* e = affordance_target(graph, rule);
        if (e == nullptr) return std::nullopt;
        return "The " + graph.node(e->object)->label + " at your " + std::to_string(e->clock) + " o'clock.";
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// --- generation ------------------------------------------------------------------

CategoryMix CategoryMix::standard() {
  CategoryMix mix;
  mix.weights = {15, 20, 8, 5, 20, 10, 15, 4, 3};
  return mix;
}

CategoryMix CategoryMix::from_json(const json& value) {
  if (!value.is_object()) {
    throw SchemaError("category_mix", "expected an object");
  }
  CategoryMix mix;
  for (const auto& [key, weight] : value.items()) {
    const auto c = category_from_string(key);
    if (!c) throw SchemaError("category_mix." + key, "unknown category");
    if (!weight.is_number() || weight.get<double>() < 0) {
      throw SchemaError("category_mix." + key, "expected a non-negative number");
    }
    mix.weights[static_cast<std::size_t>(*c)] = weight.get<double>();
  }
  if (std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0) <= 0) {
    throw SchemaError("category_mix", "all weights are zero");
  }
  return mix;
}

json CategoryMix::to_json() const {
  json out = json::object();
  for (const auto c : kAllCategories) {
    out[std::string(situgen::to_string(c))] = weight(c);
  }
  return out;
}

std::vector<Category> schedule_categories(const CategoryMix& mix, int n) {
  if (n <= 0) return {};
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  if (total <= 0) throw Error("schedule_categories: all weights are zero");

  // Largest-remainder quotas.
  std::array<int, 9> quota{};
  std::array<double, 9> remainder{};
  int assigned = 0;
  for (std::size_t i = 0; i < quota.size(); ++i) {
    const double exact = n * mix.weights[i] / total;
    quota[i] = static_cast<int>(std::floor(exact));
    remainder[i] = exact - quota[i];
    assigned += quota[i];
  }
  std::array<std::size_t, 9> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
    ++quota[order[k % order.size()]];
  }

  // Smooth weighted round-robin: spreads each category evenly over the run.
  std::vector<Category> out;
  out.reserve(static_cast<std::size_t>(n));
  std::array<long, 9> current{};
  for (int step = 0; step < n; ++step) {
    std::size_t pick = 0;
    for (std::size_t i = 0; i < quota.size(); ++i) {
      current[i] += quota[i];
      if (current[i] > current[pick]) pick = i;
    }
    current[pick] -= n;
    out.push_back(kAllCategories[pick]);
  }
  return out;
}

namespace {

std::string token_for(const ObjectInstance& obj) { return placeholder_token(obj.label, obj.id); }

InterleavedText interleave_graph(const std::string& text, const SituatedGraph& graph) {
  InterleavedText raw = interleave(text);
  InterleavedText out;
  for (const auto& seg : raw.segments) {
    if (seg.kind == Segment::Kind::image_slot) {
      const auto ref = parse_placeholder(seg.payload);
      const ObjectInstance* node = ref ? graph.node(ref->id) : nullptr;
      out.append_image(ref->label, ref->id, node ? node->image_ref : std::nullopt);
    } else {
      out.append_text(seg.payload);
    }
  }
  return out;
}

std::vector<std::string> color_words(const ObjectInstance& obj, const QaResources& resources) {
  std::vector<std::string> out;
  const auto& c = obj.attributes.get(Attribute::color);
  if (!c) return out;
  for (const auto& w : resources.colors) {
    if (color_matches(*c, w)) out.push_back(w);
  }
  return out;
}

std::vector<std::string> candidate_questions(const SituatedGraph& graph, Category category,
                                             const QaResources& resources) {
  std::vector<std::string> out;
  const auto labels = graph_labels(graph);
  const auto anchor = graph.situation.anchor_object;
  constexpr std::array<Direction, 4> dirs = {Direction::left, Direction::right, Direction::front, Direction::behind};
  const auto dir_region = [](Direction d) {
    Region r;
    r.kind = RegionKind::direction;
    r.direction = d;
    return r;
  };

  switch (category) {
    case Category::counting:
      for (const auto& l : labels) {
        ObjectQuery q{l, std::nullopt, {}, true};
        out.push_back(render_counting_question(q));
        for (const auto d : dirs) {
          q.region = dir_region(d);
          out.push_back(render_counting_question(q));
        }
        std::set<std::string> colors;
        for (const auto& [id, node] : graph.nodes) {
          if (node.label == l) {
            for (const auto& c : color_words(node, resources)) colors.insert(c);
          }
        }
        for (const auto& c : colors) {
          out.push_back(render_counting_question({l, c, {}, true}));
        }
      }
      break;
    case Category::existence:
      for (const auto& l : labels) {
        ObjectQuery q{l, std::nullopt, {}, true};
        out.push_back(render_existence_question(q, false));
        out.push_back(render_existence_question(q, true));
        for (const auto d : dirs) {
          q.region = dir_region(d);
          out.push_back(render_existence_question(q));
        }
        std::set<int> hours;
        for (const auto& e : graph.agent_edges) {
          const ObjectInstance* node = graph.node(e.object);
          if (node != nullptr && node->label == l && anchor != e.object) {
            hours.insert(e.clock);
            hours.insert((e.clock + 5) % 12 + 1);
          }
        }
        for (const int h : hours) {
          q.region = Region{RegionKind::clock, Direction::front, h};
          out.push_back(render_existence_question(q));
        }
      }
      break;
    case Category::attribute:
      for (const auto& [id, node] : graph.nodes) {
        for (const auto attr : kAllAttributes) {
          if (node.attributes.get(attr)) {
            out.push_back("What is the " + std::string(attribute_phrase(attr)) + " of the " + token_for(node) + "?");
          }
        }
      }
      break;
    case Category::description:
      for (const auto& [id, node] : graph.nodes) {
        if (node.attributes.empty()) continue;
        const AgentEdge* e = graph.agent_edge(id);
        if (e != nullptr && anchor != id) {
          out.push_back("Describe the " + token_for(node) + " " + region_phrase(dir_region(e->coarse)) + ".");
        } else {
          out.push_back("Describe the " + token_for(node) + ".");
        }
      }
      break;
    case Category::spatial: {
      for (const auto& [a, na] : graph.nodes) {
        for (const auto& [b, nb] : graph.nodes) {
          if (a != b && relation_phrase(graph, a, b)) {
            out.push_back("What is the spatial relationship between the " + token_for(na) + " and the " +
                          token_for(nb) + "?");
          }
        }
      }
      std::set<std::pair<int, int>> spans;
      for (const auto& e : graph.static_edges) {
        if (e.kind == RelationKind::between && e.extra) spans.insert({e.dst, *e.extra});
      }
      for (const auto& [b, c] : spans) {
        out.push_back("What is between the " + token_for(*graph.node(b)) + " and the " + token_for(*graph.node(c)) +
                      "?");
      }
      break;
    }
    case Category::navigation:
      for (const auto& [id, node] : graph.nodes) {
        if (anchor == id || graph.agent_edge(id) == nullptr) continue;
        out.push_back("How do I get to the " + token_for(node) + " from my current position?");
        out.push_back("Where is the " + token_for(node) + " located in relation to me?");
      }
      break;
    case Category::refer:
      for (const auto& [id, node] : graph.nodes) {
        for (const std::string relation : {"on", "inside"}) {
          if (!refer_answer(graph, id, relation)) continue;
          std::vector<ObjectQuery> descriptors;
          descriptors.push_back({node.label, std::nullopt, {}, true});
          const AgentEdge* e = graph.agent_edge(id);
          if (e != nullptr && anchor != id) descriptors.push_back({node.label, std::nullopt, dir_region(e->coarse), true});
          for (const auto& c : color_words(node, resources)) {
            descriptors.push_back({node.label, c, {}, true});
            if (e != nullptr && anchor != id) descriptors.push_back({node.label, c, dir_region(e->coarse), true});
          }
          for (const auto& d : descriptors) {
            if (unique_match(d, graph) == id) {
              out.push_back("What is " + relation + " the " + descriptor_phrase(d) + "?");
              break;
            }
          }
        }
      }
      break;
    case Category::room_type:
      if (best_room(graph, resources) != nullptr) out.push_back("What type of room am I in?");
      break;
    case Category::affordance:
      for (const auto& rule : resources.affordances) {
        if (affordance_target(graph, rule) != nullptr) {
          out.push_back("Which object can I use to " + rule.purpose + "?");
        }
      }
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

QAPair make_pair(const SituatedGraph& graph, InterleavedText question, std::string answer, Category category,
                 Provenance provenance) {
  QAPair qa;
  qa.scene_id = graph.scene_id;
  qa.situation_id = graph.situation_id;
  qa.situation = graph.situation;
  qa.question = std::move(question);
  qa.answer = std::move(answer);
  qa.category = category;
  qa.provenance = provenance;
  return qa;
}

}  // namespace

std::vector<QAPair> generate_templated(const SituatedGraph& graph, Category category, Rng& rng, int n,
                                       const QaResources& resources) {
  std::vector<QAPair> out;
  if (n <= 0) return out;
  auto candidates = candidate_questions(graph, category, resources);
  shuffle(candidates, rng);
  for (const auto& text : candidates) {
    if (static_cast<int>(out.size()) >= n) break;
    InterleavedText question = interleave_graph(text, graph);
    auto answer = expected_answer(question, category, graph, resources);
    if (!answer || answer->empty()) continue;
    out.push_back(make_pair(graph, std::move(question), std::move(*answer), category, Provenance::templated));
  }
  return out;
}

std::vector<QAPair> augment_negative_existence(const Scene& scene, const SituatedGraph& graph,
                                               const WildVocab& vocab, Rng& rng, int n,
                                               const QaResources& resources) {
  std::vector<QAPair> out;
  if (n <= 0) return out;

  std::set<std::string> scene_labels;
  for (const auto& obj : scene.objects) {
    scene_labels.insert(obj.label);
    scene_labels.insert(text::pluralize(obj.label));
  }
  for (const auto& [id, node] : graph.nodes) {
    scene_labels.insert(node.label);
  }

  std::vector<std::string> wild;
  for (const auto& label : vocab.labels) {
    if (scene_labels.count(label) > 0 || !is_valid_label(label)) continue;
    ObjectQuery q{label, std::nullopt, {}, false};
    wild.push_back(render_existence_question(q, rng.index(2) == 0));
  }

  std::vector<std::string> in_scene;
  constexpr std::array<Direction, 4> dirs = {Direction::left, Direction::right, Direction::front, Direction::behind};
  for (const auto& label : graph_labels(graph)) {
    for (const auto d : dirs) {
      ObjectQuery q{label, std::nullopt, {}, true};
      q.region.kind = RegionKind::direction;
      q.region.direction = d;
      in_scene.push_back(render_existence_question(q));
    }
    for (const auto& c : resources.colors) {
      in_scene.push_back(render_existence_question({label, c, {}, true}));
    }
  }

  shuffle(wild, rng);
  shuffle(in_scene, rng);
  const auto verified = [&](const std::string& text, bool wild_item) -> std::optional<InterleavedText> {
    InterleavedText question = interleave_graph(text, graph);
    if (wild_item) {
      const auto q = parse_existence_question(text, graph, resources);
      if (!q || q->label_in_graph) return std::nullopt;
      return question;
    }
    const auto answer = expected_answer(question, Category::existence, graph, resources);
    if (!answer || *answer != "no") return std::nullopt;
    return question;
  };

  std::size_t wi = 0;
  std::size_t si = 0;
  bool take_scene = true;
  while (static_cast<int>(out.size()) < n && (wi < wild.size() || si < in_scene.size())) {
    const bool from_scene = (take_scene && si < in_scene.size()) || wi >= wild.size();
    take_scene = !take_scene;
    const std::string& text = from_scene ? in_scene[si++] : wild[wi++];
    if (auto question = verified(text, !from_scene)) {
      out.push_back(make_pair(graph, std::move(*question), "no", Category::existence, Provenance::augmented));
      if (!from_scene) {
        out.back().meta["wild_label"] = parse_existence_question(text, graph, resources)->label;
      }
    }
  }
  return out;
}

}  // namespace situgen
