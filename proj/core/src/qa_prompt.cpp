#include <algorithm>
#include <cstdio>
#include <limits>
#include <regex>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/qa.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

constexpr std::string_view kQaSystem =
    "You are an AI visual assistant situated in a 3D scene. You can perceive the objects (including yourself) in "
    "the scene. Each object is listed as `label-id: [x, y, z], [h, w, d], color, 3D shape, material, usage, "
    "texture, structure, state;` where [x, y, z] is the center in meters and [h, w, d] the box size along x, y "
    "and z. Unknown attributes are written as -.";

constexpr std::string_view kQaInstructions =
    "Task: ask and answer questions about this scene from your own point of view.\n"
    "First go through the objects one by one: recall their attributes, their relations to other objects, and "
    "their direction and distance from you. Then write question-answer pairs grounded only in that information.\n"
    "Refer to a specific object with its token, for example <chair-3-IMG>.\n"
    "Allowed types: counting, existence, attribute, description, spatial, navigation, refer, room_type, "
    "affordance.\n"
    "Write every pair as three lines and leave a blank line between pairs:\n"
    "Question: ...\nType: ...\nAnswer: ...";

constexpr std::string_view kAttributeInstructions =
    "describe the color, 3D shape, material, usage, texture, structure, state of the object in the image.\n"
    "the object maybe a {name}.\n"
    "please directly give a long and short description of the object seperately in python dict format.\n"
    "the output should be like {\"short\": {\"color\": , \"3D shape\": , \"material\": , \"usage\": , "
    "\"texture\": , \"structure\": , \"state\": }, \"long\": {\"color\": , \"3D shape\": , \"material\": , "
    "\"usage\": , \"texture\": , \"structure\": , \"state\": }}, and can be parsed by eval function.";

std::string fixed2(double v) {
  if (std::abs(v) < 0.005) v = 0.0;  // no "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string vec3(const Vec3& v) { return "[" + fixed2(v.x) + ", " + fixed2(v.y) + ", " + fixed2(v.z) + "]"; }

std::string node_name(const ObjectInstance& obj) { return obj.label + "-" + std::to_string(obj.id); }

/// Attribute values share the line with the field separators.
std::string field_value(const std::optional<std::string>& value) {
  if (!value) return "-";
  std::string s = *value;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == ';' || c == '\n'; }, ' ');
  s = text::join(text::split_words(s), " ");
  return s.empty() ? "-" : s;
}

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

/// The `index`-th k-subset of {0..n-1} in lexicographic order.
std::vector<std::size_t> unrank_combination(std::size_t n, std::size_t k, std::size_t index) {
  std::vector<std::size_t> out;
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    for (std::size_t v = next; v < n; ++v) {
      const std::size_t with_v = choose(n - v - 1, k - slot - 1);
      if (index < with_v) {
        out.push_back(v);
        next = v + 1;
        break;
      }
      index -= with_v;
    }
  }
  return out;
}

std::optional<Category> category_alias(std::string_view raw) {
  std::string s = text::lower(raw);
  for (char& c : s) {
    if (c == '_' || c == '-' || c == '.' || c == '*' || c == '"' || c == '\'') c = ' ';
  }
  s = text::join(text::split_words(s), " ");
  static const std::vector<std::pair<std::string_view, Category>> aliases = {
      {"counting", Category::counting},        {"count", Category::counting},
      {"existence", Category::existence},      {"exist", Category::existence},
      {"attribute", Category::attribute},      {"attributes", Category::attribute},
      {"object attribute", Category::attribute}, {"description", Category::description},
      {"describe", Category::description},     {"object description", Category::description},
      {"spatial", Category::spatial},          {"spatial relationship", Category::spatial},
      {"spatial relation", Category::spatial}, {"spatial relationships", Category::spatial},
      {"navigation", Category::navigation},    {"navigate", Category::navigation},
      {"refer", Category::refer},              {"object refer", Category::refer},
      {"object reference", Category::refer},   {"object referring", Category::refer},
      {"referring", Category::refer},          {"reference", Category::refer},
      {"room type", Category::room_type},      {"room", Category::room_type},
      {"affordance", Category::affordance},    {"object affordance", Category::affordance},
      {"affordances", Category::affordance}};
  for (const auto& [alias, category] : aliases) {
    if (s == alias) return category;
  }
  return std::nullopt;
}

/// Python literal syntax (single quotes, True/False/None, empty values,
/// trailing commas) rewritten as JSON.
std::string python_to_json(std::string_view in) {
  std::string out;
  const auto skip_ws = [&](std::size_t i) {
    while (i < in.size() && std::isspace(static_cast<unsigned char>(in[i]))) ++i;
    return i;
  };
  for (std::size_t i = 0; i < in.size();) {
    const char c = in[i];
    if (c == '\'' || c == '"') {
      std::string value;
      std::size_t j = i + 1;
      for (; j < in.size() && in[j] != c; ++j) {
        if (in[j] == '\\' && j + 1 < in.size()) {
          ++j;
          switch (in[j]) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            default: value += in[j];
          }
        } else {
          value += in[j];
        }
      }
      if (j >= in.size()) throw Error("unterminated string");
      out += json(value).dump();
      i = j + 1;
    } else if (c == ':') {
      out += ':';
      const std::size_t k = skip_ws(i + 1);
      if (k < in.size() && (in[k] == ',' || in[k] == '}')) out += "null";
      ++i;
    } else if (c == ',') {
      const std::size_t k = skip_ws(i + 1);
      if (!(k < in.size() && (in[k] == '}' || in[k] == ']'))) out += ',';
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < in.size() && (std::isalnum(static_cast<unsigned char>(in[j])) || in[j] == '_')) ++j;
      const std::string_view word = in.substr(i, j - i);
      if (word == "True") out += "true";
      else if (word == "False") out += "false";
      else if (word == "None") out += "null";
      else throw Error("unexpected identifier");
      i = j;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

std::optional<Attribute> attribute_alias(std::string_view key) {
  std::string s = text::lower(key);
  std::replace(s.begin(), s.end(), '_', ' ');
  s = text::join(text::split_words(s), " ");
  if (s == "color" || s == "colour") return Attribute::color;
  if (s == "3d shape" || s == "shape" || s == "shape3d" || s == "3dshape") return Attribute::shape3d;
  if (s == "material") return Attribute::material;
  if (s == "usage" || s == "use") return Attribute::usage;
  if (s == "texture") return Attribute::texture;
  if (s == "structure") return Attribute::structure;
  if (s == "state") return Attribute::state;
  return std::nullopt;
}

std::optional<std::string> attribute_value(const json& v) {
  if (v.is_string()) {
    std::string s = text::trim(v.get<std::string>());
    if (s.empty()) return std::nullopt;
    return s;
  }
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& item : v) {
      if (const auto s = attribute_value(item)) parts.push_back(*s);
    }
    if (parts.empty()) return std::nullopt;
    return text::join(parts, ", ");
  }
  if (v.is_number() || v.is_boolean()) return v.dump();
  return std::nullopt;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string PromptBundle::user_message() const {
  std::string out;
  if (!graph_serialization.empty()) {
    out += graph_serialization;
    out += "\n";
  }
  if (!seed_examples.empty()) {
    out += "Examples:\n";
    for (const auto& seed : seed_examples) {
      out += "Scene:\n" + seed.graph_snippet + "\nQuestion: " + seed.question + "\nType: " +
             std::string(to_string(seed.category)) + "\nAnswer: " + seed.answer + "\n\n";
    }
  }
  out += instructions;
  return out;
}

ChatRequest PromptBundle::to_chat_request(const std::string& model) const {
  ChatRequest request;
  request.model = model;
  if (!system.empty()) {
    request.messages.push_back(ChatMessage::text("system", system));
  }
  ChatMessage user = ChatMessage::text("user", user_message());
  for (const auto& url : image_urls) {
    user.content.push_back({ChatContentPart::Kind::image_url, url});
  }
  request.messages.push_back(std::move(user));
  return request;
}

std::string serialize_graph(const SituatedGraph& graph) {
  std::string out = "Objects:\n";
  for (const auto& [id, node] : graph.nodes) {
    out += node_name(node) + ": " + vec3(node.centroid) + ", " + vec3(node.size);
    for (const auto attr : kAllAttributes) {
      out += ", " + field_value(node.attributes.get(attr));
    }
    out += ";\n";
  }
  const auto edges = graph.all_edges();
  if (!edges.empty()) {
    out += "Relations:\n";
    for (const auto& e : edges) {
      out += node_name(*graph.node(e.src)) + " " + std::string(to_string(e.kind)) + " " + node_name(*graph.node(e.dst));
      if (e.extra) out += " and " + node_name(*graph.node(*e.extra));
      out += "\n";
    }
  }
  if (!graph.agent_edges.empty()) {
    out += "Agent relations:\n";
    for (const auto& e : graph.agent_edges) {
      out += "agent -> " + node_name(*graph.node(e.object)) + ": " + fixed2(e.distance_m) + " m, " +
             std::string(to_string(e.band)) + ", " + std::string(to_string(e.coarse)) + ", " +
             std::to_string(e.clock) + " o'clock\n";
    }
  }
  const Situation& s = graph.situation;
  out += "Situation:\nlocation: " + vec3(s.location) + "; facing: " + fixed2(to_degrees(s.rotation)) +
         " degrees; interaction: " + std::string(to_string(s.interaction)) + "\n";
  if (!s.action_text.empty()) out += "action: " + s.action_text.flat() + "\n";
  if (!s.location_text.empty()) out += "surroundings: " + s.location_text.flat() + "\n";
  return out;
}

PromptBundle build_qa_prompt(const SituatedGraph& graph, const std::vector<SeedExample>& seeds,
                             const QaPromptConfig& config) {
  if (seeds.empty()) {
    throw Error("build_qa_prompt: no seed examples");
  }
  PromptBundle bundle;
  bundle.system = std::string(kQaSystem);
  bundle.instructions = std::string(kQaInstructions);
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(config.examples_per_prompt, 1)), 1,
                                                seeds.size());
  for (const std::size_t i : unrank_combination(seeds.size(), k, config.combination_index % choose(seeds.size(), k))) {
    bundle.seed_examples.push_back(seeds[i]);
  }

  const auto measure = [&] { return estimate_tokens(bundle.system) + estimate_tokens(bundle.user_message()); };
  bundle.graph_serialization = serialize_graph(graph);
  if (measure() <= config.max_prompt_tokens) {
    return bundle;
  }
  double radius = 0.0;
  for (const auto& e : graph.agent_edges) radius = std::max(radius, e.distance_m);
  SituatedGraph visible = graph;
  while (!visible.nodes.empty()) {
    radius *= 0.75;
    visible = subgraph(graph, radius);
    bundle.graph_serialization = serialize_graph(visible);
    if (measure() <= config.max_prompt_tokens) {
      return bundle;
    }
  }
  throw Error("prompt over budget: estimated " + std::to_string(measure()) + " tokens with no objects left, budget " +
              std::to_string(config.max_prompt_tokens));
}

LlmParseResult parse_llm_output(std::string_view text) {
  static const std::regex field(
      R"(^(?:\d+[.)]\s*|[-*]\s*)?\**\s*(question|q|type|t|category|answer|a)\s*\d*\s*\**\s*:\s*\**\s*(.*)$)",
      std::regex::icase);

  struct Draft {
    std::string question, type, answer;
    std::string* last = nullptr;
  };
  LlmParseResult result;
  std::optional<Draft> draft;
  std::size_t record = 0;

  const auto finish = [&] {
    if (!draft) return;
    const std::string q = text::trim(draft->question);
    const std::string t = text::trim(draft->type);
    const std::string a = text::trim(draft->answer);
    if (q.empty() || t.empty() || a.empty()) {
      ++result.malformed;
    } else if (const auto category = category_alias(t)) {
      QAPair qa;
      qa.question = interleave(q);
      qa.answer = a;
      qa.category = *category;
      qa.provenance = Provenance::llm;
      result.pairs.push_back(std::move(qa));
    } else {
      result.rejected.push_back({record, "unknown question type '" + t + "'"});
    }
    ++record;
    draft.reset();
  };

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = text::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    std::smatch m;
    if (std::regex_match(line, m, field)) {
      const std::string key = text::lower(m[1].str());
      std::string value = m[2].str();
      while (!value.empty() && value.back() == '*') value.pop_back();
      if (key == "question" || key == "q") {
        finish();
        draft = Draft{};
        draft->question = value;
        draft->last = &draft->question;
      } else if (draft) {
        std::string& slot = (key == "answer" || key == "a") ? draft->answer : draft->type;
        if (!slot.empty()) {
          // A second answer or type line means the record is garbled.
          draft->question.clear();
        }
        slot = value;
        draft->last = &slot;
      } else {
        ++result.malformed;
      }
    } else if (draft && draft->last != nullptr) {
      *draft->last += " " + line;
    }
  }
  finish();

  if (result.pairs.empty() && result.rejected.empty()) {
    throw Error("no question-answer records in LLM output:\n" + std::string(text));
  }
  return result;
}

PromptBundle build_attribute_prompt(const ObjectInstance& obj, const std::filesystem::path& image_root) {
  if (!obj.image_ref) {
    throw Error("object " + std::to_string(obj.id) + " has no image_ref");
  }
  std::filesystem::path path(*obj.image_ref);
  if (path.is_relative() && !image_root.empty()) {
    path = image_root / path;
  }
  PromptBundle bundle;
  std::string instructions(kAttributeInstructions);
  instructions.replace(instructions.find("{name}"), 6, obj.label);
  bundle.instructions = std::move(instructions);
  bundle.image_urls.push_back(image_data_url(path));
  return bundle;
}

AttributeParse parse_attribute_response(std::string_view raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error("unparseable attribute response:\n" + std::string(raw));
  }
  const std::string_view body = raw.substr(open, close - open + 1);
  json root;
  try {
    root = json::parse(body);
  } catch (const json::exception&) {
    try {
      root = json::parse(python_to_json(body));
    } catch (const std::exception&) {
      throw Error("unparseable attribute response:\n" + std::string(raw));
    }
  }
  if (!root.is_object()) {
    throw Error("unparseable attribute response:\n" + std::string(raw));
  }

  AttributeParse out;
  const auto read = [&](const json& block, bool descriptive, const std::string& name) {
    for (const auto& [key, value] : block.items()) {
      const auto attr = attribute_alias(key);
      if (!attr) {
        out.warnings.push_back("ignored key '" + key + "' in " + name);
        continue;
      }
      auto& slot = descriptive ? out.record.descriptive[static_cast<std::size_t>(*attr)]
                               : out.record.concise[static_cast<std::size_t>(*attr)];
      slot = attribute_value(value);
    }
  };
  const auto it_short = root.find("short");
  const auto it_long = root.find("long");
  if (it_short == root.end() && it_long == root.end()) {
    read(root, false, "response");
  } else {
    if (it_short != root.end() && it_short->is_object()) read(*it_short, false, "short");
    if (it_long != root.end() && it_long->is_object()) read(*it_long, true, "long");
  }
  for (const auto attr : kAllAttributes) {
    if (!out.record.get(attr)) {
      out.warnings.push_back("missing attribute '" + std::string(attribute_phrase(attr)) + "'");
    }
  }
  return out;
}

}  // namespace situgen
