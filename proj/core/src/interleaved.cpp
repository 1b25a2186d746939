#include "situgen/interleaved.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/scene.hpp"

namespace situgen {

using nlohmann::json;

std::string placeholder_token(std::string_view label, int id) {
  return "<" + std::string(label) + "-" + std::to_string(id) + "-IMG>";
}

std::optional<PlaceholderRef> parse_placeholder(std::string_view token) {
  constexpr std::string_view kSuffix = "-IMG>";
  if (token.size() < 2 + kSuffix.size() || token.front() != '<' || !token.ends_with(kSuffix)) {
    return std::nullopt;
  }
  const std::string_view body = token.substr(1, token.size() - 1 - kSuffix.size());
  const auto dash = body.rfind('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == body.size()) {
    return std::nullopt;
  }
  const std::string_view label = body.substr(0, dash);
  const std::string_view digits = body.substr(dash + 1);
  for (const char c : label) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == ' ')) {
      return std::nullopt;
    }
  }
  int id = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.front() == '-' ||
      digits.front() == '+') {
    return std::nullopt;
  }
  return PlaceholderRef{std::string(label), id};
}

void InterleavedText::append_text(std::string_view text) {
  if (text.empty()) {
    return;
  }
  if (!segments.empty() && segments.back().kind == Segment::Kind::text) {
    segments.back().payload += text;
    return;
  }
  segments.push_back({Segment::Kind::text, std::string(text), std::nullopt});
}

void InterleavedText::append_image(std::string_view label, int id, std::optional<std::string> image_ref) {
  segments.push_back({Segment::Kind::image_slot, placeholder_token(label, id), std::move(image_ref)});
}

void InterleavedText::append(const InterleavedText& other) {
  for (const auto& seg : other.segments) {
    if (seg.kind == Segment::Kind::text) {
      append_text(seg.payload);
    } else {
      segments.push_back(seg);
    }
  }
}

std::string InterleavedText::flat() const {
  std::string out;
  for (const auto& seg : segments) {
    out += seg.payload;
  }
  return out;
}

std::vector<int> InterleavedText::referenced_ids() const {
  std::vector<int> ids;
  for (const auto& seg : segments) {
    if (seg.kind == Segment::Kind::image_slot) {
      if (const auto ref = parse_placeholder(seg.payload)) {
        ids.push_back(ref->id);
      }
    }
  }
  return ids;
}

InterleavedText interleave(std::string_view text, const Scene* scene) {
  InterleavedText out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('<', pos);
    if (open == std::string_view::npos) {
      break;
    }
    const auto close = text.find('>', open);
    if (close == std::string_view::npos) {
      break;
    }
    const std::string_view token = text.substr(open, close - open + 1);
    const auto ref = parse_placeholder(token);
    if (!ref) {
      out.append_text(text.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    out.append_text(text.substr(pos, open - pos));
    if (scene == nullptr) {
      out.segments.push_back({Segment::Kind::image_slot, std::string(token), std::nullopt});
    } else if (const ObjectInstance* obj = scene->find(ref->id); obj != nullptr && obj->label == ref->label) {
      out.append_image(obj->label, obj->id, obj->image_ref);
    } else {
      // Unresolvable reference: keep the words, drop the slot.
      out.append_text(ref->label);
    }
    pos = close + 1;
  }
  out.append_text(text.substr(pos));
  return out;
}

bool has_referential_integrity(const InterleavedText& text, const Scene& scene) {
  for (const auto& seg : text.segments) {
    if (seg.kind != Segment::Kind::image_slot) {
      continue;
    }
    const auto ref = parse_placeholder(seg.payload);
    if (!ref) {
      return false;
    }
    const ObjectInstance* obj = scene.find(ref->id);
    if (obj == nullptr || obj->label != ref->label) {
      return false;
    }
  }
  return true;
}

json to_json(const InterleavedText& text) {
  json out = json::array();
  for (const auto& seg : text.segments) {
    if (seg.kind == Segment::Kind::text) {
      out.push_back({{"kind", "text"}, {"payload", seg.payload}});
    } else {
      json slot = {{"kind", "image_slot"}, {"payload", seg.payload}};
      if (seg.image_ref) {
        slot["image_ref"] = *seg.image_ref;
      }
      out.push_back(std::move(slot));
    }
  }
  return out;
}

InterleavedText interleaved_from_json(const json& value) {
  if (!value.is_array()) {
    throw SchemaError("segments", "expected an array");
  }
  InterleavedText out;
  for (const auto& seg : value) {
    if (!seg.is_object() || !seg.contains("kind") || !seg.contains("payload")) {
      throw SchemaError("segments", "each segment needs kind and payload");
    }
    const auto kind = seg.at("kind").get<std::string>();
    if (kind == "text") {
      out.segments.push_back({Segment::Kind::text, seg.at("payload").get<std::string>(), std::nullopt});
    } else if (kind == "image_slot") {
      Segment s{Segment::Kind::image_slot, seg.at("payload").get<std::string>(), std::nullopt};
      if (!parse_placeholder(s.payload)) {
        throw SchemaError("segments", "malformed placeholder '" + s.payload + "'");
      }
      if (seg.contains("image_ref") && seg["image_ref"].is_string()) {
        s.image_ref = seg["image_ref"].get<std::string>();
      }
      out.segments.push_back(std::move(s));
    } else {
      throw SchemaError("segments", "unknown segment kind '" + kind + "'");
    }
  }
  return out;
}

}  // namespace situgen
