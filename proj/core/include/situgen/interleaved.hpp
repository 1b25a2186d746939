#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace situgen {

struct Scene;

/// Image placeholder token for an object instance, e.g. `<door-12-IMG>`.
std::string placeholder_token(std::string_view label, int id);

struct PlaceholderRef {
  std::string label;
  int id = 0;

  friend bool operator==(const PlaceholderRef&, const PlaceholderRef&) = default;
};

/// Parses a full `<label-id-IMG>` token.
std::optional<PlaceholderRef> parse_placeholder(std::string_view token);

struct Segment {
  enum class Kind { text, image_slot };

  Kind kind = Kind::text;
  std::string payload;
  std::optional<std::string> image_ref;  // image slots only

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Text with object image slots, as used for situations and questions.
struct InterleavedText {
  std::vector<Segment> segments;

  void append_text(std::string_view text);
  void append_image(std::string_view label, int id, std::optional<std::string> image_ref);
  void append(const InterleavedText& other);

  /// Concatenation with image slots written as their tokens.
  std::string flat() const;
  /// Ids of every image slot, in order of appearance.
  std::vector<int> referenced_ids() const;
  bool empty() const { return segments.empty(); }

  friend bool operator==(const InterleavedText&, const InterleavedText&) = default;
};

/// Splits placeholder tokens out of `text`. Tokens whose id names an object of
/// `scene` with the same label become image slots (carrying the object's
/// image_ref); unresolvable tokens are kept only when `scene` is null.
InterleavedText interleave(std::string_view text, const Scene* scene = nullptr);

/// True when every image slot is a well-formed token naming an existing object
/// with a matching label.
bool has_referential_integrity(const InterleavedText& text, const Scene& scene);

nlohmann::json to_json(const InterleavedText& text);
InterleavedText interleaved_from_json(const nlohmann::json& value);

}  // namespace situgen
