#include "situgen/jsonl.hpp"

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

bool is_header_line(const json& value) { return value.is_object() && value.size() == 1 && value.contains(kHeaderKey); }

void read_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    try {
      const json value = json::parse(line);
      if (is_header_line(value)) continue;
      fn(value, number);
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::optional<json> read_jsonl_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  const json value = json::parse(line, nullptr, false);
  if (value.is_discarded() || !is_header_line(value)) return std::nullopt;
  return std::optional<json>(value.at(kHeaderKey));
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) {
    throw Error("cannot write " + path.string());
  }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, const json& header) : JsonlWriter(path) {
  write(json{{kHeaderKey, header}});
}

void JsonlWriter::write(const json& value) {
  out_ << value.dump() << '\n';
  if (!out_) {
    throw Error("write failed: " + path_.string());
  }
}

void JsonlWriter::close() {
  out_.close();
  if (out_.fail()) {
    throw Error("write failed: " + path_.string());
  }
}

}  // namespace situgen
