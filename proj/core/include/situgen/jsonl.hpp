#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace situgen {

/// Key of the run-config line that may open any JSONL file we write.
inline constexpr const char* kHeaderKey = "situgen_header";

bool is_header_line(const nlohmann::json& value);

/// Calls `fn(value, line_number)` for each record, skipping blank lines and
/// the header. Parse errors and exceptions from `fn` are rethrown as Error
/// prefixed with `path:line`.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const nlohmann::json&, std::size_t)>& fn);

/// Header object of a JSONL file, if its first line is one.
std::optional<nlohmann::json> read_jsonl_header(const std::filesystem::path& path);

/// Line-per-record writer; `header` (when given) goes first as
/// `{"situgen_header": header}`.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  JsonlWriter(const std::filesystem::path& path, const nlohmann::json& header);

  void write(const nlohmann::json& value);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace situgen
