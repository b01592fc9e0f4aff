#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace codemine {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "codemine 1.0.0";

/// Provenance carried by every pipeline output. JSON-lines files store it as a
/// first line of the form {"_meta": {...}}; readers skip that line.
struct OutputMeta {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string kind;
};

json meta_to_json(const OutputMeta& meta);

/// Serializes records one per line, preceded by the meta line when given.
std::string render_jsonl(const std::vector<json>& records, const OutputMeta* meta);
void write_jsonl(const std::string& path, const std::vector<json>& records,
                 const OutputMeta* meta);

struct JsonlContents {
  std::vector<json> records;
  bool has_meta = false;
  OutputMeta meta;
};

JsonlContents parse_jsonl(const std::string& text, const std::string& origin);
JsonlContents read_jsonl(const std::string& path);

}  // namespace codemine
