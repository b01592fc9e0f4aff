#include "codemine/jsonl.hpp"

#include "codemine/util.hpp"

namespace codemine {

json meta_to_json(const OutputMeta& meta) {
  return json{{"config_hash", meta.config_hash},
              {"tool_version", meta.tool_version},
              {"kind", meta.kind}};
}

std::string render_jsonl(const std::vector<json>& records, const OutputMeta* meta) {
  std::string out;
  if (meta) {
    out += json{{"_meta", meta_to_json(*meta)}}.dump();
    out += '\n';
  }
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<json>& records,
                 const OutputMeta* meta) {
  write_file(path, render_jsonl(records, meta));
}

JsonlContents parse_jsonl(const std::string& text, const std::string& origin) {
  JsonlContents result;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + start, nl - start);
    start = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw UserError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1 && record.is_object() && record.contains("_meta")) {
      const auto& m = record["_meta"];
      result.has_meta = true;
      result.meta.config_hash = m.value("config_hash", "");
      result.meta.tool_version = m.value("tool_version", "");
      result.meta.kind = m.value("kind", "");
      continue;
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

JsonlContents read_jsonl(const std::string& path) {
  return parse_jsonl(read_file(path), path);
}

}  // namespace codemine
