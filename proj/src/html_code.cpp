#include "codemine/html_code.hpp"

#include <cctype>
#include <optional>

#include "codemine/posts_xml.hpp"
#include "codemine/util.hpp"

namespace codemine {

namespace {

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  std::size_t begin = 0;
  std::size_t end = 0;  // one past '>'
};

// Parses the tag starting at html[pos] == '<'. Returns nullopt for '<' that
// does not start a tag (e.g. a stray comparison in unescaped text).
std::optional<Tag> parse_tag(std::string_view html, std::size_t pos) {
  Tag tag;
  tag.begin = pos;
  std::size_t i = pos + 1;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  std::size_t name_start = i;
  while (i < html.size() && (std::isalnum(static_cast<unsigned char>(html[i])))) ++i;
  if (i == name_start) return std::nullopt;
  tag.name = to_lower(html.substr(name_start, i - name_start));
  // Attribute values may contain '>' when quoted.
  char quote = 0;
  for (; i < html.size(); ++i) {
    char c = html[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      tag.end = i + 1;
      return tag;
    }
  }
  return std::nullopt;
}

std::vector<std::string> to_lines(std::string text) {
  std::string normalized;
  normalized.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    normalized += text[i] == '\r' ? '\n' : text[i];
  }
  if (!normalized.empty() && normalized.back() == '\n') normalized.pop_back();
  return split_lines(normalized);
}

bool blank(const std::vector<std::string>& lines) {
  for (const auto& l : lines)
    if (!trim(l).empty()) return false;
  return true;
}

}  // namespace

CodeExtraction extract_code_blocks(std::string_view html) {
  CodeExtraction out;
  std::size_t pos = 0;
  while (true) {
    std::size_t lt = html.find('<', pos);
    if (lt == std::string_view::npos) break;
    auto tag = parse_tag(html, lt);
    if (!tag) {
      pos = lt + 1;
      continue;
    }
    pos = tag->end;
    if (tag->closing || tag->name != "pre") continue;

    // Expect <code> as the first element inside <pre>.
    std::size_t after_pre = pos;
    while (after_pre < html.size() && std::isspace(static_cast<unsigned char>(html[after_pre])))
      ++after_pre;
    std::optional<Tag> code_open;
    if (after_pre < html.size() && html[after_pre] == '<') code_open = parse_tag(html, after_pre);
    if (!code_open || code_open->closing || code_open->name != "code") continue;

    // Collect text up to </code>; other recognized block tags end the block early.
    std::string raw;
    std::size_t i = code_open->end;
    bool clean_close = false;
    while (i < html.size()) {
      if (html[i] != '<') {
        raw += html[i++];
        continue;
      }
      auto inner = parse_tag(html, i);
      if (!inner) {
        raw += html[i++];
        continue;
      }
      if (inner->name == "code" && inner->closing) {
        clean_close = true;
        i = inner->end;
        break;
      }
      if (inner->name == "pre" || inner->name == "code") {
        // Unbalanced: leave the tag for the outer scan.
        break;
      }
      // Markup inside code (e.g. highlighting spans) is dropped.
      ++out.warnings;
      i = inner->end;
    }
    if (!clean_close) ++out.warnings;
    pos = i;
    if (clean_close) {
      // Consume the matching </pre> if it follows.
      std::size_t j = pos;
      while (j < html.size() && std::isspace(static_cast<unsigned char>(html[j]))) ++j;
      auto close_pre = j < html.size() && html[j] == '<' ? parse_tag(html, j) : std::nullopt;
      if (close_pre && close_pre->closing && close_pre->name == "pre") {
        pos = close_pre->end;
      } else {
        ++out.warnings;
      }
    }
    auto lines = to_lines(decode_entities(raw, true));
    if (!blank(lines)) out.blocks.push_back(std::move(lines));
  }
  return out;
}

std::string escape_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_code_block_html(const std::vector<std::string>& lines) {
  return "<pre><code>" + escape_html(join_lines(lines)) + "\n</code></pre>";
}

}  // namespace codemine
