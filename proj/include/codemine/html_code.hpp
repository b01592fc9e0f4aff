#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codemine {

struct CodeExtraction {
  /// Display code blocks in document order; each block has at least one line.
  std::vector<std::vector<std::string>> blocks;
  /// Unbalanced or unexpected tags encountered inside code.
  int warnings = 0;
};

/// Extracts the contents of <pre><code>...</code></pre> blocks from post HTML.
/// Inline <code> spans are ignored. Content is entity-decoded, CRLF
/// normalized, split into lines, and the trailing newline is dropped.
CodeExtraction extract_code_blocks(std::string_view body_html);

/// Renders lines as a display code block, escaping markup characters.
std::string render_code_block_html(const std::vector<std::string>& lines);

std::string escape_html(std::string_view text);

}  // namespace codemine
