#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codemine/language.hpp"

namespace codemine {

enum class TokenKind { identifier, number, string, op, open, close, comment };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 0;    // 0-based line of the first character
  int column = 0;  // 0-based byte column
};

struct LexResult {
  std::vector<Token> tokens;
  bool unterminated_string = false;
  bool unterminated_comment = false;
  bool stray_backslash = false;  // a continuation backslash ends the text
};

/// Total lexer for code fragments. Never throws; malformed input is reported
/// through the LexResult flags and unterminated literals run to end of line
/// (or end of text for triple-quoted/block forms).
LexResult lex_code(std::string_view text, const LanguageProfile& profile);

}  // namespace codemine
