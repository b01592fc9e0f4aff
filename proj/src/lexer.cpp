#include "codemine/lexer.hpp"

#include <array>
#include <cctype>

#include "codemine/util.hpp"

namespace codemine {

namespace {

// Longest first for maximal munch.
constexpr std::array<std::string_view, 39> kOperators = {
    ">>>=", "**=", "//=", ">>=", "<<=", ">>>", "...", "->", ":=", "**", "//", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "<<", ">>", "&&",
    "||",   "++",  "--",  "::",  "@=",  "<>",  "=",   "+",  "-",  "*",  "/",  "%",  "!"};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  for (char c : word) {
    char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
  }
  return true;
}

class Lexer {
 public:
  Lexer(std::string_view text, const LanguageProfile& profile) : s_(text), p_(profile) {}

  LexResult run() {
    while (i_ < s_.size()) {
      unsigned char c = static_cast<unsigned char>(s_[i_]);
      if (c == '\n') {
        advance_newline();
        continue;
      }
      if (std::isspace(c)) {
        advance(1);
        continue;
      }
      if (c == '\\') {
        // Line continuation (or a stray backslash).
        std::size_t j = i_ + 1;
        while (j < s_.size() && (s_[j] == ' ' || s_[j] == '\t' || s_[j] == '\r')) ++j;
        if (j >= s_.size()) {
          r_.stray_backslash = true;
          advance(j - i_);
          continue;
        }
        if (s_[j] == '\n') {
          advance(j - i_);
          advance_newline();
          continue;
        }
        push(TokenKind::op, 1);
        continue;
      }
      if (p_.hash_comments && c == '#') {
        line_comment();
        continue;
      }
      if (p_.slash_comments && c == '/' && peek(1) == '/') {
        line_comment();
        continue;
      }
      if (p_.slash_comments && c == '/' && peek(1) == '*') {
        block_comment();
        continue;
      }
      if (c == '"' || c == '\'') {
        string_literal(i_);
        continue;
      }
      if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        number();
        continue;
      }
      if (ident_start(c)) {
        std::size_t j = i_;
        while (j < s_.size() && ident_char(static_cast<unsigned char>(s_[j]))) ++j;
        std::string_view word = s_.substr(i_, j - i_);
        if (p_.python_strings && j < s_.size() && (s_[j] == '"' || s_[j] == '\'') &&
            is_string_prefix(word)) {
          string_literal(i_, j - i_);
          continue;
        }
        push(TokenKind::identifier, j - i_);
        continue;
      }
      if (c == '(' || c == '[' || c == '{') {
        push(TokenKind::open, 1);
        continue;
      }
      if (c == ')' || c == ']' || c == '}') {
        push(TokenKind::close, 1);
        continue;
      }
      std::size_t len = 1;
      for (auto op : kOperators) {
        if (s_.substr(i_, op.size()) == op) {
          len = op.size();
          break;
        }
      }
      push(TokenKind::op, len);
    }
    return std::move(r_);
  }

 private:
  char peek(std::size_t k) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }

  void advance(std::size_t n) {
    i_ += n;
    col_ += static_cast<int>(n);
  }
  void advance_newline() {
    ++i_;
    ++line_;
    col_ = 0;
  }

  void push(TokenKind kind, std::size_t len) {
    r_.tokens.push_back(Token{kind, std::string(s_.substr(i_, len)), line_, col_});
    advance(len);
  }

  // Pushes s_[start, i_) as one token that may span lines.
  void push_span(TokenKind kind, std::size_t start, int line, int col) {
    r_.tokens.push_back(Token{kind, std::string(s_.substr(start, i_ - start)), line, col});
  }

  void line_comment() {
    std::size_t j = s_.find('\n', i_);
    if (j == std::string_view::npos) j = s_.size();
    push(TokenKind::comment, j - i_);
  }

  void block_comment() {
    const std::size_t start = i_;
    const int line = line_, col = col_;
    std::size_t end = s_.find("*/", i_ + 2);
    if (end == std::string_view::npos) {
      r_.unterminated_comment = true;
      end = s_.size();
    } else {
      end += 2;
    }
    while (i_ < end) {
      if (s_[i_] == '\n') advance_newline();
      else advance(1);
    }
    push_span(TokenKind::comment, start, line, col);
  }

  void string_literal(std::size_t start, std::size_t prefix_len = 0) {
    const int line = line_, col = col_;
    advance(prefix_len);
    const char quote = s_[i_];
    const bool triple = (p_.python_strings || quote == '"') && peek(1) == quote && peek(2) == quote;
    if (triple) {
      advance(3);
      while (true) {
        if (i_ >= s_.size()) {
          r_.unterminated_string = true;
          break;
        }
        if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
          if (s_[i_ + 1] == '\n') {
            advance(1);
            advance_newline();
          } else {
            advance(2);
          }
          continue;
        }
        if (s_[i_] == quote && peek(1) == quote && peek(2) == quote) {
          advance(3);
          break;
        }
        if (s_[i_] == '\n') advance_newline();
        else advance(1);
      }
      push_span(TokenKind::string, start, line, col);
      return;
    }
    advance(1);
    while (true) {
      if (i_ >= s_.size() || s_[i_] == '\n') {
        r_.unterminated_string = true;
        break;
      }
      if (s_[i_] == '\\' && i_ + 1 < s_.size() && s_[i_ + 1] != '\n') {
        advance(2);
        continue;
      }
      if (s_[i_] == quote) {
        advance(1);
        break;
      }
      advance(1);
    }
    push_span(TokenKind::string, start, line, col);
  }

  void number() {
    std::size_t j = i_;
    auto digit_run = [&](auto pred) {
      while (j < s_.size() && (pred(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
    };
    if (s_[j] == '0' && j + 1 < s_.size() && (s_[j + 1] == 'x' || s_[j + 1] == 'X')) {
      j += 2;
      digit_run([](unsigned char c) { return std::isxdigit(c) != 0; });
    } else {
      digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
      if (j < s_.size() && s_[j] == '.' &&
          !(j + 1 < s_.size() && s_[j + 1] == '.')) {
        ++j;
        digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
      }
      if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
        if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
          j = k;
          digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
        }
      }
    }
    // Type suffixes: 10L, 1.5f, 3j, ...
    while (j < s_.size() && std::isalpha(static_cast<unsigned char>(s_[j]))) ++j;
    push(TokenKind::number, j - i_);
  }

  std::string_view s_;
  const LanguageProfile& p_;
  std::size_t i_ = 0;
  int line_ = 0;
  int col_ = 0;
  LexResult r_;
};

}  // namespace

LexResult lex_code(std::string_view text, const LanguageProfile& profile) {
  return Lexer(text, profile).run();
}

}  // namespace codemine
