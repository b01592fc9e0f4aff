#include "codemine/tokenizer.hpp"

#include <cctype>

#include "codemine/lexer.hpp"

namespace codemine {

namespace {

bool word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

void split_words(std::string_view text, bool lowercase, std::vector<std::string>& out) {
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (word_char(c)) {
      cur += lowercase ? static_cast<char>(std::tolower(c)) : ch;
    } else {
      flush();
      if (!std::isspace(c)) out.emplace_back(1, ch);
    }
  }
  flush();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode,
                                  const LanguageProfile& profile) {
  std::vector<std::string> out;
  if (mode == TokenizeMode::natural_language) {
    split_words(text, true, out);
    return out;
  }
  for (auto& t : lex_code(text, profile).tokens) {
    if (t.kind != TokenKind::comment) {
      out.push_back(std::move(t.text));
      continue;
    }
    std::string_view body(t.text);
    std::size_t marker = body.substr(0, 2) == "//" || body.substr(0, 2) == "/*" ? 2 : 1;
    out.emplace_back(body.substr(0, marker));
    split_words(body.substr(marker), false, out);
  }
  return out;
}

}  // namespace codemine
