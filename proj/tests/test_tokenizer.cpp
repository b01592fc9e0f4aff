#include <gtest/gtest.h>

#include "codemine/lexer.hpp"
#include "codemine/tokenizer.hpp"
#include "codemine/util.hpp"
#include "codemine/vocab.hpp"

using namespace codemine;
using V = std::vector<std::string>;

TEST(Tokenizer, NaturalLanguage) {
  EXPECT_EQ(tokenize("Removing duplicates in lists", TokenizeMode::natural_language),
            (V{"removing", "duplicates", "in", "lists"}));
  EXPECT_EQ(tokenize("How do I sort a dict?", TokenizeMode::natural_language),
            (V{"how", "do", "i", "sort", "a", "dict", "?"}));
  EXPECT_TRUE(tokenize("", TokenizeMode::natural_language).empty());
}

TEST(Tokenizer, Code) {
  EXPECT_EQ(tokenize("list(set(t))", TokenizeMode::code), (V{"list", "(", "set", "(", "t", ")", ")"}));
  EXPECT_EQ(tokenize("x = a.b[0]", TokenizeMode::code), (V{"x", "=", "a", ".", "b", "[", "0", "]"}));
  EXPECT_EQ(tokenize("s = \"a b\"  # note it", TokenizeMode::code), (V{"s", "=", "\"a b\"", "#", "note", "it"}));
  EXPECT_EQ(tokenize("x += 1.5e3", TokenizeMode::code), (V{"x", "+=", "1.5e3"}));
  EXPECT_TRUE(tokenize("", TokenizeMode::code).empty());
  EXPECT_EQ(tokenize("List<String> l = new ArrayList<>(); // c", TokenizeMode::code, java_profile()).front(),
            "List");
}

TEST(Tokenizer, CodeTokensNeverContainWhitespaceOutsideStrings) {
  Rng rng(2);
  const std::string alphabet = "ab1 ()[]{}.,=+-*/<>!'\"#\n\t_:";
  for (int t = 0; t < 500; ++t) {
    std::string s;
    for (auto n = rng.below(40); n > 0; --n) s += alphabet[rng.below(alphabet.size())];
    for (const auto& tok : tokenize(s, TokenizeMode::code)) {
      ASSERT_FALSE(tok.empty());
      const bool literal = tok.find_first_of("'\"") != std::string::npos;  // string, maybe prefixed
      if (!literal) ASSERT_EQ(tok.find_first_of(" \t\n"), std::string::npos) << s;
    }
  }
}

TEST(Lexer, FlagsMalformedInput) {
  EXPECT_TRUE(lex_code("s = 'abc", python_profile()).unterminated_string);
  EXPECT_TRUE(lex_code("x = \"\"\"doc", python_profile()).unterminated_string);
  EXPECT_TRUE(lex_code("/* c", java_profile()).unterminated_comment);
  EXPECT_TRUE(lex_code("x = 1 + \\", python_profile()).stray_backslash);
  auto r = lex_code("a = (b)\nc", python_profile());
  EXPECT_FALSE(r.unterminated_string);
  ASSERT_EQ(r.tokens.size(), 6u);
  EXPECT_EQ(r.tokens[2].kind, TokenKind::open);
  EXPECT_EQ(r.tokens[5].line, 1);
}

TEST(Vocab, FrequencyOrderAndCutoff) {
  auto v = Vocabulary::build({{"b", "a", "b"}, {"c", "a", "b"}, {"d"}}, 2);
  ASSERT_EQ(v.size(), Vocabulary::kReserved + 2);
  EXPECT_EQ(v.token(Vocabulary::kReserved), "b");
  EXPECT_EQ(v.token(Vocabulary::kReserved + 1), "a");
  EXPECT_EQ(v.id("d"), Vocabulary::kUnk);
  EXPECT_EQ(v.encode({"a", "zzz"}), (std::vector<int>{Vocabulary::kReserved + 1, Vocabulary::kUnk}));
  auto same = Vocabulary::from_tokens(v.tokens(), 2);
  EXPECT_EQ(same, v);
  EXPECT_EQ(same.hash(), v.hash());
  EXPECT_NE(Vocabulary::build({{"x"}}, 1).hash(), v.hash());
}
