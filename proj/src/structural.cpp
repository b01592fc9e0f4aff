#include "codemine/structural.hpp"

#include <algorithm>

#include "codemine/lexer.hpp"
#include "codemine/util.hpp"

namespace codemine {

namespace {

std::size_t index_of(std::string_view name) {
  auto it = std::find(kStructuralFeatureNames.begin(), kStructuralFeatureNames.end(), name);
  if (it == kStructuralFeatureNames.end())
    throw std::out_of_range("unknown structural feature " + std::string(name));
  return static_cast<std::size_t>(it - kStructuralFeatureNames.begin());
}

constexpr std::array<std::string_view, 7> kBucketNames = {
    "NumLines1", "NumLines2", "NumLines3", "NumLines4to5", "NumLines6to10", "NumLines11to15",
    "NumLinesGT15"};

bool contains(const std::vector<std::string>& list, const std::string& word) {
  return std::find(list.begin(), list.end(), word) != list.end();
}

// Non-blank lines that hold code (not only a comment).
std::vector<std::vector<Token>> statement_lines(std::string_view text,
                                                const LanguageProfile& profile) {
  std::vector<std::vector<Token>> out;
  for (const auto& line : split_lines(text)) {
    auto lex = lex_code(line, profile);
    std::vector<Token> code;
    for (auto& t : lex.tokens)
      if (t.kind != TokenKind::comment) code.push_back(std::move(t));
    if (!code.empty()) out.push_back(std::move(code));
  }
  return out;
}

}  // namespace

bool StructuralFeatureVector::get(std::string_view name) const { return values[index_of(name)]; }

void StructuralFeatureVector::set(std::string_view name, bool value) {
  values[index_of(name)] = value;
}

std::map<std::string, double> StructuralFeatureVector::to_map() const {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < values.size(); ++i)
    m[std::string(kStructuralFeatureNames[i])] = values[i] ? 1.0 : 0.0;
  return m;
}

int num_lines_bucket(int n) {
  if (n <= 1) return 0;
  if (n == 2) return 1;
  if (n == 3) return 2;
  if (n <= 5) return 3;
  if (n <= 10) return 4;
  if (n <= 15) return 5;
  return 6;
}

bool detect_assignment(std::string_view text, const LanguageProfile& profile) {
  auto lines = statement_lines(text, profile);
  if (lines.empty()) return false;
  const auto& tokens = lines.front();
  if (tokens.front().kind == TokenKind::identifier &&
      contains(profile.statement_keywords, tokens.front().text))
    return false;
  int depth = 0;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::open) ++depth;
    else if (t.kind == TokenKind::close) --depth;
    else if (depth == 0 && t.kind == TokenKind::identifier && t.text == "lambda") return false;
    else if (depth == 0 && t.kind == TokenKind::op && t.text == "=") return true;
  }
  return false;
}

namespace {

// Parses a value expression starting at tokens[i]; advances i past it.
bool parse_value(const std::vector<Token>& tokens, std::size_t& i, const LanguageProfile& profile,
                 bool allow_identifiers);

bool parse_atom(const std::vector<Token>& tokens, std::size_t& i, const LanguageProfile& profile,
                bool allow_identifiers) {
  if (i >= tokens.size()) return false;
  const Token& t = tokens[i];
  if (t.kind == TokenKind::op && (t.text == "-" || t.text == "+") && i + 1 < tokens.size() &&
      tokens[i + 1].kind == TokenKind::number) {
    i += 2;
    return true;
  }
  if (t.kind == TokenKind::number) {
    ++i;
    return true;
  }
  if (t.kind == TokenKind::string) {
    while (i < tokens.size() && tokens[i].kind == TokenKind::string) ++i;
    return true;
  }
  if (t.kind == TokenKind::identifier) {
    if (contains(profile.value_keywords, t.text)) {
      ++i;
      return true;
    }
    if (!allow_identifiers || profile.is_keyword(t.text)) return false;
    ++i;
    while (i + 1 < tokens.size() && tokens[i].kind == TokenKind::op && tokens[i].text == "." &&
           tokens[i + 1].kind == TokenKind::identifier && !profile.is_keyword(tokens[i + 1].text))
      i += 2;
    return true;
  }
  if (t.kind == TokenKind::open) {
    const std::string close = t.text == "(" ? ")" : t.text == "[" ? "]" : "}";
    ++i;
    while (i < tokens.size() && !(tokens[i].kind == TokenKind::close)) {
      if (!parse_value(tokens, i, profile, allow_identifiers)) return false;
      if (i < tokens.size() && tokens[i].kind == TokenKind::op &&
          (tokens[i].text == "," || tokens[i].text == ":"))
        ++i;
      else if (i < tokens.size() && tokens[i].kind != TokenKind::close)
        return false;
    }
    if (i >= tokens.size() || tokens[i].text != close) return false;
    ++i;
    return true;
  }
  return false;
}

bool parse_value(const std::vector<Token>& tokens, std::size_t& i, const LanguageProfile& profile,
                 bool allow_identifiers) {
  return parse_atom(tokens, i, profile, allow_identifiers);
}

}  // namespace

bool detect_value(std::string_view text, const LanguageProfile& profile) {
  auto lines = statement_lines(text, profile);
  if (lines.size() != 1) return false;
  auto tokens = lines.front();
  if (!tokens.empty() && tokens.back().kind == TokenKind::op && tokens.back().text == ";")
    tokens.pop_back();
  if (tokens.empty()) return false;
  std::size_t i = 0;
  if (!parse_value(tokens, i, profile, true)) return false;
  return i == tokens.size();
}

StructuralFeatureVector extract_structural(const CandidateSnippet& c, const QuestionThread& thread,
                                           const LanguageProfile& profile) {
  if (c.key.question_id != thread.question_id)
    throw FeatureError("candidate " + c.key.to_string() + " is not from question " +
                       std::to_string(thread.question_id));
  const Answer* answer = thread.find_answer(c.key.answer_id);
  if (!answer) throw FeatureError("candidate " + c.key.to_string() + ": answer not in thread");
  const CodeBlock* block = nullptr;
  for (const auto& b : answer->blocks)
    if (b.block_index == c.key.block_index) block = &b;
  if (!block) throw FeatureError("candidate " + c.key.to_string() + ": block not in answer");
  const int k = static_cast<int>(block->lines.size());
  if (c.key.line_start < 1 || c.key.line_end < c.key.line_start || c.key.line_end > k)
    throw FeatureError("candidate " + c.key.to_string() + ": span outside block of " +
                       std::to_string(k) + " lines");

  StructuralFeatureVector f;
  const bool start = c.key.line_start == 1;
  const bool end = c.key.line_end == k;
  const int n = c.line_count();
  f.set("StartOfBlock", start);
  f.set("EndOfBlock", end);
  f.set("FullBlock", start && end);

  bool has_import = false;
  for (const auto& line : split_lines(c.normalized_text)) {
    std::string l = trim(line);
    for (const auto& prefix : profile.import_prefixes)
      if (starts_with(l, prefix)) has_import = true;
  }
  f.set("ContainsImport", has_import);
  const bool assign = detect_assignment(c.normalized_text, profile);
  f.set("StartsWithAssignment", assign);
  f.set("IsValue", profile.value_feature && detect_value(c.normalized_text, profile));
  f.set("AcceptedAns", answer->accepted);
  f.set("PostRank1", answer->rank == 1);
  f.set("PostRank2", answer->rank == 2);
  f.set("PostRank3", answer->rank == 3);
  f.set("OnlyBlock", answer->blocks.size() == 1);
  f.set(kBucketNames[static_cast<std::size_t>(num_lines_bucket(n))], true);
  f.set("ComboAcceptedOnlyWhole", answer->accepted && answer->blocks.size() == 1 && start && end);
  f.set("ComboNoAssignEndOfBlock", !assign && end);
  f.set("ComboNoAssignOneLine", !assign && n == 1);
  return f;
}

json structural_to_json(const CandidateKey& key, const StructuralFeatureVector& f) {
  json j = key_to_json(key);
  json features = json::object();
  for (std::size_t i = 0; i < f.values.size(); ++i)
    features[std::string(kStructuralFeatureNames[i])] = f.values[i] ? 1 : 0;
  j["features"] = features;
  return j;
}

StructuralFeatureVector structural_from_json(const json& j) {
  StructuralFeatureVector f;
  const json& features = j.at("features");
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = features.at(std::string(kStructuralFeatureNames[i])).get<int>() != 0;
  return f;
}

}  // namespace codemine
