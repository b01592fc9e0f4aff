#include "codemine/candidates.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "codemine/lexer.hpp"
#include "codemine/util.hpp"

namespace codemine {

std::string CandidateKey::to_string() const {
  return std::to_string(question_id) + ":" + std::to_string(answer_id) + ":" +
         std::to_string(block_index) + ":" + std::to_string(line_start) + "-" +
         std::to_string(line_end);
}

json key_to_json(const CandidateKey& k) {
  return {{"question_id", k.question_id},
          {"answer_id", k.answer_id},
          {"block_index", k.block_index},
          {"line_start", k.line_start},
          {"line_end", k.line_end}};
}

CandidateKey key_from_json(const json& j) {
  return CandidateKey{j.at("question_id").get<std::int64_t>(), j.at("answer_id").get<std::int64_t>(),
                      j.at("block_index").get<int>(), j.at("line_start").get<int>(),
                      j.at("line_end").get<int>()};
}

std::string span_text(const CodeBlock& block, int line_start, int line_end) {
  std::span<const std::string> lines(block.lines);
  return join_lines(lines.subspan(static_cast<std::size_t>(line_start - 1),
                                  static_cast<std::size_t>(line_end - line_start + 1)));
}

std::vector<CandidateSnippet> enumerate_candidates(const CodeBlock& block,
                                                   std::int64_t question_id,
                                                   const LanguageProfile& profile) {
  const int k = static_cast<int>(block.lines.size());
  std::vector<CandidateSnippet> out;
  out.reserve(static_cast<std::size_t>(k) * (k + 1) / 2);
  for (int start = 1; start <= k; ++start) {
    for (int end = start; end <= k; ++end) {
      CandidateSnippet c;
      c.key = CandidateKey{question_id, block.answer_id, block.block_index, start, end};
      c.text = span_text(block, start, end);
      c.normalized_text = normalize_snippet(c.text, profile);
      out.push_back(std::move(c));
    }
  }
  return out;
}

namespace {

// Length of an IPython-style prompt ("In [12]: ", "Out[3]: ") at the start of
// `line`, or 0.
std::size_t ipython_prompt(std::string_view line) {
  std::size_t i = 0;
  if (starts_with(line, "In")) i = 2;
  else if (starts_with(line, "Out")) i = 3;
  else return 0;
  while (i < line.size() && line[i] == ' ') ++i;
  if (i >= line.size() || line[i] != '[') return 0;
  ++i;
  std::size_t digits = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == digits || i >= line.size() || line[i] != ']') return 0;
  ++i;
  if (i >= line.size() || line[i] != ':') return 0;
  ++i;
  if (i < line.size() && line[i] == ' ') ++i;
  return i;
}

std::string strip_prompts(std::string_view line, const LanguageProfile& profile) {
  while (true) {
    std::size_t n = ipython_prompt(line);
    if (n == 0) {
      for (const auto& p : profile.prompts) {
        // Bare prompts (no trailing space) only match a whole line.
        const bool bare = p.back() != ' ';
        if (bare ? line == p : starts_with(line, p)) {
          n = p.size();
          break;
        }
      }
    }
    if (n == 0) return std::string(line);
    line.remove_prefix(n);
  }
}

}  // namespace

std::string normalize_snippet(std::string_view text, const LanguageProfile& profile) {
  auto lines = split_lines(text);
  for (auto& l : lines) l = strip_prompts(l, profile);
  return join_lines(lines);
}

// ---- structural validation --------------------------------------------------

namespace {

int indentation_width(std::string_view line) {
  int col = 0;
  for (char c : line) {
    if (c == ' ') ++col;
    else if (c == '\t') col = (col / 8 + 1) * 8;
    else break;
  }
  return col;
}

bool matches(const std::string& open, const std::string& close) {
  return (open == "(" && close == ")") || (open == "[" && close == "]") ||
         (open == "{" && close == "}");
}

}  // namespace

Validity StructuralValidator::validate(std::string_view text) const {
  LexResult lex = lex_code(text, profile_);
  if (lex.unterminated_string || lex.unterminated_comment || lex.stray_backslash)
    return Validity::invalid;

  std::vector<const Token*> code;
  for (const auto& t : lex.tokens)
    if (t.kind != TokenKind::comment) code.push_back(&t);
  if (code.empty()) return Validity::invalid;

  std::vector<std::string> stack;
  for (const Token* t : code) {
    if (t->kind == TokenKind::open) {
      stack.push_back(t->text);
    } else if (t->kind == TokenKind::close) {
      if (stack.empty() || !matches(stack.back(), t->text)) return Validity::invalid;
      stack.pop_back();
    }
  }
  if (!stack.empty()) return Validity::invalid;

  const Token& first = *code.front();
  if (first.kind == TokenKind::identifier &&
      std::find(profile_.clause_keywords.begin(), profile_.clause_keywords.end(), first.text) !=
          profile_.clause_keywords.end()) {
    return Validity::invalid;
  }

  const Token& last = *code.back();
  if (profile_.indentation_sensitive) {
    if (last.kind == TokenKind::op && (last.text == ":" || last.text == "\\" || last.text == "," ||
                                       last.text == "@" || last.text == "=" || last.text == "."))
      return Validity::invalid;
    return validate_indentation(text);
  }

  if (last.kind == TokenKind::op) {
    if (last.text == ";") return Validity::valid;
    return Validity::invalid;  // dangling operator
  }
  if (last.kind == TokenKind::close && last.text == "}") return Validity::valid;
  // An expression or a statement missing its terminator; cannot tell without a
  // grammar.
  return Validity::unknown;
}

Validity StructuralValidator::validate_indentation(std::string_view text) const {
  // A logical line starts at the first token on a physical line that is
  // outside brackets, not inside a multi-line literal, and not continued by a
  // trailing backslash on the previous line.
  LexResult lex = lex_code(text, profile_);
  auto lines = split_lines(text);
  auto continued = [&](int line) {
    if (line == 0) return false;
    std::string prev = trim(lines[static_cast<std::size_t>(line - 1)]);
    return !prev.empty() && prev.back() == '\\';
  };

  std::vector<bool> logical_start(lines.size(), false);
  std::vector<bool> ends_with_colon(lines.size(), false);
  int depth = 0;
  int current = -1;     // line of the current logical line's start
  int prev_end = -1;    // last line touched by the previous token
  for (const auto& t : lex.tokens) {
    if (t.kind == TokenKind::comment) continue;
    if (depth == 0 && t.line > prev_end && !continued(t.line)) {
      logical_start[static_cast<std::size_t>(t.line)] = true;
      current = t.line;
    }
    if (t.kind == TokenKind::open) ++depth;
    if (t.kind == TokenKind::close) --depth;
    prev_end = t.line + static_cast<int>(std::count(t.text.begin(), t.text.end(), '\n'));
    if (current >= 0)
      ends_with_colon[static_cast<std::size_t>(current)] = t.kind == TokenKind::op && t.text == ":";
  }

  int base = -1;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (logical_start[i]) {
      int w = indentation_width(lines[i]);
      base = base < 0 ? w : std::min(base, w);
    }
  }

  std::vector<int> levels{0};
  bool expect_indent = false;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!logical_start[i]) continue;
    const int w = indentation_width(lines[i]) - base;
    if (first) {
      if (w != 0) return Validity::invalid;  // first statement deeper than a later one
      first = false;
    } else if (expect_indent) {
      if (w <= levels.back()) return Validity::invalid;
      levels.push_back(w);
    } else if (w > levels.back()) {
      return Validity::invalid;  // unexpected indent
    } else {
      while (w < levels.back()) levels.pop_back();
      if (w != levels.back()) return Validity::invalid;  // inconsistent dedent
    }
    expect_indent = ends_with_colon[i];
  }
  if (expect_indent) return Validity::invalid;
  return Validity::valid;
}

// ---- external validator -----------------------------------------------------

ExternalCommandValidator::ExternalCommandValidator(std::string command_template)
    : template_(std::move(command_template)) {
  if (template_.find("{file}") == std::string::npos)
    throw UserError("validator command must contain {file}: " + template_);
}

Validity ExternalCommandValidator::validate(std::string_view text) const {
  std::string path = (std::filesystem::temp_directory_path() / "codemine-snippet-XXXXXX").string();
  int fd = ::mkstemp(path.data());
  if (fd < 0) throw std::runtime_error("mkstemp failed");
  {
    std::size_t off = 0;
    while (off < text.size()) {
      ssize_t n = ::write(fd, text.data() + off, text.size() - off);
      if (n <= 0) {
        ::close(fd);
        std::filesystem::remove(path);
        throw std::runtime_error("cannot write snippet file");
      }
      off += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }
  std::string cmd = template_;
  for (std::size_t p = cmd.find("{file}"); p != std::string::npos; p = cmd.find("{file}", p))
    cmd.replace(p, 6, "'" + path + "'");
  cmd += " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  std::filesystem::remove(path);
  if (status == -1) throw std::runtime_error("cannot run validator command");
  if (!WIFEXITED(status)) throw std::runtime_error("validator terminated by signal");
  const int code = WEXITSTATUS(status);
  if (code == 126 || code == 127) throw std::runtime_error("validator command not executable");
  return code == 0 ? Validity::valid : Validity::invalid;
}

// ---- driver -----------------------------------------------------------------

bool validate_candidate(const CandidateSnippet& candidate, const SnippetValidator& validator,
                        bool permissive, ValidationStats* stats) {
  Validity v;
  try {
    v = validator.validate(candidate.normalized_text);
  } catch (const std::exception&) {
    if (stats) {
      ++stats->crashed;
      ++stats->invalid;
    }
    return false;
  }
  if (stats) {
    switch (v) {
      case Validity::valid: ++stats->valid; break;
      case Validity::invalid: ++stats->invalid; break;
      case Validity::unknown: ++stats->unknown; break;
    }
  }
  return v == Validity::valid || (v == Validity::unknown && permissive);
}

std::unique_ptr<SnippetValidator> make_validator(const std::string& kind,
                                                 const LanguageProfile& profile,
                                                 const std::string& command_template) {
  if (kind == "structural") return std::make_unique<StructuralValidator>(profile);
  if (kind == "accept-all") return std::make_unique<AcceptAllValidator>();
  if (kind == "external") return std::make_unique<ExternalCommandValidator>(command_template);
  throw UserError("unknown validator '" + kind + "' (structural, external, accept-all)");
}

std::vector<CandidateSnippet> generate_candidates(const QuestionThread& thread,
                                                  const SnippetValidator& validator,
                                                  const LanguageProfile& profile,
                                                  bool permissive, GenerationStats* stats) {
  std::vector<CandidateSnippet> out;
  for (const auto& answer : thread.answers) {
    for (const auto& block : answer.blocks) {
      const CodeBlock* source = &block;
      CodeBlock truncated;
      if (block.lines.size() > static_cast<std::size_t>(kMaxBlockLines)) {
        truncated = block;
        truncated.lines.resize(kMaxBlockLines);
        source = &truncated;
        if (stats) ++stats->truncated_blocks;
      }
      auto candidates = enumerate_candidates(*source, thread.question_id, profile);
      if (stats) stats->enumerated += candidates.size();
      for (auto& c : candidates) {
        if (validate_candidate(c, validator, permissive, stats ? &stats->validation : nullptr))
          out.push_back(std::move(c));
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateSnippet& a, const CandidateSnippet& b) { return a.key < b.key; });
  return out;
}

json candidate_to_json(const CandidateSnippet& c, const QuestionThread& thread) {
  json j = key_to_json(c.key);
  j["text"] = c.text;
  j["normalized_text"] = c.normalized_text;
  if (const Answer* a = thread.find_answer(c.key.answer_id)) {
    j["answer_rank"] = a->rank;
    j["accepted"] = a->accepted;
    j["answer_blocks"] = a->blocks.size();
    for (const auto& b : a->blocks)
      if (b.block_index == c.key.block_index) j["block_lines"] = b.lines.size();
  }
  return j;
}

CandidateSnippet candidate_from_json(const json& j) {
  CandidateSnippet c;
  c.key = key_from_json(j);
  c.text = j.at("text").get<std::string>();
  c.normalized_text = j.at("normalized_text").get<std::string>();
  return c;
}

}  // namespace codemine
