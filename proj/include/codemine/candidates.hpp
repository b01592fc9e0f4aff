#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "codemine/jsonl.hpp"
#include "codemine/language.hpp"
#include "codemine/threads.hpp"

namespace codemine {

inline constexpr int kMaxBlockLines = 200;

struct CandidateKey {
  std::int64_t question_id = 0;
  std::int64_t answer_id = 0;
  int block_index = 0;
  int line_start = 0;  // 1-based, inclusive
  int line_end = 0;

  auto operator<=>(const CandidateKey&) const = default;
  std::string to_string() const;
};

json key_to_json(const CandidateKey& key);
CandidateKey key_from_json(const json& j);

struct CandidateSnippet {
  CandidateKey key;
  std::string text;             // verbatim lines joined with '\n'
  std::string normalized_text;  // interpreter prompts stripped

  int line_count() const { return key.line_end - key.line_start + 1; }
};

/// All line-contiguous fragments of a block ordered by (line_start, line_end).
std::vector<CandidateSnippet> enumerate_candidates(const CodeBlock& block,
                                                   std::int64_t question_id,
                                                   const LanguageProfile& profile);

/// Strips leading interpreter prompts (">>> ", "... ", "In [n]: ", "Out[n]: ",
/// plus language-specific ones) from every line. Idempotent.
std::string normalize_snippet(std::string_view text, const LanguageProfile& profile);

// ---- validation -------------------------------------------------------------

enum class Validity { valid, invalid, unknown };

class SnippetValidator {
 public:
  virtual ~SnippetValidator() = default;
  virtual std::string name() const = 0;
  virtual Validity validate(std::string_view text) const = 0;
};

/// Dependency-free checks: terminated literals and comments, balanced
/// brackets, no dangling block opener or continuation at the end, and (for
/// indentation-sensitive languages) a consistent indentation structure after
/// removing common leading whitespace.
class StructuralValidator : public SnippetValidator {
 public:
  explicit StructuralValidator(LanguageProfile profile) : profile_(std::move(profile)) {}
  std::string name() const override { return "structural"; }
  Validity validate(std::string_view text) const override;

 private:
  Validity validate_indentation(std::string_view text) const;
  LanguageProfile profile_;
};

/// Runs a user command with "{file}" replaced by a temporary file holding the
/// snippet. Exit status 0 means valid, any other status invalid. Failure to
/// run the command at all throws.
class ExternalCommandValidator : public SnippetValidator {
 public:
  explicit ExternalCommandValidator(std::string command_template);
  std::string name() const override { return "external"; }
  Validity validate(std::string_view text) const override;

 private:
  std::string template_;
};

class AcceptAllValidator : public SnippetValidator {
 public:
  std::string name() const override { return "accept-all"; }
  Validity validate(std::string_view) const override { return Validity::valid; }
};

struct ValidationStats {
  std::uint64_t valid = 0;
  std::uint64_t invalid = 0;
  std::uint64_t unknown = 0;
  std::uint64_t crashed = 0;
};

/// Validates the normalized text. Unknown counts as valid only in permissive
/// mode; a throwing validator counts as invalid.
bool validate_candidate(const CandidateSnippet& candidate, const SnippetValidator& validator,
                        bool permissive, ValidationStats* stats = nullptr);

std::unique_ptr<SnippetValidator> make_validator(const std::string& kind,
                                                 const LanguageProfile& profile,
                                                 const std::string& command_template = "");

struct GenerationStats {
  ValidationStats validation;
  std::uint64_t truncated_blocks = 0;
  std::uint64_t enumerated = 0;
};

/// Enumerates and filters candidates for every block of a thread's answers.
std::vector<CandidateSnippet> generate_candidates(const QuestionThread& thread,
                                                  const SnippetValidator& validator,
                                                  const LanguageProfile& profile,
                                                  bool permissive,
                                                  GenerationStats* stats = nullptr);

json candidate_to_json(const CandidateSnippet& c, const QuestionThread& thread);
CandidateSnippet candidate_from_json(const json& j);

/// Text of the lines [start, end] (1-based) of a block.
std::string span_text(const CodeBlock& block, int line_start, int line_end);

}  // namespace codemine
