#pragma once

#include <string>
#include <vector>

namespace codemine {

/// Per-language knobs shared by the lexer, validators and structural features.
struct LanguageProfile {
  std::string tag;
  bool indentation_sensitive = false;
  bool hash_comments = false;        // '#' line comments
  bool slash_comments = true;        // '//' and '/* */'
  bool python_strings = false;       // prefixes, triple quotes, single-quoted strings
  bool value_feature = false;        // IsValue is computed
  std::vector<std::string> import_prefixes;
  std::vector<std::string> prompts;  // interpreter prompts stripped by normalization
  std::vector<std::string> keywords;
  std::vector<std::string> statement_keywords;  // lines starting with these are not assignments
  std::vector<std::string> value_keywords;      // keywords that are values (None, true, ...)
  std::vector<std::string> clause_keywords;     // continue an earlier compound statement

  bool is_keyword(const std::string& word) const;
};

const LanguageProfile& python_profile();
const LanguageProfile& java_profile();
/// Profile for a tag; unknown tags get a brace-language profile without IsValue.
LanguageProfile profile_for(const std::string& tag);

}  // namespace codemine
