#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codemine/language.hpp"

namespace codemine {

enum class TokenizeMode { natural_language, code };

/// NL mode lowercases and splits on whitespace and punctuation, keeping each
/// punctuation character as a token. Code mode preserves case and splits on
/// whitespace, operators, brackets and dots, keeping string and number
/// literals whole; comment text is split into words after its marker.
std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode,
                                  const LanguageProfile& profile = python_profile());

}  // namespace codemine
