#include "codemine/language.hpp"

#include <algorithm>

#include "codemine/util.hpp"

namespace codemine {

bool LanguageProfile::is_keyword(const std::string& word) const {
  return std::find(keywords.begin(), keywords.end(), word) != keywords.end();
}

const LanguageProfile& python_profile() {
  static const LanguageProfile p = [] {
    LanguageProfile p;
    p.tag = "python";
    p.indentation_sensitive = true;
    p.hash_comments = true;
    p.slash_comments = false;
    p.python_strings = true;
    p.value_feature = true;
    p.import_prefixes = {"import ", "from "};
    p.prompts = {">>> ", "... ", ">>>", "..."};
    p.keywords = {"False", "None",   "True",    "and",      "as",     "assert", "async",
                  "await", "break",  "class",   "continue", "def",    "del",    "elif",
                  "else",  "except", "finally", "for",      "from",   "global", "if",
                  "import", "in",    "is",      "lambda",   "nonlocal", "not",  "or",
                  "pass",  "raise",  "return",  "try",      "while",  "with",   "yield",
                  "print", "exec"};
    p.statement_keywords = {"if",     "elif",   "else",  "for",   "while",  "def",
                            "class",  "return", "with",  "assert", "lambda", "try",
                            "except", "finally", "raise", "yield", "import", "from",
                            "del",    "global", "nonlocal", "print", "async", "await"};
    p.value_keywords = {"None", "True", "False"};
    p.clause_keywords = {"elif", "else", "except", "finally"};
    return p;
  }();
  return p;
}

const LanguageProfile& java_profile() {
  static const LanguageProfile p = [] {
    LanguageProfile p;
    p.tag = "java";
    p.import_prefixes = {"import "};
    p.prompts = {"jshell> ", "   ...> "};
    p.keywords = {"abstract", "assert",    "boolean",  "break",     "byte",    "case",
                  "catch",    "char",      "class",    "const",     "continue", "default",
                  "do",       "double",    "else",     "enum",      "extends", "final",
                  "finally",  "float",     "for",      "goto",      "if",      "implements",
                  "import",   "instanceof", "int",     "interface", "long",    "native",
                  "new",      "package",   "private",  "protected", "public",  "return",
                  "short",    "static",    "strictfp", "super",     "switch",  "synchronized",
                  "this",     "throw",     "throws",   "transient", "try",     "void",
                  "volatile", "while",     "true",     "false",     "null",    "var"};
    p.statement_keywords = {"if",     "else",  "for",    "while", "do",     "switch",
                            "case",   "return", "throw", "try",   "catch",  "finally",
                            "import", "package", "class", "interface", "enum", "assert",
                            "break",  "continue", "synchronized"};
    p.value_keywords = {"true", "false", "null", "this"};
    p.clause_keywords = {"else", "catch", "finally"};
    return p;
  }();
  return p;
}

LanguageProfile profile_for(const std::string& tag) {
  const std::string t = to_lower(tag);
  if (t == "python") return python_profile();
  if (t == "java") return java_profile();
  LanguageProfile p = java_profile();
  p.tag = t;
  p.prompts.clear();
  p.import_prefixes = {"import ", "#include ", "using ", "require "};
  return p;
}

}  // namespace codemine
