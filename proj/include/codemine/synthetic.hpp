#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codemine/annotation.hpp"

namespace codemine {

/// Generator for small Stack Overflow style dumps with planted gold snippets.
/// Annotated questions follow shared layout regularities in every language:
/// the gold snippet is the line(s) implementing the asked operation, placed
/// among setup, import and print lines, while other answers implement an
/// unrelated operation on the same variable.
struct SyntheticOptions {
  std::string language = "python";  // python or java
  std::uint64_t seed = 1;
  int annotated_questions = 20;
  int corpus_questions = 400;
  std::int64_t first_id = 1000;
};

struct SyntheticDataset {
  std::string posts_xml;
  std::vector<Annotation> gold;
  std::vector<std::int64_t> annotated_ids;
  /// Questions the corpus builder must keep: tagged, how-to, accepted answer
  /// with exactly one code block. Counted while generating.
  std::size_t expected_corpus_pairs = 0;
};

SyntheticDataset make_synthetic(const SyntheticOptions& options);

}  // namespace codemine
