#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "codemine/candidates.hpp"
#include "codemine/jsonl.hpp"
#include "codemine/language.hpp"
#include "codemine/threads.hpp"

namespace codemine {

inline constexpr std::array<std::string_view, 21> kStructuralFeatureNames = {
    "FullBlock",     "StartOfBlock",  "EndOfBlock",     "ContainsImport",
    "StartsWithAssignment", "IsValue", "AcceptedAns",   "PostRank1",
    "PostRank2",     "PostRank3",     "OnlyBlock",      "NumLines1",
    "NumLines2",     "NumLines3",     "NumLines4to5",   "NumLines6to10",
    "NumLines11to15", "NumLinesGT15", "ComboAcceptedOnlyWhole",
    "ComboNoAssignEndOfBlock", "ComboNoAssignOneLine"};

/// Binary structural features of one (intent, candidate) pair, indexed in the
/// order of kStructuralFeatureNames.
struct StructuralFeatureVector {
  std::array<bool, kStructuralFeatureNames.size()> values{};

  bool get(std::string_view name) const;
  void set(std::string_view name, bool value);
  std::map<std::string, double> to_map() const;

  bool operator==(const StructuralFeatureVector&) const = default;
};

class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws FeatureError when the candidate does not belong to the thread.
StructuralFeatureVector extract_structural(const CandidateSnippet& candidate,
                                           const QuestionThread& thread,
                                           const LanguageProfile& profile);

/// True iff the first statement-like line is a simple assignment: a single
/// '=' at bracket depth 0, not part of a comparison or augmented operator.
bool detect_assignment(std::string_view text, const LanguageProfile& profile);

/// True iff the text is one line holding only an identifier, attribute chain,
/// or literal (including container displays of such values).
bool detect_value(std::string_view text, const LanguageProfile& profile);

/// Bucket index 0..6 for {1},{2},{3},{4,5},{6..10},{11..15},{16+}.
int num_lines_bucket(int lines);

json structural_to_json(const CandidateKey& key, const StructuralFeatureVector& f);
StructuralFeatureVector structural_from_json(const json& j);

}  // namespace codemine
