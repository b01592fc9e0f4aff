#pragma once

#include <string>
#include <vector>

#include "codemine/candidates.hpp"
#include "codemine/encdec.hpp"
#include "codemine/language.hpp"

namespace codemine {

inline constexpr const char* kCorrespondenceFeatureNames[6] = {
    "SGivenI", "IGivenS", "ProbMax", "ProbMin", "NormalizedSGivenI", "NormalizedIGivenS"};

struct CorrespondenceScores {
  double s_given_i = 0.0;  // log P(snippet | intent)
  double i_given_s = 0.0;  // log P(intent | snippet)
  double prob_max = 0.0;
  double prob_min = 0.0;
  double norm_s_given_i = 0.0;
  double norm_i_given_s = 0.0;

  double get(int i) const;
};

/// Population z-scores; a column whose std is below 1e-12 maps to zeros.
std::vector<double> z_scores(const std::vector<double>& values);

/// Scores every candidate snippet of one question against its intent with
/// both directional models, then normalizes each direction over the page.
std::vector<CorrespondenceScores> score_page(const EncDecModel& s_given_i,
                                             const EncDecModel& i_given_s,
                                             const std::string& intent,
                                             const std::vector<std::string>& snippets,
                                             const LanguageProfile& profile);

json correspondence_to_json(const CandidateKey& key, const CorrespondenceScores& s);
CorrespondenceScores correspondence_from_json(const json& j);

}  // namespace codemine
