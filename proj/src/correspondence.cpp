#include "codemine/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "codemine/trainer.hpp"

namespace codemine {

double CorrespondenceScores::get(int i) const {
  switch (i) {
    case 0: return s_given_i;
    case 1: return i_given_s;
    case 2: return prob_max;
    case 3: return prob_min;
    case 4: return norm_s_given_i;
    case 5: return norm_i_given_s;
  }
  throw std::out_of_range("correspondence feature index");
}

std::vector<double> z_scores(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(values.size()));
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

namespace {

std::vector<int> ids_or_unk(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids = vocab.encode(tokens);
  if (ids.empty()) ids.push_back(Vocabulary::kUnk);
  return ids;
}

}  // namespace

std::vector<CorrespondenceScores> score_page(const EncDecModel& s_given_i,
                                             const EncDecModel& i_given_s,
                                             const std::string& intent,
                                             const std::vector<std::string>& snippets,
                                             const LanguageProfile& profile) {
  if (s_given_i.direction != Direction::snippet_given_intent ||
      i_given_s.direction != Direction::intent_given_snippet)
    throw UserError("score_page needs an i2s and an s2i model");
  std::vector<CorrespondenceScores> out(snippets.size());
  if (snippets.empty()) return out;

  const auto intent_fwd =
      ids_or_unk(s_given_i.source_vocab, intent_tokens(intent, s_given_i.max_source_tokens));
  const auto intent_bwd = i_given_s.target_vocab.encode(intent_tokens(intent, i_given_s.max_target_tokens));
  std::vector<double> a(snippets.size()), b(snippets.size());
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    const auto code_fwd = s_given_i.target_vocab.encode(
        code_tokens(snippets[i], profile, s_given_i.max_target_tokens));
    const auto code_bwd = ids_or_unk(i_given_s.source_vocab,
                                     code_tokens(snippets[i], profile, i_given_s.max_source_tokens));
    a[i] = sequence_log_prob(s_given_i, intent_fwd, code_fwd);
    b[i] = sequence_log_prob(i_given_s, code_bwd, intent_bwd);
  }
  const auto za = z_scores(a), zb = z_scores(b);
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    auto& s = out[i];
    s.s_given_i = a[i];
    s.i_given_s = b[i];
    s.prob_max = std::max(a[i], b[i]);
    s.prob_min = std::min(a[i], b[i]);
    s.norm_s_given_i = za[i];
    s.norm_i_given_s = zb[i];
  }
  return out;
}

json correspondence_to_json(const CandidateKey& key, const CorrespondenceScores& s) {
  json j = key_to_json(key);
  j["s_given_i"] = s.s_given_i;
  j["i_given_s"] = s.i_given_s;
  j["prob_max"] = s.prob_max;
  j["prob_min"] = s.prob_min;
  j["norm_s_given_i"] = s.norm_s_given_i;
  j["norm_i_given_s"] = s.norm_i_given_s;
  return j;
}

CorrespondenceScores correspondence_from_json(const json& j) {
  CorrespondenceScores s;
  s.s_given_i = j.at("s_given_i").get<double>();
  s.i_given_s = j.at("i_given_s").get<double>();
  s.prob_max = j.at("prob_max").get<double>();
  s.prob_min = j.at("prob_min").get<double>();
  s.norm_s_given_i = j.at("norm_s_given_i").get<double>();
  s.norm_i_given_s = j.at("norm_i_given_s").get<double>();
  return s;
}

}  // namespace codemine
