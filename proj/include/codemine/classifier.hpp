#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codemine/candidates.hpp"
#include "codemine/correspondence.hpp"
#include "codemine/structural.hpp"

namespace codemine {

enum class FeatureSet { full, structural, correspondence };

std::string feature_set_name(FeatureSet s);
FeatureSet parse_feature_set(std::string_view name);

struct FeatureOptions {
  FeatureSet set = FeatureSet::full;
  bool cross_lingual = false;  // drops IsValue, which only exists for Python
};

/// Every known feature: the structural ones followed by the correspondence ones.
const std::vector<std::string>& feature_registry();
/// Registry view selected by the options, in registry order.
std::vector<std::string> feature_names(const FeatureOptions& options);

struct PairFeatureVector {
  CandidateKey key;
  std::map<std::string, double> values;
  int label = 0;  // +1, -1, or 0 when unlabeled
};

using KeyedStructural = std::vector<std::pair<CandidateKey, StructuralFeatureVector>>;
using KeyedCorrespondence = std::vector<std::pair<CandidateKey, CorrespondenceScores>>;

/// Joins the two feature sources on candidate key. Sources not needed by the
/// selected feature set may be empty; a key present in only one of the
/// needed sources is an error. Output is ordered by key.
std::vector<PairFeatureVector> assemble_features(const KeyedStructural& structural,
                                                 const KeyedCorrespondence& correspondence,
                                                 const FeatureOptions& options);

json pair_features_to_json(const PairFeatureVector& v);
PairFeatureVector pair_features_from_json(const json& j);

struct ClassifierConfig {
  double l2 = 1.0;
  bool class_weighting = true;
  std::uint64_t seed = 1;
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
};

/// Column statistics; a column with std below 1e-12 is constant and
/// standardizes to 0.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;

  static Standardization compute(const std::vector<std::vector<double>>& rows);
  bool constant(std::size_t i) const { return std[i] < 1e-12; }
  double apply(std::size_t i, double x) const { return constant(i) ? 0.0 : (x - mean[i]) / std[i]; }
};

struct ClassifierModel {
  std::vector<std::string> features;
  std::vector<double> weights;
  double bias = 0.0;
  Standardization stats;
  ClassifierConfig config;
  std::vector<double> objective_trace;  // objective after each iteration, start included

  /// Raw feature values in `features` order; absent features read as 0.
  std::vector<double> raw_row(const PairFeatureVector& v) const;
  double decision(const std::vector<double>& raw, const Standardization& stats) const;
  double predict(const PairFeatureVector& v) const;
};

ClassifierModel fit(const std::vector<PairFeatureVector>& labeled,
                    const std::vector<std::string>& features, const ClassifierConfig& config);

std::string render_classifier(const ClassifierModel& model, const OutputMeta& meta);
ClassifierModel parse_classifier(const std::string& text, const std::string& origin,
                                 OutputMeta* meta = nullptr);

struct FoldPrediction {
  CandidateKey key;
  int fold = 0;
  double probability = 0.0;
  int label = 0;
};

json prediction_to_json(const FoldPrediction& p);
FoldPrediction prediction_from_json(const json& j);

/// Fold of each question: sorted ids are shuffled with the seed and dealt
/// round-robin into k folds.
std::map<std::int64_t, int> assign_folds(std::vector<std::int64_t> question_ids, int k,
                                         std::uint64_t seed);

struct CrossValidationResult {
  std::vector<ClassifierModel> models;
  std::vector<FoldPrediction> predictions;  // ordered by key
  std::map<std::int64_t, int> folds;
};

CrossValidationResult cross_validate(const std::vector<PairFeatureVector>& labeled,
                                     const std::vector<std::string>& features, int k,
                                     const ClassifierConfig& config, int jobs = 1);

/// Applies a model to another language's vectors, standardizing with
/// statistics recomputed on those vectors.
std::vector<FoldPrediction> transfer_apply(const ClassifierModel& model,
                                           const std::vector<PairFeatureVector>& vectors);

}  // namespace codemine
