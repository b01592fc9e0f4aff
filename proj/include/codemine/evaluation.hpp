#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codemine/annotation.hpp"
#include "codemine/candidates.hpp"
#include "codemine/threads.hpp"

namespace codemine {

struct GoldLabel {
  CandidateKey key;
  int label = -1;  // +1 or -1
};

struct LabelOptions {
  /// When set, a candidate also counts as positive if the Jaccard overlap of
  /// its line set with an annotated span in the same block reaches the
  /// threshold. Off by default: matching is exact.
  bool overlap = false;
  double jaccard_threshold = 0.5;
};

/// Labels candidates of questions that carry at least one ok annotation;
/// candidates of other questions are left out. Spans outside their block
/// (checked when the question's thread is given) raise UserError.
std::vector<GoldLabel> label_candidates(const std::vector<CandidateKey>& candidates,
                                        const std::vector<Annotation>& annotations,
                                        const std::map<std::int64_t, const QuestionThread*>& threads,
                                        const LabelOptions& options = {});

struct ScoredItem {
  CandidateKey key;
  double score = 0.0;
  int label = -1;
};

/// Descending score, ties by ascending key.
void rank_items(std::vector<ScoredItem>& items);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

/// (recall, precision) after each prefix k = 1..N of the ranked list.
std::vector<CurvePoint> pr_curve(const std::vector<ScoredItem>& ranked);
/// (fpr, tpr) starting at (0, 0), then after each prefix k = 1..N.
std::vector<CurvePoint> roc_curve(const std::vector<ScoredItem>& ranked);
/// Trapezoidal area under a curve given in order.
double auc(const std::vector<CurvePoint>& curve);

enum class BaselineKind { accept_only, all, random };
std::string baseline_name(BaselineKind k);

struct BaselineCandidate {
  CandidateKey key;
  bool accepted = false;     // candidate lies in the accepted answer
  int answer_blocks = 0;     // code blocks in its answer
  bool full_block = false;   // candidate spans its whole block
};

BaselineCandidate baseline_candidate(const CandidateSnippet& c, const QuestionThread& thread);
BaselineCandidate baseline_candidate_from_json(const json& j);

/// Scores for every candidate, in key order.
std::vector<double> baseline_scores(const std::vector<BaselineCandidate>& candidates,
                                    BaselineKind kind, std::uint64_t seed);

struct SystemResult {
  std::string name;
  std::size_t items = 0;
  std::size_t positives = 0;
  double auc = 0.0;
  std::vector<CurvePoint> pr;
  std::vector<CurvePoint> roc;
};

/// Ranks the items and computes both curves. Needs both classes.
SystemResult evaluate_system(const std::string& name, std::vector<ScoredItem> items);

json report_to_json(const std::vector<SystemResult>& systems, const OutputMeta& meta);
std::string render_curves_csv(const std::vector<SystemResult>& systems, const OutputMeta& meta);
/// SVG line chart of one curve type ("pr" or "roc") for all systems.
std::string render_svg(const std::vector<SystemResult>& systems, const std::string& curve,
                       const OutputMeta& meta);

}  // namespace codemine
