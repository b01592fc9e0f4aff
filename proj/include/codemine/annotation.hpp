#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <tuple>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "codemine/jsonl.hpp"
#include "codemine/threads.hpp"
#include "codemine/util.hpp"

namespace codemine {

struct LineSpan {
  int block_index = 0;  // 0-based within the answer
  int line_start = 0;   // 1-based, inclusive
  int line_end = 0;

  bool operator==(const LineSpan&) const = default;
};

/// Byte offsets [start, end) of the intent inside the question title.
struct TextSpan {
  int start = 0;
  int end = 0;

  bool operator==(const TextSpan&) const = default;
};

enum class AnnotationStatus { ok, not_applicable, not_sure };

std::string status_name(AnnotationStatus s);
std::optional<AnnotationStatus> parse_status(std::string_view name);

struct Annotation {
  std::int64_t question_id = 0;
  std::int64_t answer_id = 0;  // 0 allowed when status is not ok and no spans are given
  std::string intent;
  std::optional<TextSpan> intent_span;
  std::optional<std::string> rewritten_intent;
  std::vector<LineSpan> context_spans;
  std::vector<LineSpan> snippet_spans;
  AnnotationStatus status = AnnotationStatus::ok;
  std::string annotator;
  std::string timestamp;

  bool operator==(const Annotation&) const = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// Canonical JSON form; every field is always present.
json annotation_to_json(const Annotation& a);
/// Shape and type checks only; problems are appended to `errors`.
Annotation annotation_from_json(const json& j, std::vector<FieldError>& errors);

/// Invariant checks against the question's thread (may be null when unknown,
/// which skips the bounds checks).
std::vector<FieldError> validate_annotation(const Annotation& a, const QuestionThread* thread);

/// Append-only JSON-lines log, replayed on construction; later records for
/// the same (question, answer, annotator) replace earlier ones.
class AnnotationStore {
 public:
  enum class PutResult { created, replaced, conflict };

  /// An empty path keeps everything in memory.
  explicit AnnotationStore(std::string log_path = "");

  PutResult put(const Annotation& a, bool overwrite);
  std::vector<Annotation> all() const;  // ordered by (question, answer, annotator)
  /// status ok only, ordered by (question, answer, annotator).
  std::vector<Annotation> export_gold() const;
  /// True when the annotator finished the question (ok or not-applicable).
  bool finished(std::int64_t question_id, const std::string& annotator) const;
  std::map<std::string, std::size_t> counts_by_status() const;
  std::size_t size() const;

 private:
  using Key = std::tuple<std::int64_t, std::int64_t, std::string>;
  std::string path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Annotation> records_;
  std::ofstream log_;
};

std::string render_annotations(const std::vector<Annotation>& annotations);
std::vector<Annotation> parse_annotations(const std::string& text, const std::string& origin);
std::vector<Annotation> read_annotations(const std::string& path);

struct SamplingPlan {
  std::string language;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> fixed;    // top questions by view count
  std::vector<std::int64_t> sampled;  // weighted draw from the rest
  std::vector<std::string> warnings;

  std::vector<std::int64_t> order() const;  // fixed then sampled
};

/// Draws `count` distinct ids with probability proportional to weight, as
/// the largest keys log(u)/w (u uniform per id, drawn in ascending id order).
/// Zero-weight ids come last, in ascending id order.
std::vector<std::int64_t> weighted_sample(std::vector<std::pair<std::int64_t, double>> items,
                                          std::size_t count, std::uint64_t seed);

SamplingPlan build_sampling_plan(const std::vector<QuestionThread>& threads,
                                 const std::string& language, std::uint64_t seed,
                                 std::size_t fixed_count = 100, std::size_t sample_count = 1000);

json plan_to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const json& j);

}  // namespace codemine
