#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "codemine/annotation.hpp"

using namespace codemine;

namespace {

QuestionThread fixture_thread() {
  QuestionThread t;
  t.question_id = 5;
  t.intent = "How to merge two dicts";
  t.view_count = 100;
  Answer a;
  a.answer_id = 50;
  a.rank = 1;
  a.blocks.push_back(CodeBlock{50, 0, {"z = x.copy()", "z.update(y)"}, 1, true});
  a.blocks.push_back(CodeBlock{50, 1, {"z = {**x, **y}"}, 1, true});
  t.answers.push_back(a);
  return t;
}

Annotation good() {
  Annotation a;
  a.question_id = 5;
  a.answer_id = 50;
  a.intent = "How to merge two dicts";
  a.intent_span = TextSpan{7, 22};
  a.snippet_spans = {{0, 1, 2}};
  a.annotator = "ann1";
  a.timestamp = "2018-03-01T10:00:00Z";
  return a;
}

bool has_field(const std::vector<FieldError>& errors, const std::string& prefix) {
  for (const auto& e : errors)
    if (e.field.rfind(prefix, 0) == 0) return true;
  return false;
}

std::string temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("codemine_ann_" + name);
  std::filesystem::remove(p);
  return p.string();
}

}  // namespace

TEST(Annotation, CanonicalJsonRoundTrip) {
  Annotation a = good();
  a.rewritten_intent = "merge dict x and y";
  a.context_spans = {{1, 1, 1}};
  json j = annotation_to_json(a);
  for (const char* f : {"question_id", "answer_id", "intent", "intent_span", "rewritten_intent", "context_spans",
                        "snippet_spans", "status", "annotator", "timestamp"})
    EXPECT_TRUE(j.contains(f)) << f;
  EXPECT_EQ(j.size(), 10u);
  std::vector<FieldError> errors;
  EXPECT_EQ(annotation_from_json(j, errors), a);
  EXPECT_TRUE(errors.empty());
  json absent = annotation_to_json(good());
  EXPECT_TRUE(absent["rewritten_intent"].is_null());
}

TEST(Annotation, ShapeErrors) {
  std::vector<FieldError> errors;
  annotation_from_json(json{{"question_id", "five"}, {"bogus", 1}}, errors);
  EXPECT_TRUE(has_field(errors, "question_id"));
  EXPECT_TRUE(has_field(errors, "bogus"));
  errors.clear();
  json j = annotation_to_json(good());
  j["status"] = "maybe";
  annotation_from_json(j, errors);
  EXPECT_TRUE(has_field(errors, "status"));
  errors.clear();
  j = annotation_to_json(good());
  j["snippet_spans"] = json::array({{{"block_index", 0}, {"line_start", 1}}});
  annotation_from_json(j, errors);
  EXPECT_TRUE(has_field(errors, "snippet_spans"));
  errors.clear();
  annotation_from_json(json::array(), errors);
  EXPECT_FALSE(errors.empty());
}

TEST(Annotation, Invariants) {
  auto t = fixture_thread();
  EXPECT_TRUE(validate_annotation(good(), &t).empty());

  auto a = good();
  a.snippet_spans = {{0, 1, 3}};
  auto e = validate_annotation(a, &t);
  EXPECT_TRUE(has_field(e, "snippet_spans[0]"));

  a = good();
  a.status = AnnotationStatus::not_applicable;
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "snippet_spans"));
  a.snippet_spans.clear();
  EXPECT_TRUE(validate_annotation(a, &t).empty());
  a.answer_id = 0;  // question-level verdict
  EXPECT_TRUE(validate_annotation(a, &t).empty());

  a = good();
  a.snippet_spans.clear();
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "snippet_spans"));

  a = good();
  a.context_spans = {{0, 2, 2}};
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "context_spans[0]"));
  a.context_spans = {{1, 1, 1}};
  EXPECT_TRUE(validate_annotation(a, &t).empty());

  a = good();
  a.answer_id = 51;
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "answer_id"));
  a = good();
  a.intent_span = TextSpan{3, 99};
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "intent_span"));
  a = good();
  a.snippet_spans = {{2, 1, 1}};
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "snippet_spans[0].block_index"));
  a = good();
  a.annotator = " ";
  EXPECT_TRUE(has_field(validate_annotation(a, &t), "annotator"));
  a = good();
  a.snippet_spans = {{0, 2, 1}};
  EXPECT_TRUE(has_field(validate_annotation(a, nullptr), "snippet_spans[0]"));
}

TEST(Annotation, StoreConflictOverwriteAndReplay) {
  const std::string path = temp_path("log.jsonl");
  {
    AnnotationStore s(path);
    EXPECT_EQ(s.put(good(), false), AnnotationStore::PutResult::created);
    EXPECT_EQ(s.put(good(), false), AnnotationStore::PutResult::conflict);
    auto b = good();
    b.snippet_spans = {{1, 1, 1}};
    EXPECT_EQ(s.put(b, true), AnnotationStore::PutResult::replaced);
    auto other = good();
    other.annotator = "ann2";
    EXPECT_EQ(s.put(other, false), AnnotationStore::PutResult::created);
    EXPECT_EQ(s.size(), 2u);
  }
  AnnotationStore replay(path);
  ASSERT_EQ(replay.size(), 2u);
  EXPECT_EQ(replay.all()[0].snippet_spans[0].block_index, 1);  // last write wins
  EXPECT_TRUE(replay.finished(5, "ann1"));
  EXPECT_FALSE(replay.finished(5, "ann3"));
  std::filesystem::remove(path);
}

TEST(Annotation, ExportOnlyOk) {
  AnnotationStore s;
  auto ok = good();
  auto unsure = good();
  unsure.annotator = "b";
  unsure.status = AnnotationStatus::not_sure;
  auto na = good();
  na.annotator = "c";
  na.status = AnnotationStatus::not_applicable;
  na.snippet_spans.clear();
  for (const auto& a : {ok, unsure, na}) s.put(a, false);
  auto gold = s.export_gold();
  ASSERT_EQ(gold.size(), 1u);
  EXPECT_EQ(gold[0], ok);
  EXPECT_FALSE(s.finished(5, "b"));
  EXPECT_TRUE(s.finished(5, "c"));
  EXPECT_EQ(s.counts_by_status().at("not-sure"), 1u);
  EXPECT_EQ(render_annotations(AnnotationStore().export_gold()), "");
}

TEST(Annotation, LargeExportLineCount) {
  AnnotationStore s;
  for (int i = 1; i <= 527; ++i) {
    auto a = good();
    a.question_id = i;
    s.put(a, false);
  }
  auto text = render_annotations(s.export_gold());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 527);
  auto back = parse_annotations(text, "mem");
  EXPECT_EQ(back.size(), 527u);
  EXPECT_EQ(render_annotations(back), text);
}

TEST(Sampling, DegenerateWeights) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(weighted_sample({{1, 100}, {2, 0}, {3, 0}}, 1, seed), (std::vector<std::int64_t>{1}));
  EXPECT_EQ(weighted_sample({{3, 0}, {1, 0}, {2, 0}}, 3, 1), (std::vector<std::int64_t>{1, 2, 3}));
}

TEST(Sampling, Deterministic) {
  std::vector<QuestionThread> threads;
  for (int i = 1; i <= 50; ++i) {
    QuestionThread t;
    t.question_id = i;
    t.view_count = (i * 37) % 101;
    threads.push_back(t);
  }
  auto a = build_sampling_plan(threads, "python", 9, 5, 10);
  auto b = build_sampling_plan(threads, "python", 9, 5, 10);
  EXPECT_EQ(a.fixed, b.fixed);
  EXPECT_EQ(a.sampled, b.sampled);
  EXPECT_EQ(a.fixed.size(), 5u);
  EXPECT_EQ(a.sampled.size(), 10u);
  EXPECT_EQ(a.fixed[0], 30);  // 30 * 37 % 101 = 100, the most viewed
  auto back = plan_from_json(plan_to_json(a));
  EXPECT_EQ(back.order(), a.order());
}

TEST(Sampling, FrequencyOracle) {
  std::map<std::int64_t, int> counts;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    for (auto id : weighted_sample({{1, 1}, {2, 1}, {3, 1}, {4, 1}}, 2, static_cast<std::uint64_t>(t)))
      ++counts[id];
  const double sigma = std::sqrt(trials * 0.5 * 0.5);
  for (std::int64_t id = 1; id <= 4; ++id) EXPECT_NEAR(counts[id], 5000, 3 * sigma) << id;
}

TEST(Sampling, ProportionalToViews) {
  // first draw of a single item: P(i) = w_i / sum w
  std::map<std::int64_t, int> counts;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t)
    ++counts[weighted_sample({{1, 1}, {2, 3}, {3, 6}}, 1, static_cast<std::uint64_t>(t) + 77)[0]];
  const double expect[] = {0.1, 0.3, 0.6};
  for (int i = 0; i < 3; ++i) {
    const double p = expect[i];
    EXPECT_NEAR(counts[i + 1], trials * p, 3 * std::sqrt(trials * p * (1 - p)));
  }
}
