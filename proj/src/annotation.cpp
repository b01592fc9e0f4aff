#include "codemine/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

namespace codemine {

std::string status_name(AnnotationStatus s) {
  switch (s) {
    case AnnotationStatus::ok: return "ok";
    case AnnotationStatus::not_applicable: return "not-applicable";
    case AnnotationStatus::not_sure: return "not-sure";
  }
  return "ok";
}

std::optional<AnnotationStatus> parse_status(std::string_view name) {
  if (name == "ok") return AnnotationStatus::ok;
  if (name == "not-applicable") return AnnotationStatus::not_applicable;
  if (name == "not-sure") return AnnotationStatus::not_sure;
  return std::nullopt;
}

namespace {

json spans_json(const std::vector<LineSpan>& spans) {
  json a = json::array();
  for (const auto& s : spans)
    a.push_back({{"block_index", s.block_index}, {"line_start", s.line_start}, {"line_end", s.line_end}});
  return a;
}

std::vector<LineSpan> spans_from(const json& j, const std::string& field,
                                 std::vector<FieldError>& errors) {
  std::vector<LineSpan> out;
  if (j.is_null()) return out;
  if (!j.is_array()) {
    errors.push_back({field, "must be a list of spans"});
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string name = field + "[" + std::to_string(i) + "]";
    const json& s = j[i];
    if (!s.is_object()) {
      errors.push_back({name, "must be an object with block_index, line_start, line_end"});
      continue;
    }
    LineSpan span;
    bool ok = true;
    for (auto [key, dst] : {std::pair{"block_index", &span.block_index},
                            std::pair{"line_start", &span.line_start},
                            std::pair{"line_end", &span.line_end}}) {
      if (!s.contains(key) || !s[key].is_number_integer()) {
        errors.push_back({name + "." + key, "must be an integer"});
        ok = false;
      } else {
        *dst = s[key].get<int>();
      }
    }
    for (const auto& [key, _] : s.items())
      if (key != "block_index" && key != "line_start" && key != "line_end")
        errors.push_back({name + "." + key, "unknown field"});
    if (ok) out.push_back(span);
  }
  return out;
}

const std::set<std::string> kFields = {"question_id", "answer_id",     "intent",        "intent_span",
                                       "rewritten_intent", "context_spans", "snippet_spans", "status",
                                       "annotator",   "timestamp"};

}  // namespace

json annotation_to_json(const Annotation& a) {
  json j;
  j["question_id"] = a.question_id;
  j["answer_id"] = a.answer_id;
  j["intent"] = a.intent;
  j["intent_span"] = a.intent_span ? json{{"start", a.intent_span->start}, {"end", a.intent_span->end}}
                                   : json(nullptr);
  j["rewritten_intent"] = a.rewritten_intent ? json(*a.rewritten_intent) : json(nullptr);
  j["context_spans"] = spans_json(a.context_spans);
  j["snippet_spans"] = spans_json(a.snippet_spans);
  j["status"] = status_name(a.status);
  j["annotator"] = a.annotator;
  j["timestamp"] = a.timestamp;
  return j;
}

Annotation annotation_from_json(const json& j, std::vector<FieldError>& errors) {
  Annotation a;
  if (!j.is_object()) {
    errors.push_back({"", "annotation must be a JSON object"});
    return a;
  }
  for (const auto& [key, _] : j.items())
    if (!kFields.contains(key)) errors.push_back({key, "unknown field"});

  auto integer = [&](const char* key, std::int64_t& dst, bool required) {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) errors.push_back({key, "is required"});
    } else if (!j[key].is_number_integer()) {
      errors.push_back({key, "must be an integer"});
    } else {
      dst = j[key].get<std::int64_t>();
    }
  };
  auto text = [&](const char* key, std::string& dst, bool required) {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) errors.push_back({key, "is required"});
    } else if (!j[key].is_string()) {
      errors.push_back({key, "must be a string"});
    } else {
      dst = j[key].get<std::string>();
    }
  };
  integer("question_id", a.question_id, true);
  integer("answer_id", a.answer_id, false);
  text("intent", a.intent, true);
  text("annotator", a.annotator, true);
  text("timestamp", a.timestamp, false);
  if (j.contains("rewritten_intent") && !j["rewritten_intent"].is_null()) {
    std::string r;
    text("rewritten_intent", r, false);
    a.rewritten_intent = r;
  }
  if (j.contains("intent_span") && !j["intent_span"].is_null()) {
    const json& s = j["intent_span"];
    if (!s.is_object() || !s.contains("start") || !s.contains("end") ||
        !s["start"].is_number_integer() || !s["end"].is_number_integer())
      errors.push_back({"intent_span", "must be an object with integer start and end"});
    else
      a.intent_span = TextSpan{s["start"].get<int>(), s["end"].get<int>()};
  }
  if (j.contains("context_spans")) a.context_spans = spans_from(j["context_spans"], "context_spans", errors);
  if (j.contains("snippet_spans")) a.snippet_spans = spans_from(j["snippet_spans"], "snippet_spans", errors);
  std::string status;
  text("status", status, true);
  if (!status.empty() || (j.contains("status") && j["status"].is_string())) {
    if (auto s = parse_status(status))
      a.status = *s;
    else
      errors.push_back({"status", "must be one of ok, not-applicable, not-sure"});
  }
  return a;
}

std::vector<FieldError> validate_annotation(const Annotation& a, const QuestionThread* thread) {
  std::vector<FieldError> errors;
  if (a.question_id <= 0) errors.push_back({"question_id", "must be positive"});
  if (trim(a.annotator).empty()) errors.push_back({"annotator", "must not be empty"});
  if (a.answer_id < 0) errors.push_back({"answer_id", "must not be negative"});
  const bool has_spans = !a.context_spans.empty() || !a.snippet_spans.empty();
  switch (a.status) {
    case AnnotationStatus::ok:
      if (trim(a.intent).empty()) errors.push_back({"intent", "must not be empty"});
      if (a.snippet_spans.empty()) errors.push_back({"snippet_spans", "must not be empty when status is ok"});
      break;
    case AnnotationStatus::not_applicable:
      if (!a.snippet_spans.empty()) errors.push_back({"snippet_spans", "must be empty when status is not-applicable"});
      if (!a.context_spans.empty()) errors.push_back({"context_spans", "must be empty when status is not-applicable"});
      break;
    case AnnotationStatus::not_sure:
      break;
  }

  const Answer* answer = nullptr;
  if (thread && (a.status == AnnotationStatus::ok || has_spans || a.answer_id != 0)) {
    answer = thread->find_answer(a.answer_id);
    if (!answer)
      errors.push_back({"answer_id", "answer " + std::to_string(a.answer_id) +
                                         " is not among the question's answers"});
  }
  if (thread && a.intent_span) {
    const int len = static_cast<int>(thread->intent.size());
    if (a.intent_span->start < 0 || a.intent_span->start >= a.intent_span->end ||
        a.intent_span->end > len)
      errors.push_back({"intent_span", "must satisfy 0 <= start < end <= " + std::to_string(len)});
  }

  auto check_spans = [&](const std::vector<LineSpan>& spans, const std::string& field) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const std::string name = field + "[" + std::to_string(i) + "]";
      const LineSpan& s = spans[i];
      if (s.line_start < 1 || s.line_end < s.line_start) {
        errors.push_back({name, "needs 1 <= line_start <= line_end"});
        continue;
      }
      if (!answer) continue;
      auto it = std::find_if(answer->blocks.begin(), answer->blocks.end(),
                             [&](const CodeBlock& b) { return b.block_index == s.block_index; });
      if (it == answer->blocks.end()) {
        errors.push_back({name + ".block_index", "answer has no block " + std::to_string(s.block_index)});
      } else if (s.line_end > static_cast<int>(it->lines.size())) {
        errors.push_back({name + ".line_end", "block " + std::to_string(s.block_index) + " has only " +
                                                  std::to_string(it->lines.size()) + " lines"});
      }
    }
  };
  check_spans(a.context_spans, "context_spans");
  check_spans(a.snippet_spans, "snippet_spans");
  for (std::size_t i = 0; i < a.context_spans.size(); ++i)
    for (std::size_t k = 0; k < a.snippet_spans.size(); ++k) {
      const LineSpan& c = a.context_spans[i];
      const LineSpan& s = a.snippet_spans[k];
      if (c.block_index == s.block_index && c.line_start <= s.line_end && s.line_start <= c.line_end)
        errors.push_back({"context_spans[" + std::to_string(i) + "]",
                          "overlaps snippet_spans[" + std::to_string(k) + "]"});
    }
  return errors;
}

// ---- store --------------------------------------------------------------------

std::vector<Annotation> parse_annotations(const std::string& text, const std::string& origin) {
  std::vector<Annotation> out;
  std::size_t lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw UserError(origin + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("_meta")) continue;
    std::vector<FieldError> errors;
    Annotation a = annotation_from_json(j, errors);
    if (!errors.empty())
      throw UserError(origin + ":" + std::to_string(lineno) + ": " + errors.front().field + " " +
                      errors.front().message);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> read_annotations(const std::string& path) {
  return parse_annotations(read_file(path), path);
}

std::string render_annotations(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) out += annotation_to_json(a).dump() + "\n";
  return out;
}

AnnotationStore::AnnotationStore(std::string log_path) : path_(std::move(log_path)) {
  if (path_.empty()) return;
  if (std::filesystem::exists(path_))
    for (auto& a : read_annotations(path_)) records_[Key{a.question_id, a.answer_id, a.annotator}] = a;
  const auto parent = std::filesystem::path(path_).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  log_.open(path_, std::ios::app | std::ios::binary);
  if (!log_) throw UserError("cannot open annotation log " + path_);
}

AnnotationStore::PutResult AnnotationStore::put(const Annotation& a, bool overwrite) {
  std::unique_lock lock(mutex_);
  Key key{a.question_id, a.answer_id, a.annotator};
  auto it = records_.find(key);
  if (it != records_.end() && !overwrite) return PutResult::conflict;
  if (log_.is_open()) {
    log_ << annotation_to_json(a).dump() << '\n';
    log_.flush();
    if (!log_) throw std::runtime_error("failed to append to annotation log " + path_);
  }
  const bool existed = it != records_.end();
  records_[key] = a;
  return existed ? PutResult::replaced : PutResult::created;
}

std::vector<Annotation> AnnotationStore::all() const {
  std::shared_lock lock(mutex_);
  std::vector<Annotation> out;
  for (const auto& [_, a] : records_) out.push_back(a);
  return out;
}

std::vector<Annotation> AnnotationStore::export_gold() const {
  std::shared_lock lock(mutex_);
  std::vector<Annotation> out;
  for (const auto& [_, a] : records_)
    if (a.status == AnnotationStatus::ok) out.push_back(a);
  return out;
}

bool AnnotationStore::finished(std::int64_t question_id, const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  for (auto it = records_.lower_bound(Key{question_id, std::numeric_limits<std::int64_t>::min(), ""});
       it != records_.end() && std::get<0>(it->first) == question_id; ++it)
    if (std::get<2>(it->first) == annotator && it->second.status != AnnotationStatus::not_sure)
      return true;
  return false;
}

std::map<std::string, std::size_t> AnnotationStore::counts_by_status() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> counts{{"ok", 0}, {"not-applicable", 0}, {"not-sure", 0}};
  for (const auto& [_, a] : records_) ++counts[status_name(a.status)];
  return counts;
}

std::size_t AnnotationStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

// ---- sampling -------------------------------------------------------------------

std::vector<std::int64_t> SamplingPlan::order() const {
  std::vector<std::int64_t> out = fixed;
  out.insert(out.end(), sampled.begin(), sampled.end());
  return out;
}

std::vector<std::int64_t> weighted_sample(std::vector<std::pair<std::int64_t, double>> items,
                                          std::size_t count, std::uint64_t seed) {
  std::sort(items.begin(), items.end());
  Rng rng(seed);
  struct Keyed {
    double key;
    std::int64_t id;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(items.size());
  for (const auto& [id, w] : items) {
    if (!(w >= 0) || !std::isfinite(w)) throw UserError("sampling weight of " + std::to_string(id) + " is invalid");
    double u = rng.uniform();
    if (u <= 0.0) u = 0x1.0p-64;
    keyed.push_back({w > 0 ? std::log(u) / w : -std::numeric_limits<double>::infinity(), id});
  }
  count = std::min(count, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(count), keyed.end(),
                    [](const Keyed& a, const Keyed& b) {
                      if (a.key != b.key) return a.key > b.key;
                      return a.id < b.id;
                    });
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(keyed[i].id);
  return out;
}

SamplingPlan build_sampling_plan(const std::vector<QuestionThread>& threads,
                                 const std::string& language, std::uint64_t seed,
                                 std::size_t fixed_count, std::size_t sample_count) {
  SamplingPlan plan;
  plan.language = language;
  plan.seed = seed;
  std::vector<std::pair<std::int64_t, std::int64_t>> by_views;  // (views, id)
  for (const auto& t : threads) by_views.emplace_back(t.view_count.value_or(0), t.question_id);
  std::sort(by_views.begin(), by_views.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (by_views.size() < fixed_count)
    plan.warnings.push_back("only " + std::to_string(by_views.size()) +
                            " questions; the fixed set takes all of them");
  const std::size_t nfixed = std::min(fixed_count, by_views.size());
  std::vector<std::pair<std::int64_t, double>> rest;
  for (std::size_t i = 0; i < by_views.size(); ++i) {
    if (i < nfixed)
      plan.fixed.push_back(by_views[i].second);
    else
      rest.emplace_back(by_views[i].second, static_cast<double>(by_views[i].first));
  }
  if (rest.size() < sample_count && sample_count > 0 && nfixed == fixed_count)
    plan.warnings.push_back("only " + std::to_string(rest.size()) + " questions left to sample");
  plan.sampled = weighted_sample(std::move(rest), sample_count, seed);
  return plan;
}

json plan_to_json(const SamplingPlan& plan) {
  return {{"language", plan.language}, {"seed", plan.seed}, {"fixed", plan.fixed},
          {"sampled", plan.sampled}, {"warnings", plan.warnings}};
}

SamplingPlan plan_from_json(const json& j) {
  SamplingPlan p;
  p.language = j.at("language").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.fixed = j.at("fixed").get<std::vector<std::int64_t>>();
  p.sampled = j.at("sampled").get<std::vector<std::int64_t>>();
  p.warnings = j.value("warnings", std::vector<std::string>{});
  return p;
}

}  // namespace codemine
