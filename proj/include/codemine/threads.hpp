#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "codemine/jsonl.hpp"
#include "codemine/posts_xml.hpp"

namespace codemine {

inline constexpr int kMaxAnswersPerThread = 3;

struct CodeBlock {
  std::int64_t answer_id = 0;
  int block_index = 0;
  std::vector<std::string> lines;
  int answer_rank = 0;  // 1-based position among the thread's answers
  bool is_accepted = false;

  bool operator==(const CodeBlock&) const = default;
};

struct Answer {
  std::int64_t answer_id = 0;
  std::int64_t score = 0;
  bool accepted = false;
  int rank = 0;
  std::vector<CodeBlock> blocks;

  bool operator==(const Answer&) const = default;
};

struct QuestionThread {
  std::int64_t question_id = 0;
  std::string intent;  // question title
  std::string language;
  std::optional<std::int64_t> view_count;
  /// Top answers by (-score, +id), at most kMaxAnswersPerThread.
  std::vector<Answer> answers;
  /// The accepted answer, whether or not it made the top list. In-memory only;
  /// not part of threads.jsonl.
  std::optional<Answer> accepted_answer;

  const Answer* find_answer(std::int64_t answer_id) const;
  bool operator==(const QuestionThread&) const = default;
};

struct AssembleStats {
  std::uint64_t questions_with_tag = 0;
  std::uint64_t orphan_answers = 0;      // parent question absent from the dump
  std::uint64_t dropped_without_code = 0;
  std::uint64_t html_warnings = 0;
};

/// Accumulates posts (in any order) and assembles per-question threads for one
/// language tag. Only code blocks are retained from answer bodies.
class ThreadAssembler {
 public:
  explicit ThreadAssembler(std::string language);

  void add(const RawPost& post);
  std::vector<QuestionThread> finish();
  const AssembleStats& stats() const { return stats_; }

 private:
  struct PendingAnswer {
    std::int64_t id;
    std::int64_t parent_id;
    std::int64_t score;
    std::vector<std::vector<std::string>> blocks;
  };
  struct PendingQuestion {
    std::string title;
    std::optional<std::int64_t> view_count;
    std::optional<std::int64_t> accepted_answer_id;
  };

  std::string language_;
  std::set<std::int64_t> all_question_ids_;
  std::unordered_map<std::int64_t, PendingQuestion> questions_;
  std::vector<PendingAnswer> answers_;
  AssembleStats stats_;
};

std::vector<QuestionThread> assemble_threads(const std::vector<RawPost>& posts,
                                             const std::string& language,
                                             AssembleStats* stats = nullptr);

// ---- how-to filtering ------------------------------------------------------

using HowtoPredicate = std::function<bool(const QuestionThread&)>;

/// Title heuristic: interrogative how-to phrasing ("how to", "how do i", ...,
/// "best way to") anywhere in the title, or an imperative verb from a fixed
/// list as the first word.
HowtoPredicate keyword_howto_filter();
/// Accepts exactly the listed question ids.
HowtoPredicate id_list_howto_filter(std::set<std::int64_t> ids);

bool is_howto_title(std::string_view title);

inline bool filter_howto(const QuestionThread& thread, const HowtoPredicate& filter) {
  return filter(thread);
}

// ---- correspondence corpus -------------------------------------------------

struct CorpusPair {
  std::string intent;
  std::string code;
  std::int64_t question_id = 0;

  bool operator==(const CorpusPair&) const = default;
};

/// Pairs each title with the code of its accepted answer when that answer has
/// exactly one code block. Ordered by question id.
std::vector<CorpusPair> build_corr_corpus(const std::vector<QuestionThread>& threads);

// ---- serialization ---------------------------------------------------------

json thread_to_json(const QuestionThread& thread);
QuestionThread thread_from_json(const json& j);
json corpus_pair_to_json(const CorpusPair& pair);
CorpusPair corpus_pair_from_json(const json& j);

}  // namespace codemine
