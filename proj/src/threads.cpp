#include "codemine/threads.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "codemine/html_code.hpp"
#include "codemine/util.hpp"

namespace codemine {

const Answer* QuestionThread::find_answer(std::int64_t answer_id) const {
  for (const auto& a : answers)
    if (a.answer_id == answer_id) return &a;
  return nullptr;
}

ThreadAssembler::ThreadAssembler(std::string language) : language_(to_lower(language)) {}

void ThreadAssembler::add(const RawPost& post) {
  if (post.post_type == PostType::question) {
    all_question_ids_.insert(post.id);
    if (std::find(post.tags.begin(), post.tags.end(), language_) == post.tags.end()) return;
    ++stats_.questions_with_tag;
    questions_[post.id] = PendingQuestion{post.title.value_or(""), post.view_count,
                                          post.accepted_answer_id};
    return;
  }
  auto extraction = extract_code_blocks(post.body_html);
  stats_.html_warnings += static_cast<std::uint64_t>(extraction.warnings);
  answers_.push_back(PendingAnswer{post.id, *post.parent_id, post.score,
                                   std::move(extraction.blocks)});
}

std::vector<QuestionThread> ThreadAssembler::finish() {
  std::unordered_map<std::int64_t, std::vector<const PendingAnswer*>> by_question;
  for (const auto& a : answers_) {
    if (!all_question_ids_.count(a.parent_id)) {
      ++stats_.orphan_answers;
      continue;
    }
    if (questions_.count(a.parent_id)) by_question[a.parent_id].push_back(&a);
  }

  std::vector<std::int64_t> ids;
  ids.reserve(questions_.size());
  for (const auto& [id, _] : questions_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  std::vector<QuestionThread> threads;
  for (std::int64_t qid : ids) {
    const PendingQuestion& q = questions_.at(qid);
    auto& answers = by_question[qid];
    std::sort(answers.begin(), answers.end(), [](const PendingAnswer* a, const PendingAnswer* b) {
      if (a->score != b->score) return a->score > b->score;
      return a->id < b->id;
    });

    auto make_answer = [&](const PendingAnswer& p, int rank) {
      Answer ans;
      ans.answer_id = p.id;
      ans.score = p.score;
      ans.accepted = q.accepted_answer_id && *q.accepted_answer_id == p.id;
      ans.rank = rank;
      for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        ans.blocks.push_back(CodeBlock{p.id, static_cast<int>(b), p.blocks[b], rank, ans.accepted});
      }
      return ans;
    };

    QuestionThread thread;
    thread.question_id = qid;
    thread.intent = q.title;
    thread.language = language_;
    thread.view_count = q.view_count;
    bool has_code = false;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      const int rank = static_cast<int>(i) + 1;
      if (rank <= kMaxAnswersPerThread) {
        thread.answers.push_back(make_answer(*answers[i], rank));
        has_code = has_code || !answers[i]->blocks.empty();
      }
      if (q.accepted_answer_id && *q.accepted_answer_id == answers[i]->id) {
        thread.accepted_answer = make_answer(*answers[i], rank);
      }
    }
    if (!has_code || trim(thread.intent).empty()) {
      ++stats_.dropped_without_code;
      continue;
    }
    threads.push_back(std::move(thread));
  }
  return threads;
}

std::vector<QuestionThread> assemble_threads(const std::vector<RawPost>& posts,
                                             const std::string& language,
                                             AssembleStats* stats) {
  ThreadAssembler assembler(language);
  for (const auto& p : posts) assembler.add(p);
  auto threads = assembler.finish();
  if (stats) *stats = assembler.stats();
  return threads;
}

// ---- how-to ----------------------------------------------------------------

namespace {

constexpr std::array kHowtoPhrases = {
    "how to ",        "how do i ",          "how do you ",    "how can i ",
    "how can you ",   "how could i ",       "how would i ",   "how should i ",
    "how does one ",  "how do we ",         "how can we ",    "how would you ",
    "best way to ",   "easiest way to ",    "simplest way to ", "fastest way to ",
    "proper way to ", "correct way to ",    "is there a way to ", "pythonic way to ",
    "a way to ",
};

constexpr std::array kImperativeVerbs = {
    "add",      "append",    "calculate", "call",     "cast",      "change",
    "check",    "combine",   "compare",   "compute",  "concatenate", "convert",
    "copy",     "count",     "create",    "declare",  "decode",    "define",
    "delete",   "detect",    "determine", "download", "encode",    "execute",
    "extract",  "fetch",     "filter",    "find",     "flatten",   "format",
    "generate", "get",       "group",     "initialize", "insert",  "iterate",
    "join",     "list",      "load",      "loop",     "make",      "merge",
    "open",     "parse",     "print",     "read",     "remove",    "rename",
    "replace",  "reverse",   "round",     "run",      "save",      "search",
    "select",   "send",      "set",       "sort",     "split",     "store",
    "strip",    "sum",       "swap",      "test",     "transpose", "trim",
    "truncate", "update",    "upload",    "validate", "write",
};

}  // namespace

bool is_howto_title(std::string_view title) {
  std::string t = to_lower(trim(title));
  // Pad so phrases at the end ("... how to") still match.
  std::string padded = " " + t + " ";
  for (auto& c : padded)
    if (c == '?' || c == ',' || c == ';' || c == ':' || c == '\t') c = ' ';
  for (std::string_view phrase : kHowtoPhrases) {
    if (padded.find(" " + std::string(phrase)) != std::string::npos) return true;
  }
  std::size_t end = 0;
  while (end < t.size() && std::isalpha(static_cast<unsigned char>(t[end]))) ++end;
  std::string_view first(t.data(), end);
  return std::find(kImperativeVerbs.begin(), kImperativeVerbs.end(), first) !=
         kImperativeVerbs.end();
}

HowtoPredicate keyword_howto_filter() {
  return [](const QuestionThread& t) { return is_howto_title(t.intent); };
}

HowtoPredicate id_list_howto_filter(std::set<std::int64_t> ids) {
  return [ids = std::move(ids)](const QuestionThread& t) { return ids.count(t.question_id) > 0; };
}

// ---- corpus ----------------------------------------------------------------

std::vector<CorpusPair> build_corr_corpus(const std::vector<QuestionThread>& threads) {
  std::vector<CorpusPair> pairs;
  for (const auto& t : threads) {
    if (!t.accepted_answer || t.accepted_answer->blocks.size() != 1) continue;
    pairs.push_back(CorpusPair{t.intent, join_lines(t.accepted_answer->blocks[0].lines),
                               t.question_id});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const CorpusPair& a, const CorpusPair& b) {
    return a.question_id < b.question_id;
  });
  return pairs;
}

// ---- serialization ---------------------------------------------------------

json thread_to_json(const QuestionThread& t) {
  json answers = json::array();
  for (const auto& a : t.answers) {
    json blocks = json::array();
    for (const auto& b : a.blocks) blocks.push_back({{"index", b.block_index}, {"lines", b.lines}});
    answers.push_back({{"answer_id", a.answer_id},
                       {"score", a.score},
                       {"accepted", a.accepted},
                       {"rank", a.rank},
                       {"blocks", blocks}});
  }
  json j = {{"question_id", t.question_id},
            {"title", t.intent},
            {"language", t.language},
            {"view_count", t.view_count ? json(*t.view_count) : json(nullptr)},
            {"answers", answers}};
  return j;
}

QuestionThread thread_from_json(const json& j) {
  QuestionThread t;
  t.question_id = j.at("question_id").get<std::int64_t>();
  t.intent = j.at("title").get<std::string>();
  t.language = j.at("language").get<std::string>();
  if (j.contains("view_count") && !j["view_count"].is_null())
    t.view_count = j["view_count"].get<std::int64_t>();
  for (const auto& ja : j.at("answers")) {
    Answer a;
    a.answer_id = ja.at("answer_id").get<std::int64_t>();
    a.score = ja.at("score").get<std::int64_t>();
    a.accepted = ja.at("accepted").get<bool>();
    a.rank = ja.at("rank").get<int>();
    for (const auto& jb : ja.at("blocks")) {
      a.blocks.push_back(CodeBlock{a.answer_id, jb.at("index").get<int>(),
                                   jb.at("lines").get<std::vector<std::string>>(), a.rank,
                                   a.accepted});
    }
    if (a.accepted) t.accepted_answer = a;
    t.answers.push_back(std::move(a));
  }
  return t;
}

json corpus_pair_to_json(const CorpusPair& p) {
  return {{"intent", p.intent}, {"code", p.code}, {"question_id", p.question_id}};
}

CorpusPair corpus_pair_from_json(const json& j) {
  return CorpusPair{j.at("intent").get<std::string>(), j.at("code").get<std::string>(),
                    j.at("question_id").get<std::int64_t>()};
}

}  // namespace codemine
