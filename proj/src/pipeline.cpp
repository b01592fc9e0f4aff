#include "codemine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "codemine/annotation.hpp"
#include "codemine/annotation_server.hpp"
#include "codemine/candidates.hpp"
#include "codemine/checkpoint.hpp"
#include "codemine/classifier.hpp"
#include "codemine/correspondence.hpp"
#include "codemine/evaluation.hpp"
#include "codemine/posts_xml.hpp"
#include "codemine/structural.hpp"
#include "codemine/threads.hpp"
#include "codemine/trainer.hpp"

namespace codemine {

namespace fs = std::filesystem;

namespace {

struct KeyInfo {
  const char* key;
  const char* default_value;
  const char* help;
};

// Keys and defaults. The artifact table below lists the path.* keys.
const KeyInfo kKeys[] = {
    {"language", "python", "tag selecting questions and the language profile"},
    {"work_dir", "work", "root directory for artifacts"},
    {"dump", "", "Stack Exchange Posts.xml; {language} is replaced by the language tag"},
    {"howto", "keyword", "how-to filter: keyword, all, or ids:<file with one id per line>"},
    {"validator", "structural", "snippet validator: structural, accept-all, external"},
    {"validator_cmd", "", "external validator command, {file} is replaced by the snippet file"},
    {"permissive", "false", "treat snippets the validator cannot decide as valid"},
    {"seed", "1", "seed for splits, initialization, dropout, folds and the random baseline"},
    {"corr.cell", "gated", "recurrence: gated or tanh"},
    {"corr.embed_dim", "256", ""},
    {"corr.hidden_dim", "512", ""},
    {"corr.epochs", "30", ""},
    {"corr.batch_size", "32", ""},
    {"corr.patience", "5", "epochs without validation improvement before stopping"},
    {"corr.learning_rate", "0.001", ""},
    {"corr.max_steps", "0", "0 = no limit"},
    {"corr.min_frequency", "2", "vocabulary cutoff"},
    {"corr.output_dropout", "0.5", ""},
    {"corr.recurrent_dropout", "0.2", ""},
    {"corr.init_scale", "0.1", ""},
    {"corr.max_intent_tokens", "40", ""},
    {"corr.max_code_tokens", "120", ""},
    {"corr.grad_chunks", "4", "fixed gradient slices per batch (determinism across --jobs)"},
    {"featurize.correspondence", "true", "join correspondence features into features.jsonl"},
    {"features", "full", "feature set used by mine: full, structural, correspondence"},
    {"train.sets", "full,structural,correspondence", "feature sets trained and evaluated"},
    {"cross_lingual", "false", "drop IsValue when training"},
    {"classifier.l2", "1.0", ""},
    {"classifier.class_weighting", "true", ""},
    {"classifier.folds", "5", ""},
    {"classifier.max_iterations", "100", ""},
    {"label.overlap", "false", "also accept Jaccard line overlap as a match"},
    {"label.jaccard", "0.5", ""},
    {"mine.top_k", "0", "0 = no limit"},
    {"mine.min_prob", "0.5", ""},
    {"transfer.model", "", "classifier file trained on another language"},
    {"plan.seed", "1", ""},
    {"plan.fixed", "100", ""},
    {"plan.sample", "1000", ""},
    {"serve.host", "127.0.0.1", ""},
    {"serve.port", "8080", ""},
    {"serve.store", "", "annotation log; default <work_dir>/<language>/annotation-log.jsonl"},
};

struct Artifact {
  const char* name;
  const char* file;
  const char* producer;
};

const Artifact kArtifacts[] = {
    {"threads", "threads.jsonl", "ingest"},
    {"corpus", "corpus.jsonl", "corpus"},
    {"candidates", "candidates.jsonl", "candidates"},
    {"model_i2s", "corr-i2s.ckpt", "train-corr"},
    {"model_s2i", "corr-s2i.ckpt", "train-corr"},
    {"features_corr", "features-corr.jsonl", "score-corr"},
    {"features_structural", "features-structural.jsonl", "featurize"},
    {"features", "features.jsonl", "featurize"},
    {"classifier_full", "classifier-full.model", "train"},
    {"classifier_structural", "classifier-structural.model", "train"},
    {"classifier_correspondence", "classifier-correspondence.model", "train"},
    {"predictions_full", "predictions-full.jsonl", "train"},
    {"predictions_structural", "predictions-structural.jsonl", "train"},
    {"predictions_correspondence", "predictions-correspondence.jsonl", "train"},
    {"mined", "mined.jsonl", "mine"},
    {"report", "report.json", "evaluate"},
    {"curves", "curves.csv", "evaluate"},
    {"pr_svg", "pr.svg", "evaluate"},
    {"roc_svg", "roc.svg", "evaluate"},
    {"transfer_predictions", "transfer-predictions.jsonl", "transfer"},
    {"transfer_report", "transfer-report.json", "transfer"},
    {"annotations", "annotations.jsonl", "serve-annotation --export-gold"},
    {"plan", "plan.json", "serve-annotation"},
    {"annotation_log", "annotation-log.jsonl", "serve-annotation"},
};

const Artifact& artifact(const std::string& name) {
  for (const auto& a : kArtifacts)
    if (name == a.name) return a;
  throw std::invalid_argument("unknown artifact " + name);
}

bool known_key(const std::string& key) {
  for (const auto& k : kKeys)
    if (key == k.key) return true;
  if (starts_with(key, "path.")) {
    for (const auto& a : kArtifacts)
      if (key.substr(5) == a.name) return true;
  }
  return false;
}

std::string replace_language(std::string s, const std::string& language) {
  const std::string tag = "{language}";
  for (std::size_t p = 0; (p = s.find(tag, p)) != std::string::npos; p += language.size())
    s.replace(p, tag.size(), language);
  return s;
}

bool location_key(const std::string& key) {
  return key == "work_dir" || starts_with(key, "path.") || starts_with(key, "serve.");
}

}  // namespace

// ---- config ---------------------------------------------------------------------

PipelineConfig::PipelineConfig() {
  for (const auto& k : kKeys) values_[k.key] = k.default_value;
}

void PipelineConfig::load_file(const std::string& path) { load_text(read_file(path), path); }

void PipelineConfig::load_text(const std::string& text, const std::string& origin) {
  int lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UserError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UserError& e) {
      throw UserError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw UserError("unknown configuration key '" + key + "'");
  values_[key] = value;
}

const std::string& PipelineConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("configuration key " + key + " has no value");
  return it->second;
}

std::int64_t PipelineConfig::get_int64(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw UserError("configuration key " + key + " needs an integer, got '" + v + "'");
  return out;
}

int PipelineConfig::get_int(const std::string& key) const {
  return static_cast<int>(get_int64(key));
}

double PipelineConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw UserError("configuration key " + key + " needs a number, got '" + v + "'");
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const std::string v = to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UserError("configuration key " + key + " needs true or false, got '" + v + "'");
}

std::string PipelineConfig::path(const std::string& name) const {
  return path_for_language(name, get("language"));
}

std::string PipelineConfig::path_for_language(const std::string& name, const std::string& language) const {
  const Artifact& a = artifact(name);
  auto it = values_.find("path." + name);
  if (it != values_.end() && !it->second.empty()) return replace_language(it->second, language);
  return (fs::path(get("work_dir")) / language / a.file).string();
}

std::string PipelineConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : values_)
    if (!location_key(k)) text += k + "=" + v + "\n";
  return to_hex(fnv1a64(text));
}

OutputMeta PipelineConfig::meta(const std::string& kind) const {
  return OutputMeta{hash(), kToolVersion, kind};
}

std::string PipelineConfig::describe_keys() {
  std::ostringstream out;
  for (const auto& k : kKeys) {
    out << "  " << k.key << " = " << k.default_value;
    if (*k.help) out << "    # " << k.help;
    out << "\n";
  }
  out << "  path.<artifact> overrides one output location; artifacts:";
  for (const auto& a : kArtifacts) out << " " << a.name;
  out << "\n";
  return out.str();
}

// ---- helpers ----------------------------------------------------------------------

namespace {

class Log {
 public:
  Log(const RunOptions& o, std::string stage) : out_(o.log), stage_(std::move(stage)) {}
  template <typename... Args>
  void operator()(const Args&... args) const {
    if (!out_) return;
    std::ostringstream s;
    s << "[" << stage_ << "] ";
    (s << ... << args);
    s << "\n";
    *out_ << s.str() << std::flush;
  }

 private:
  std::ostream* out_;
  std::string stage_;
};

std::string require(const PipelineConfig& config, const std::string& name,
                    const std::string& language = "") {
  const std::string p = language.empty() ? config.path(name) : config.path_for_language(name, language);
  if (!fs::exists(p)) {
    std::string msg = "missing " + p + "; produce it with `codemine " + artifact(name).producer + "`";
    if (!language.empty()) msg += " --language " + language;
    throw UserError(msg);
  }
  return p;
}

std::vector<QuestionThread> load_threads(const PipelineConfig& config, const std::string& language = "") {
  std::vector<QuestionThread> out;
  const std::string p = require(config, "threads", language);
  for (const auto& j : read_jsonl(p).records) {
    try {
      out.push_back(thread_from_json(j));
    } catch (const json::exception& e) {
      throw UserError(p + ": bad thread record: " + e.what());
    }
  }
  return out;
}

std::map<std::int64_t, const QuestionThread*> index_threads(const std::vector<QuestionThread>& threads) {
  std::map<std::int64_t, const QuestionThread*> out;
  for (const auto& t : threads) out[t.question_id] = &t;
  return out;
}

HowtoPredicate howto_predicate(const PipelineConfig& config) {
  const std::string& mode = config.get("howto");
  if (mode == "keyword") return keyword_howto_filter();
  if (mode == "all") return [](const QuestionThread&) { return true; };
  if (starts_with(mode, "ids:")) {
    std::set<std::int64_t> ids;
    for (const auto& line : split_lines(read_file(mode.substr(4)))) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      std::int64_t id = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), id);
      if (ec != std::errc{} || p != t.data() + t.size())
        throw UserError(mode.substr(4) + ": not a question id: '" + t + "'");
      ids.insert(id);
    }
    return id_list_howto_filter(std::move(ids));
  }
  throw UserError("howto must be keyword, all, or ids:<file>; got '" + mode + "'");
}

std::vector<QuestionThread> read_dump_threads(const PipelineConfig& config, const Log& log) {
  const std::string dump = replace_language(config.get("dump"), config.get("language"));
  if (dump.empty()) throw UserError("no dump configured; set dump = <path to Posts.xml>");
  std::ifstream in(dump, std::ios::binary);
  if (!in) throw UserError("cannot open dump " + dump);
  PostsReader reader(in);
  ThreadAssembler assembler(config.get("language"));
  try {
    while (auto post = reader.next()) assembler.add(*post);
  } catch (const XmlParseError& e) {
    throw UserError(dump + ": " + e.what());
  }
  auto threads = assembler.finish();
  const auto& rs = reader.stats();
  const auto& as = assembler.stats();
  log("read ", rs.rows, " rows (", rs.invalid_rows, " invalid, ", rs.other_types, " other types); ",
      as.questions_with_tag, " tagged questions, ", as.orphan_answers, " orphan answers, ",
      as.dropped_without_code, " without code in top answers");
  auto filter = howto_predicate(config);
  std::vector<QuestionThread> kept;
  for (auto& t : threads)
    if (filter_howto(t, filter)) kept.push_back(std::move(t));
  log(kept.size(), " how-to threads kept of ", threads.size());
  return kept;
}

void check_meta(const std::map<std::string, JsonlContents*>& inputs, const PipelineConfig& config,
                const RunOptions& options, const Log& log) {
  std::map<std::string, std::string> hashes;
  for (const auto& [name, c] : inputs) hashes[name] = c->has_meta ? c->meta.config_hash : "(none)";
  std::set<std::string> distinct;
  for (const auto& [_, h] : hashes) distinct.insert(h);
  if (distinct.size() <= 1 && (distinct.empty() || *distinct.begin() == config.hash())) return;
  std::string msg = "inputs come from different configurations:";
  for (const auto& [name, h] : hashes) msg += " " + name + "=" + h;
  msg += " (current " + config.hash() + ")";
  if (!options.force) throw UserError(msg + "; rerun the stages or pass --force");
  log("warning: ", msg);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

TrainingConfig training_config(const PipelineConfig& c, const RunOptions& o) {
  TrainingConfig t;
  t.seed = static_cast<std::uint64_t>(c.get_int64("seed"));
  t.dims = {c.get_int("corr.embed_dim"), c.get_int("corr.hidden_dim"), parse_cell(c.get("corr.cell"))};
  t.batch_size = c.get_int("corr.batch_size");
  t.max_epochs = c.get_int("corr.epochs");
  t.patience = c.get_int("corr.patience");
  t.max_steps = c.get_int64("corr.max_steps");
  t.learning_rate = c.get_double("corr.learning_rate");
  t.output_dropout = c.get_double("corr.output_dropout");
  t.recurrent_dropout = c.get_double("corr.recurrent_dropout");
  t.init_scale = c.get_double("corr.init_scale");
  t.min_frequency = c.get_int("corr.min_frequency");
  t.max_intent_tokens = c.get_int("corr.max_intent_tokens");
  t.max_code_tokens = c.get_int("corr.max_code_tokens");
  t.grad_chunks = c.get_int("corr.grad_chunks");
  t.jobs = o.jobs;
  t.language = c.get("language");
  if (t.dims.embed < 1 || t.dims.hidden < 1) throw UserError("model dimensions must be positive");
  return t;
}

ClassifierConfig classifier_config(const PipelineConfig& c) {
  ClassifierConfig k;
  k.l2 = c.get_double("classifier.l2");
  k.class_weighting = c.get_bool("classifier.class_weighting");
  k.seed = static_cast<std::uint64_t>(c.get_int64("seed"));
  k.max_iterations = c.get_int("classifier.max_iterations");
  return k;
}

std::vector<Annotation> load_gold(const PipelineConfig& config, const std::string& language = "") {
  const std::string p = require(config, "annotations", language);
  return read_annotations(p);
}

std::vector<PairFeatureVector> labeled_vectors(const std::vector<PairFeatureVector>& vectors,
                                               const std::vector<Annotation>& gold,
                                               const std::vector<QuestionThread>& threads,
                                               const PipelineConfig& config) {
  std::vector<CandidateKey> keys;
  for (const auto& v : vectors) keys.push_back(v.key);
  LabelOptions lo{config.get_bool("label.overlap"), config.get_double("label.jaccard")};
  auto labels = label_candidates(keys, gold, index_threads(threads), lo);
  std::map<CandidateKey, int> by_key;
  for (const auto& l : labels) by_key[l.key] = l.label;
  std::vector<PairFeatureVector> out;
  for (const auto& v : vectors) {
    auto it = by_key.find(v.key);
    if (it == by_key.end()) continue;
    PairFeatureVector lv = v;
    lv.label = it->second;
    out.push_back(std::move(lv));
  }
  return out;
}

std::vector<PairFeatureVector> load_vectors(const std::string& path, JsonlContents* contents = nullptr) {
  JsonlContents c = read_jsonl(path);
  std::vector<PairFeatureVector> out;
  for (const auto& j : c.records) out.push_back(pair_features_from_json(j));
  if (contents) *contents = std::move(c);
  return out;
}

void require_features(const std::vector<PairFeatureVector>& vectors, const std::vector<std::string>& names,
                      const std::string& path) {
  if (vectors.empty()) return;
  for (const auto& n : names)
    if (!vectors.front().values.contains(n))
      throw UserError(path + " lacks feature " + n +
                      "; run `codemine score-corr` and `codemine featurize` with featurize.correspondence = true");
}

void write_text(const std::string& path, const std::string& text, const Log& log) {
  write_file(path, text);
  log("wrote ", path);
}

}  // namespace

// ---- commands -------------------------------------------------------------------

void cmd_ingest(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "ingest");
  auto threads = read_dump_threads(config, log);
  std::vector<json> records;
  for (const auto& t : threads) records.push_back(thread_to_json(t));
  const auto meta = config.meta("threads");
  write_jsonl(config.path("threads"), records, &meta);
  log("wrote ", records.size(), " threads to ", config.path("threads"));
}

void cmd_corpus(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "corpus");
  auto threads = read_dump_threads(config, log);
  auto pairs = build_corr_corpus(threads);
  std::vector<json> records;
  for (const auto& p : pairs) records.push_back(corpus_pair_to_json(p));
  const auto meta = config.meta("corpus");
  write_jsonl(config.path("corpus"), records, &meta);
  const std::size_t nval = validation_size(pairs.size());
  log("wrote ", pairs.size(), " intent/code pairs (", pairs.size() - nval, " train / ", nval,
      " validation) to ", config.path("corpus"));
}

void cmd_candidates(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "candidates");
  auto threads = load_threads(config);
  const LanguageProfile profile = profile_for(config.get("language"));
  auto validator = make_validator(config.get("validator"), profile, config.get("validator_cmd"));
  const bool permissive = config.get_bool("permissive");

  std::vector<std::vector<json>> per_thread(threads.size());
  std::vector<GenerationStats> stats(threads.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(1, options.jobs)));
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i; (i = next++) < threads.size();)
        for (const auto& c : generate_candidates(threads[i], *validator, profile, permissive, &stats[i]))
          per_thread[i].push_back(candidate_to_json(c, threads[i]));
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 1; w < errors.size(); ++w) workers.emplace_back(work, w);
    work(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // threads are sorted by question id and candidates by key within a thread
  std::vector<json> records;
  GenerationStats total;
  for (std::size_t i = 0; i < threads.size(); ++i) {
    for (auto& r : per_thread[i]) records.push_back(std::move(r));
    total.enumerated += stats[i].enumerated;
    total.truncated_blocks += stats[i].truncated_blocks;
    total.validation.valid += stats[i].validation.valid;
    total.validation.invalid += stats[i].validation.invalid;
    total.validation.unknown += stats[i].validation.unknown;
    total.validation.crashed += stats[i].validation.crashed;
  }
  std::sort(records.begin(), records.end(),
            [](const json& a, const json& b) { return key_from_json(a) < key_from_json(b); });
  const auto meta = config.meta("candidates");
  write_jsonl(config.path("candidates"), records, &meta);
  log(total.enumerated, " spans enumerated, ", total.validation.valid, " valid, ",
      total.validation.invalid, " invalid, ", total.validation.unknown, " undecided, ",
      total.validation.crashed, " validator failures, ", total.truncated_blocks,
      " blocks truncated; kept ", records.size());
}

void cmd_train_corr(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "train-corr");
  const std::string corpus_path = require(config, "corpus");
  std::vector<CorpusPair> pairs;
  for (const auto& j : read_jsonl(corpus_path).records) pairs.push_back(corpus_pair_from_json(j));
  const TrainingConfig tc = training_config(config, options);
  const LanguageProfile profile = profile_for(config.get("language"));
  std::vector<Direction> directions;
  if (options.direction)
    directions.push_back(*options.direction);
  else
    directions = {Direction::snippet_given_intent, Direction::intent_given_snippet};
  for (Direction d : directions) {
    const std::string code = direction_code(d);
    TrainingReport report;
    std::int64_t last_logged = 0;
    auto on_step = [&](std::int64_t step, double loss) {
      if (step - last_logged >= 200) {
        log(code, " step ", step, " batch loss ", loss);
        last_logged = step;
      }
    };
    EncDecModel model;
    try {
      model = train_correspondence(pairs, d, tc, profile, &report, on_step);
    } catch (const TrainingDiverged& e) {
      throw UserError(code + ": " + e.what());
    }
    log(code, ": ", report.train_pairs, " train / ", report.validation_pairs, " validation pairs, vocab ",
        model.source_vocab.size(), " -> ", model.target_vocab.size(), ", ", report.steps, " steps in ",
        report.epochs, " epochs; validation log-likelihood per token ", report.initial_validation_log_likelihood,
        " -> ", report.best_validation_log_likelihood, " (step ", report.best_step, ")");
    const std::string out = config.path(d == Direction::snippet_given_intent ? "model_i2s" : "model_s2i");
    save_checkpoint(out, model, config.meta("corr-model"));
    log("wrote ", out);
  }
}

void cmd_score_corr(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "score-corr");
  auto threads = load_threads(config);
  auto by_id = index_threads(threads);
  const std::string cpath = require(config, "candidates");
  JsonlContents cands = read_jsonl(cpath);
  const EncDecModel i2s = load_checkpoint(require(config, "model_i2s")).model;
  const EncDecModel s2i = load_checkpoint(require(config, "model_s2i")).model;
  const LanguageProfile profile = profile_for(config.get("language"));

  // group candidates by question, keeping file order (sorted by key)
  std::vector<std::pair<std::int64_t, std::vector<const json*>>> pages;
  for (const auto& j : cands.records) {
    const std::int64_t q = j.at("question_id").get<std::int64_t>();
    if (pages.empty() || pages.back().first != q) pages.push_back({q, {}});
    pages.back().second.push_back(&j);
  }
  std::vector<std::vector<json>> out(pages.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(1, options.jobs)));
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i; (i = next++) < pages.size();) {
        auto t = by_id.find(pages[i].first);
        if (t == by_id.end())
          throw UserError(cpath + ": question " + std::to_string(pages[i].first) + " missing from threads");
        std::vector<std::string> snippets;
        for (const json* c : pages[i].second) snippets.push_back(c->at("normalized_text").get<std::string>());
        auto scores = score_page(i2s, s2i, t->second->intent, snippets, profile);
        for (std::size_t k = 0; k < scores.size(); ++k)
          out[i].push_back(correspondence_to_json(key_from_json(*pages[i].second[k]), scores[k]));
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 1; w < errors.size(); ++w) workers.emplace_back(work, w);
    work(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<json> records;
  for (auto& page : out)
    for (auto& r : page) records.push_back(std::move(r));
  const auto meta = config.meta("features-corr");
  write_jsonl(config.path("features_corr"), records, &meta);
  log("scored ", records.size(), " candidates over ", pages.size(), " questions");
}

void cmd_featurize(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "featurize");
  auto threads = load_threads(config);
  auto by_id = index_threads(threads);
  const std::string cpath = require(config, "candidates");
  const LanguageProfile profile = profile_for(config.get("language"));
  KeyedStructural structural;
  std::vector<json> srecords;
  for (const auto& j : read_jsonl(cpath).records) {
    CandidateSnippet c = candidate_from_json(j);
    auto t = by_id.find(c.key.question_id);
    if (t == by_id.end())
      throw UserError(cpath + ": question " + std::to_string(c.key.question_id) + " missing from threads");
    StructuralFeatureVector f;
    try {
      f = extract_structural(c, *t->second, profile);
    } catch (const FeatureError& e) {
      throw UserError(cpath + ": " + e.what());
    }
    srecords.push_back(structural_to_json(c.key, f));
    structural.emplace_back(c.key, f);
  }
  const auto smeta = config.meta("features-structural");
  write_jsonl(config.path("features_structural"), srecords, &smeta);

  FeatureOptions fo;
  KeyedCorrespondence corr;
  if (config.get_bool("featurize.correspondence")) {
    const std::string fpath = require(config, "features_corr");
    for (const auto& j : read_jsonl(fpath).records)
      corr.emplace_back(key_from_json(j), correspondence_from_json(j));
  } else {
    fo.set = FeatureSet::structural;
  }
  auto vectors = assemble_features(structural, corr, fo);
  std::vector<json> records;
  for (const auto& v : vectors) records.push_back(pair_features_to_json(v));
  const auto meta = config.meta("features");
  write_jsonl(config.path("features"), records, &meta);
  log("wrote ", records.size(), " feature vectors (", feature_names(fo).size(), " features each)");
}

void cmd_train(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "train");
  auto threads = load_threads(config);
  const std::string fpath = require(config, "features");
  auto vectors = load_vectors(fpath);
  auto labeled = labeled_vectors(vectors, load_gold(config), threads, config);
  std::size_t pos = 0;
  std::set<std::int64_t> questions;
  for (const auto& v : labeled) {
    pos += v.label == 1 ? 1 : 0;
    questions.insert(v.key.question_id);
  }
  log(labeled.size(), " labeled candidates (", pos, " positive) over ", questions.size(), " questions");
  const ClassifierConfig cc = classifier_config(config);
  const bool cross = config.get_bool("cross_lingual");
  for (const auto& set_name : split_list(config.get("train.sets"))) {
    const FeatureSet set = parse_feature_set(set_name);
    const auto names = feature_names({set, cross});
    require_features(vectors, names, fpath);
    auto cv = cross_validate(labeled, names, config.get_int("classifier.folds"), cc, options.jobs);
    std::vector<json> records;
    for (const auto& p : cv.predictions) records.push_back(prediction_to_json(p));
    const auto meta = config.meta("predictions");
    write_jsonl(config.path("predictions_" + set_name), records, &meta);
    ClassifierModel model = fit(labeled, names, cc);
    write_text(config.path("classifier_" + set_name), render_classifier(model, config.meta("classifier")), log);
    log(set_name, ": ", names.size(), " features, ", cv.models.size(), "-fold predictions for ",
        records.size(), " pairs");
  }
}

void cmd_mine(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "mine");
  auto threads = load_threads(config);
  auto by_id = index_threads(threads);
  const std::string set_name = feature_set_name(parse_feature_set(config.get("features")));
  const std::string mpath = require(config, "classifier_" + set_name);
  ClassifierModel model = parse_classifier(read_file(mpath), mpath);
  auto vectors = load_vectors(require(config, "features"));
  std::map<CandidateKey, std::string> texts;
  for (const auto& j : read_jsonl(require(config, "candidates")).records)
    texts[key_from_json(j)] = j.at("text").get<std::string>();

  struct Mined {
    CandidateKey key;
    double p;
  };
  std::vector<Mined> mined;
  const double min_prob = config.get_double("mine.min_prob");
  for (const auto& v : vectors) {
    const double p = model.predict(v);
    if (p >= min_prob) mined.push_back({v.key, p});
  }
  std::sort(mined.begin(), mined.end(), [](const Mined& a, const Mined& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.key < b.key;
  });
  const auto top_k = config.get_int64("mine.top_k");
  if (top_k > 0 && mined.size() > static_cast<std::size_t>(top_k)) mined.resize(static_cast<std::size_t>(top_k));
  std::vector<json> records;
  for (std::size_t i = 0; i < mined.size(); ++i) {
    json j = key_to_json(mined[i].key);
    j["rank"] = i + 1;
    j["probability"] = mined[i].p;
    auto t = by_id.find(mined[i].key.question_id);
    j["intent"] = t == by_id.end() ? "" : t->second->intent;
    j["snippet"] = texts.count(mined[i].key) ? texts[mined[i].key] : "";
    records.push_back(std::move(j));
  }
  const auto meta = config.meta("mined");
  write_jsonl(config.path("mined"), records, &meta);
  log(records.size(), " pairs with probability >= ", min_prob, " written to ", config.path("mined"));
}

void cmd_evaluate(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "evaluate");
  auto threads = load_threads(config);
  JsonlContents cands = read_jsonl(require(config, "candidates"));
  std::map<std::string, JsonlContents> preds;
  for (const auto& set_name : split_list(config.get("train.sets"))) {
    parse_feature_set(set_name);
    preds[set_name] = read_jsonl(require(config, "predictions_" + set_name));
  }
  std::map<std::string, JsonlContents*> inputs{{"candidates", &cands}};
  for (auto& [name, c] : preds) inputs["predictions-" + name] = &c;
  check_meta(inputs, config, options, log);

  std::vector<CandidateKey> keys;
  std::vector<BaselineCandidate> base;
  for (const auto& j : cands.records) {
    keys.push_back(key_from_json(j));
    base.push_back(baseline_candidate_from_json(j));
  }
  LabelOptions lo{config.get_bool("label.overlap"), config.get_double("label.jaccard")};
  auto labels = label_candidates(keys, load_gold(config), index_threads(threads), lo);
  std::map<CandidateKey, int> label_of;
  for (const auto& l : labels) label_of[l.key] = l.label;

  std::vector<SystemResult> systems;
  const std::vector<std::string> order{"full", "structural", "correspondence"};
  for (const auto& name : order) {
    auto it = preds.find(name);
    if (it == preds.end()) continue;
    std::vector<ScoredItem> items;
    for (const auto& j : it->second.records) {
      FoldPrediction p = prediction_from_json(j);
      auto l = label_of.find(p.key);
      if (l == label_of.end()) throw UserError("prediction for unlabeled candidate " + p.key.to_string());
      items.push_back({p.key, p.probability, l->second});
    }
    if (items.size() != label_of.size())
      throw UserError("predictions-" + name + " covers " + std::to_string(items.size()) + " of " +
                      std::to_string(label_of.size()) + " labeled candidates; rerun `codemine train`");
    systems.push_back(evaluate_system(name, std::move(items)));
  }
  const auto seed = static_cast<std::uint64_t>(config.get_int64("seed"));
  for (BaselineKind kind : {BaselineKind::accept_only, BaselineKind::all, BaselineKind::random}) {
    auto scores = baseline_scores(base, kind, seed);
    std::vector<ScoredItem> items;
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto l = label_of.find(base[i].key);
      if (l != label_of.end()) items.push_back({base[i].key, scores[i], l->second});
    }
    systems.push_back(evaluate_system(baseline_name(kind), std::move(items)));
  }
  const OutputMeta meta = config.meta("report");
  write_text(config.path("report"), report_to_json(systems, meta).dump(1) + "\n", log);
  write_text(config.path("curves"), render_curves_csv(systems, meta), log);
  write_text(config.path("pr_svg"), render_svg(systems, "pr", meta), log);
  write_text(config.path("roc_svg"), render_svg(systems, "roc", meta), log);
  for (const auto& s : systems)
    log(s.name, ": AUC ", s.auc, " (", s.positives, " positive of ", s.items, ")");
}

void cmd_transfer(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "transfer");
  const std::string model_path = !options.model_path.empty() ? options.model_path : config.get("transfer.model");
  if (model_path.empty()) throw UserError("transfer needs --model <classifier file>");
  if (!fs::exists(model_path)) throw UserError("missing classifier " + model_path + "; produce it with `codemine train`");
  const std::string lang = options.data_language.empty() ? config.get("language") : options.data_language;
  ClassifierModel model = parse_classifier(read_file(model_path), model_path);

  // the single-value feature only exists for one language
  auto iv = std::find(model.features.begin(), model.features.end(), "IsValue");
  if (iv != model.features.end()) {
    const auto i = static_cast<std::size_t>(iv - model.features.begin());
    log("dropping IsValue (weight ", model.weights[i], ") for cross-language use");
    model.features.erase(iv);
    model.weights.erase(model.weights.begin() + static_cast<std::ptrdiff_t>(i));
    model.stats.mean.erase(model.stats.mean.begin() + static_cast<std::ptrdiff_t>(i));
    model.stats.std.erase(model.stats.std.begin() + static_cast<std::ptrdiff_t>(i));
  }
  auto vectors = load_vectors(require(config, "features", lang));
  auto preds = transfer_apply(model, vectors);

  const std::string gold_path = config.path_for_language("annotations", lang);
  std::map<CandidateKey, int> label_of;
  if (fs::exists(gold_path)) {
    auto threads = load_threads(config, lang);
    std::vector<CandidateKey> keys;
    for (const auto& v : vectors) keys.push_back(v.key);
    LabelOptions lo{config.get_bool("label.overlap"), config.get_double("label.jaccard")};
    for (const auto& l : label_candidates(keys, read_annotations(gold_path), index_threads(threads), lo))
      label_of[l.key] = l.label;
  }
  std::vector<json> records;
  std::vector<ScoredItem> items;
  for (auto& p : preds) {
    auto l = label_of.find(p.key);
    p.label = l == label_of.end() ? 0 : l->second;
    records.push_back(prediction_to_json(p));
    if (p.label != 0) items.push_back({p.key, p.probability, p.label});
  }
  const auto meta = config.meta("transfer-predictions");
  const std::string out = config.path_for_language("transfer_predictions", lang);
  write_jsonl(out, records, &meta);
  log("wrote ", records.size(), " predictions to ", out);

  if (!items.empty()) {
    std::vector<SystemResult> systems{evaluate_system("transfer", items)};
    // same draw as the random baseline of `evaluate` on this language
    std::vector<BaselineCandidate> all;
    for (const auto& v : vectors) all.push_back(BaselineCandidate{v.key});
    auto scores = baseline_scores(all, BaselineKind::random, static_cast<std::uint64_t>(config.get_int64("seed")));
    std::vector<ScoredItem> random_items;
    for (std::size_t i = 0; i < all.size(); ++i) {
      auto l = label_of.find(all[i].key);
      if (l != label_of.end()) random_items.push_back({all[i].key, scores[i], l->second});
    }
    systems.push_back(evaluate_system("random", random_items));
    json report = report_to_json(systems, config.meta("transfer-report"));
    report["model"] = model_path;
    report["data_language"] = lang;
    write_text(config.path_for_language("transfer_report", lang), report.dump(1) + "\n", log);
    log("transfer AUC ", systems[0].auc, ", random ", systems[1].auc);
  }
}

void cmd_serve_annotation(const PipelineConfig& config, const RunOptions& options) {
  Log log(options, "serve-annotation");
  auto threads = load_threads(config);
  SamplingPlan plan = build_sampling_plan(threads, config.get("language"),
                                          static_cast<std::uint64_t>(config.get_int64("plan.seed")),
                                          static_cast<std::size_t>(config.get_int64("plan.fixed")),
                                          static_cast<std::size_t>(config.get_int64("plan.sample")));
  for (const auto& w : plan.warnings) log("warning: ", w);
  write_text(config.path("plan"), plan_to_json(plan).dump(1) + "\n", log);
  const std::string store_path =
      config.get("serve.store").empty() ? config.path("annotation_log") : config.get("serve.store");
  AnnotationStore store(store_path);
  log(store.size(), " annotations replayed from ", store_path);
  if (!options.export_path.empty()) {
    auto gold = store.export_gold();
    write_text(options.export_path, render_annotations(gold), log);
    log(gold.size(), " ok annotations exported");
    return;
  }
  AnnotationService service(std::move(threads), std::move(plan), store);
  const std::string host = config.get("serve.host");
  const int port = config.get_int("serve.port");
  log("listening on http://", host, ":", port);
  run_annotation_server(service, host, port);
}

void run_command(const std::string& command, const PipelineConfig& config, const RunOptions& options) {
  if (command == "ingest") return cmd_ingest(config, options);
  if (command == "corpus") return cmd_corpus(config, options);
  if (command == "candidates") return cmd_candidates(config, options);
  if (command == "train-corr") return cmd_train_corr(config, options);
  if (command == "score-corr") return cmd_score_corr(config, options);
  if (command == "featurize") return cmd_featurize(config, options);
  if (command == "train") return cmd_train(config, options);
  if (command == "mine") return cmd_mine(config, options);
  if (command == "evaluate") return cmd_evaluate(config, options);
  if (command == "transfer") return cmd_transfer(config, options);
  if (command == "serve-annotation") return cmd_serve_annotation(config, options);
  throw UserError("unknown command '" + command + "'");
}

}  // namespace codemine
