#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codemine/encdec.hpp"
#include "codemine/jsonl.hpp"

namespace codemine {

/// Key-value configuration. Files hold one `key = value` per line; `#`
/// starts a comment. Unknown keys are rejected.
class PipelineConfig {
 public:
  PipelineConfig();

  void load_file(const std::string& path);
  void load_text(const std::string& text, const std::string& origin);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::int64_t get_int64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Resolved location of a named artifact: `path.<name>` when set (with
  /// `{language}` substituted), else `<work_dir>/<language>/<default file name>`.
  std::string path(const std::string& name) const;
  /// Same artifact for another language.
  std::string path_for_language(const std::string& name, const std::string& language) const;

  /// FNV-1a over the sorted key=value lines that influence outputs.
  std::string hash() const;
  OutputMeta meta(const std::string& kind) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  static std::string describe_keys();

 private:
  std::map<std::string, std::string> values_;
};

struct RunOptions {
  int jobs = 1;
  bool force = false;  // evaluate: accept inputs with differing config hashes
  std::ostream* log = nullptr;
  std::optional<Direction> direction;  // train-corr: one direction only
  std::string model_path;              // transfer: classifier trained on another language
  std::string data_language;           // transfer: language whose data is scored
  std::string export_path;             // serve-annotation: write gold export and exit
};

inline const std::vector<std::string> kCommands = {
    "ingest", "corpus", "candidates", "train-corr", "score-corr", "featurize",
    "train",  "mine",   "evaluate",   "transfer",   "serve-annotation"};

/// Runs one pipeline stage. Throws UserError for bad input or missing
/// upstream artifacts.
void run_command(const std::string& command, const PipelineConfig& config, const RunOptions& options);

void cmd_ingest(const PipelineConfig& config, const RunOptions& options);
void cmd_corpus(const PipelineConfig& config, const RunOptions& options);
void cmd_candidates(const PipelineConfig& config, const RunOptions& options);
void cmd_train_corr(const PipelineConfig& config, const RunOptions& options);
void cmd_score_corr(const PipelineConfig& config, const RunOptions& options);
void cmd_featurize(const PipelineConfig& config, const RunOptions& options);
void cmd_train(const PipelineConfig& config, const RunOptions& options);
void cmd_mine(const PipelineConfig& config, const RunOptions& options);
void cmd_evaluate(const PipelineConfig& config, const RunOptions& options);
void cmd_transfer(const PipelineConfig& config, const RunOptions& options);
void cmd_serve_annotation(const PipelineConfig& config, const RunOptions& options);

}  // namespace codemine
