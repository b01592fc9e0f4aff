// Command-line front end for the mining pipeline.
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "codemine/pipeline.hpp"
#include "codemine/util.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
  codemine::RunOptions run;
  std::string direction;
  bool quiet = false;
};

// Registers a flag that maps onto a configuration key.
void bind(CLI::App* app, Flags& f, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.overrides[key] = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"codemine: mine aligned intent/snippet pairs from Stack Overflow dumps"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.footer("Configuration keys (key = default):\n" + codemine::PipelineConfig::describe_keys());

  Flags f;
  app.add_option("--config", f.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", f.sets, "override one configuration key (key=value), repeatable");
  app.add_option("--jobs", f.run.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", f.quiet, "no progress log on stderr");
  bind(&app, f, "--language", "language", "language tag");
  bind(&app, f, "--work-dir", "work_dir", "artifact directory");
  bind(&app, f, "--seed", "seed", "global seed");
  bind(&app, f, "--dump", "dump", "Posts.xml path");

  std::map<std::string, CLI::App*> sub;
  for (const auto& c : codemine::kCommands) sub[c] = app.add_subcommand(c);
  sub["ingest"]->description("read the dump and write how-to question threads");
  sub["corpus"]->description("build the intent/snippet corpus for the correspondence models");
  sub["candidates"]->description("enumerate and validate candidate snippets");
  sub["train-corr"]->description("train the intent->snippet and snippet->intent models");
  sub["score-corr"]->description("compute correspondence features for every candidate");
  sub["featurize"]->description("compute structural features and join all features");
  sub["train"]->description("cross-validate and fit the pair classifiers");
  sub["mine"]->description("rank all candidates and write pairs above the threshold");
  sub["evaluate"]->description("compare systems and baselines against the gold annotations");
  sub["transfer"]->description("apply a classifier trained on one language to another");
  sub["serve-annotation"]->description("serve the annotation HTTP API");

  bind(sub["candidates"], f, "--validator", "validator", "structural, accept-all, or external");
  bind(sub["candidates"], f, "--validator-cmd", "validator_cmd", "external validator, {file} is the snippet file");
  sub["train-corr"]->add_option("--direction", f.direction, "train one direction only")
      ->check(CLI::IsMember({"i2s", "s2i"}));
  bind(sub["train-corr"], f, "--embed-dim", "corr.embed_dim", "embedding size");
  bind(sub["train-corr"], f, "--hidden-dim", "corr.hidden_dim", "recurrent state size");
  bind(sub["train-corr"], f, "--epochs", "corr.epochs", "maximum epochs");
  bind(sub["train-corr"], f, "--batch-size", "corr.batch_size", "pairs per batch");
  bind(sub["train-corr"], f, "--max-steps", "corr.max_steps", "stop after this many updates");
  bind(sub["train"], f, "--sets", "train.sets", "comma-separated feature sets");
  bind(sub["mine"], f, "--top-k", "mine.top_k", "keep at most this many pairs, 0 = all");
  bind(sub["mine"], f, "--min-prob", "mine.min_prob", "probability threshold");
  bind(sub["mine"], f, "--features", "features", "feature set of the classifier to use");
  sub["evaluate"]->add_flag("--force", f.run.force, "accept inputs produced under different configurations");
  sub["transfer"]->add_option("--model", f.run.model_path, "classifier file");
  sub["transfer"]->add_option("--data", f.run.data_language, "language whose features are scored");
  bind(sub["serve-annotation"], f, "--port", "serve.port", "listen port");
  bind(sub["serve-annotation"], f, "--host", "serve.host", "listen address");
  bind(sub["serve-annotation"], f, "--store-path", "serve.store", "annotation log file");
  bind(sub["serve-annotation"], f, "--plan-seed", "plan.seed", "sampling plan seed");
  sub["serve-annotation"]->add_option("--export-gold", f.run.export_path,
                                      "write ok annotations as annotations.jsonl and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    codemine::PipelineConfig config;
    if (!f.config_path.empty()) config.load_file(f.config_path);
    for (const auto& s : f.sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw codemine::UserError("--set needs key=value, got '" + s + "'");
      config.set(codemine::trim(s.substr(0, eq)), codemine::trim(s.substr(eq + 1)));
    }
    for (const auto& [k, v] : f.overrides) config.set(k, v);
    if (!f.direction.empty()) f.run.direction = codemine::parse_direction(f.direction);
    if (!f.quiet) f.run.log = &std::cerr;
    codemine::run_command(command, config, f.run);
  } catch (const codemine::UserError& e) {
    std::cerr << "codemine " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "codemine " << command << ": internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
