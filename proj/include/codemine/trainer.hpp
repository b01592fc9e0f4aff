#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codemine/encdec.hpp"
#include "codemine/language.hpp"
#include "codemine/threads.hpp"

namespace codemine {

struct TrainingConfig {
  std::uint64_t seed = 1;
  ModelDims dims;
  int batch_size = 32;
  int max_epochs = 30;
  int patience = 5;          // epochs without validation improvement
  std::int64_t max_steps = 0;  // 0 = no limit
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double output_dropout = 0.5;
  double recurrent_dropout = 0.2;
  double init_scale = 0.1;
  int min_frequency = 2;
  int max_intent_tokens = 40;
  int max_code_tokens = 120;
  /// Batch gradients are summed over this many fixed slices so results do
  /// not depend on `jobs`; each slice costs one extra gradient buffer.
  int grad_chunks = 4;
  int jobs = 1;
  std::string language;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::int64_t step)
      : std::runtime_error("training diverged (non-finite loss or parameters) at step " +
                           std::to_string(step)),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct IdPair {
  std::vector<int> source;
  std::vector<int> target;
};

struct TrainingReport {
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;
  std::int64_t steps = 0;
  int epochs = 0;
  std::int64_t best_step = 0;
  double initial_validation_log_likelihood = 0.0;
  double best_validation_log_likelihood = 0.0;
  std::vector<double> validation_history;  // one entry per evaluation, step 0 first
};

/// Validation share of a 9:1 split: round(n / 10), so 33,946 pairs split
/// into 30,551 / 3,395.
std::size_t validation_size(std::size_t n);

/// Seeded permutation of [0, n) cut into (train, validation) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            std::uint64_t seed);

/// Mean negative log-likelihood per target token (EOS included), no dropout.
double mean_token_nll(const EncDecModel& model, const std::vector<IdPair>& pairs, int jobs = 1);

/// Called after each optimizer step with (step, batch mean token NLL).
using StepCallback = std::function<void(std::int64_t, double)>;

/// Adam training on already-encoded pairs. `model` must have its vocabularies
/// and initial parameters set; on return it holds the parameters with the
/// highest validation likelihood seen (the initial ones included).
TrainingReport train_on_ids(EncDecModel& model, const std::vector<IdPair>& train,
                            const std::vector<IdPair>& validation, const TrainingConfig& config,
                            const StepCallback& on_step = {});

/// Token sequences for one direction, truncated to the configured limits.
std::vector<std::string> intent_tokens(const std::string& intent, int limit);
std::vector<std::string> code_tokens(const std::string& code, const LanguageProfile& profile,
                                     int limit);

/// Tokenizes the corpus, splits 9:1, builds vocabularies on the training
/// split and trains one direction.
EncDecModel train_correspondence(const std::vector<CorpusPair>& pairs, Direction direction,
                                 const TrainingConfig& config, const LanguageProfile& profile,
                                 TrainingReport* report = nullptr,
                                 const StepCallback& on_step = {});

}  // namespace codemine
