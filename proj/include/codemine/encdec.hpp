#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "codemine/util.hpp"
#include "codemine/vocab.hpp"

namespace codemine {

/// Recurrence used by encoder and decoder. `tanh` is the plain
/// h' = tanh(Wx x + Wh h + b) recurrence; `gated` is a GRU.
enum class CellType { gated, tanh };

/// Which side is generated. snippet_given_intent scores log P(S | I) and is
/// called "i2s" on the command line; intent_given_snippet is "s2i".
enum class Direction { snippet_given_intent, intent_given_snippet };

std::string direction_code(Direction d);
Direction parse_direction(std::string_view code);
std::string cell_name(CellType c);
CellType parse_cell(std::string_view name);

struct ModelDims {
  int embed = 256;
  int hidden = 512;
  CellType cell = CellType::gated;

  int gates() const { return cell == CellType::gated ? 3 : 1; }
  bool operator==(const ModelDims&) const = default;
};

/// Weights of one recurrence; rows are stacked per gate in the order
/// [update; reset; candidate] for the gated cell.
struct CellParams {
  Eigen::MatrixXd wx;  // gates*H x E
  Eigen::MatrixXd wh;  // gates*H x H
  Eigen::VectorXd b;   // gates*H
};

struct TensorView {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

struct EncDecParams {
  Eigen::MatrixXd src_embed;  // Vs x E
  Eigen::MatrixXd tgt_embed;  // Vt x E
  CellParams enc;
  CellParams dec;
  // Additive attention: score(s, h) = v' tanh(att_dec s + att_enc h)
  Eigen::MatrixXd att_dec;  // H x H
  Eigen::MatrixXd att_enc;  // H x H
  Eigen::VectorXd att_v;    // H
  // Output layer over [decoder state; context].
  Eigen::MatrixXd out_w;  // Vt x 2H
  Eigen::VectorXd out_b;  // Vt

  static EncDecParams zeros(const ModelDims& dims, int source_vocab, int target_vocab);
  void init_uniform(Rng& rng, double scale);
  void set_zero();

  /// Every tensor in declaration order; views alias this object's storage.
  std::vector<TensorView> tensors();
  std::size_t parameter_count();
  bool all_finite();
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  double validation_log_likelihood = 0.0;  // mean per token, natural log
  std::string language;
};

struct EncDecModel {
  Direction direction = Direction::snippet_given_intent;
  ModelDims dims;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  EncDecParams params;
  TrainingMeta meta;
  int max_source_tokens = 0;  // truncation applied before scoring; 0 = none
  int max_target_tokens = 0;

  static EncDecModel create(Direction direction, const ModelDims& dims, Vocabulary source,
                            Vocabulary target);
};

/// Dropout applied during a training forward pass. Masks are drawn from `seed`
/// in a fixed order, so equal seeds give equal masks.
struct DropoutConfig {
  double recurrent = 0.0;  // on the hidden-state input of each recurrence
  double output = 0.0;     // on the input of the output softmax layer
  std::uint64_t seed = 0;
};

/// Total negative log-likelihood (natural log) of target + EOS given source
/// under teacher forcing. When `grad` is non-null, adds grad_scale * dNLL/dθ.
double forward_backward(const EncDecModel& model, std::span<const int> source,
                        std::span<const int> target, const DropoutConfig* dropout,
                        EncDecParams* grad, double grad_scale = 1.0);

/// Encoder states, one column per source position (H x n).
Eigen::MatrixXd encode(const EncDecModel& model, std::span<const int> source);

struct StepDistribution {
  Eigen::VectorXd probabilities;  // over the target vocabulary
  Eigen::VectorXd attention;      // over source positions
};

/// Distribution of the next target token after `previous` (BOS is implicit),
/// recomputing the decoder from its initial state.
StepDistribution step_decode(const EncDecModel& model, const Eigen::MatrixXd& encoded,
                             std::span<const int> previous);

/// Per-step log-probabilities of target tokens followed by EOS, each floored
/// at kLogProbFloor.
std::vector<double> step_log_probs(const EncDecModel& model, std::span<const int> source,
                                   std::span<const int> target);

inline constexpr double kLogProbFloor = -30.0;

/// log P(target | source) = sum of step_log_probs; always <= 0.
double sequence_log_prob(const EncDecModel& model, std::span<const int> source,
                         std::span<const int> target);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace codemine
