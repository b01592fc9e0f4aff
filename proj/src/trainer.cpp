#include "codemine/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <exception>
#include <thread>

#include "codemine/tokenizer.hpp"

namespace codemine {

namespace {

// Work is cut into a fixed number of contiguous chunks whose partial sums are
// combined in chunk order, so results do not depend on the thread count.
std::size_t chunk_count(std::size_t n, int chunks) {
  return std::max<std::size_t>(1, std::min(static_cast<std::size_t>(std::max(1, chunks)), n));
}

template <typename Fn>
void parallel_chunks(std::size_t n, int max_chunks, int jobs, Fn fn) {
  const std::size_t chunks = chunk_count(n, max_chunks);
  const std::size_t threads = std::min<std::size_t>(chunks, std::max(1, jobs));
  auto run = [&](std::size_t c) { fn(n * c / chunks, n * (c + 1) / chunks, c); };
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t)
      workers.emplace_back([&, t] {
        try {
          for (std::size_t c; (c = next++) < chunks;) run(c);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t token_count(const IdPair& p) { return p.target.size() + 1; }

struct AdamState {
  EncDecParams m;
  EncDecParams v;
};

}  // namespace

std::size_t validation_size(std::size_t n) { return (n + 5) / 10; }

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix(seed ^ 0x5eed5ULL));
  rng.shuffle(order);
  const std::size_t nval = validation_size(n);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nval));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(nval), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

double mean_token_nll(const EncDecModel& model, const std::vector<IdPair>& pairs, int jobs) {
  if (pairs.empty()) throw std::invalid_argument("no pairs to evaluate");
  constexpr int kEvalChunks = 8;
  std::vector<double> sums(chunk_count(pairs.size(), kEvalChunks), 0.0);
  parallel_chunks(pairs.size(), kEvalChunks, jobs, [&](std::size_t b, std::size_t e, std::size_t c) {
    for (std::size_t i = b; i < e; ++i)
      sums[c] += forward_backward(model, pairs[i].source, pairs[i].target, nullptr, nullptr);
  });
  double total = 0.0;
  std::size_t tokens = 0;
  for (double s : sums) total += s;
  for (const auto& p : pairs) tokens += token_count(p);
  return total / static_cast<double>(tokens);
}

TrainingReport train_on_ids(EncDecModel& model, const std::vector<IdPair>& train,
                            const std::vector<IdPair>& validation, const TrainingConfig& config,
                            const StepCallback& on_step) {
  if (train.empty()) throw UserError("training split is empty");
  if (validation.empty()) throw UserError("validation split is empty; need at least 2 pairs");
  if (config.batch_size < 1) throw UserError("batch size must be positive");

  TrainingReport report;
  report.train_pairs = train.size();
  report.validation_pairs = validation.size();

  const int Vs = model.source_vocab.size(), Vt = model.target_vocab.size();
  AdamState adam{EncDecParams::zeros(model.dims, Vs, Vt), EncDecParams::zeros(model.dims, Vs, Vt)};
  std::vector<EncDecParams> grads(chunk_count(static_cast<std::size_t>(config.batch_size), config.grad_chunks),
                                  EncDecParams::zeros(model.dims, Vs, Vt));

  double best = -mean_token_nll(model, validation, config.jobs);
  report.initial_validation_log_likelihood = best;
  report.best_validation_log_likelihood = best;
  report.validation_history.push_back(best);
  EncDecParams best_params = model.params;

  Rng order_rng(mix(config.seed ^ 0x0bde5ULL));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::int64_t step = 0;
  int stale_epochs = 0;
  bool stop = false;
  auto evaluate = [&] {
    const double ll = -mean_token_nll(model, validation, config.jobs);
    report.validation_history.push_back(ll);
    if (ll > best) {
      best = ll;
      best_params = model.params;
      report.best_step = step;
      return true;
    }
    return false;
  };

  for (int epoch = 0; epoch < config.max_epochs && !stop; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t tokens = 0;
      for (std::size_t i = start; i < end; ++i) tokens += token_count(train[order[i]]);
      const double scale = 1.0 / static_cast<double>(tokens);

      for (auto& g : grads) g.set_zero();
      std::vector<double> losses(grads.size(), 0.0);
      parallel_chunks(end - start, config.grad_chunks, config.jobs, [&](std::size_t b, std::size_t e, std::size_t c) {
        for (std::size_t i = b; i < e; ++i) {
          const IdPair& p = train[order[start + i]];
          DropoutConfig dropout{config.recurrent_dropout, config.output_dropout,
                                mix(config.seed ^ mix(static_cast<std::uint64_t>(step)) ^ (start + i))};
          losses[c] += forward_backward(model, p.source, p.target, &dropout, &grads[c], scale);
        }
      });
      double loss = 0.0;
      for (double l : losses) loss += l;
      loss *= scale;
      for (std::size_t c = 1; c < grads.size(); ++c) {
        auto dst = grads[0].tensors();
        auto src = grads[c].tensors();
        for (std::size_t t = 0; t < dst.size(); ++t)
          for (Eigen::Index i = 0; i < dst[t].size(); ++i) dst[t].data[i] += src[t].data[i];
      }

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto params = model.params.tensors();
      auto g = grads[0].tensors();
      auto m = adam.m.tensors();
      auto v = adam.v.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (Eigen::Index i = 0; i < params[t].size(); ++i) {
          const double gi = g[t].data[i];
          double& mi = m[t].data[i];
          double& vi = v[t].data[i];
          mi = config.beta1 * mi + (1.0 - config.beta1) * gi;
          vi = config.beta2 * vi + (1.0 - config.beta2) * gi * gi;
          params[t].data[i] -=
              config.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + config.epsilon);
        }
      }
      if (!std::isfinite(loss) || !model.params.all_finite()) throw TrainingDiverged(step);
      if (on_step) on_step(step, loss);
      if (config.max_steps > 0 && step >= config.max_steps) {
        stop = true;
        break;
      }
    }
    report.epochs = epoch + 1;
    if (evaluate()) {
      stale_epochs = 0;
    } else if (++stale_epochs >= config.patience) {
      stop = true;
    }
  }

  report.steps = step;
  report.best_validation_log_likelihood = best;
  model.params = std::move(best_params);
  model.meta.seed = config.seed;
  model.meta.step = report.best_step;
  model.meta.validation_log_likelihood = best;
  model.meta.language = config.language;
  return report;
}

std::vector<std::string> intent_tokens(const std::string& intent, int limit) {
  auto tokens = tokenize(intent, TokenizeMode::natural_language);
  if (limit > 0 && tokens.size() > static_cast<std::size_t>(limit)) tokens.resize(limit);
  return tokens;
}

std::vector<std::string> code_tokens(const std::string& code, const LanguageProfile& profile,
                                     int limit) {
  auto tokens = tokenize(code, TokenizeMode::code, profile);
  if (limit > 0 && tokens.size() > static_cast<std::size_t>(limit)) tokens.resize(limit);
  return tokens;
}

EncDecModel train_correspondence(const std::vector<CorpusPair>& pairs, Direction direction,
                                 const TrainingConfig& config, const LanguageProfile& profile,
                                 TrainingReport* report, const StepCallback& on_step) {
  if (pairs.size() < 2) throw UserError("need at least 2 corpus pairs to train");
  std::vector<std::vector<std::string>> intents, codes;
  for (const auto& p : pairs) {
    intents.push_back(intent_tokens(p.intent, config.max_intent_tokens));
    codes.push_back(code_tokens(p.code, profile, config.max_code_tokens));
  }
  auto [train_idx, val_idx] = split_indices(pairs.size(), config.seed);

  const bool i2s = direction == Direction::snippet_given_intent;
  const auto& src_side = i2s ? intents : codes;
  const auto& tgt_side = i2s ? codes : intents;
  std::vector<std::vector<std::string>> src_train, tgt_train;
  for (std::size_t i : train_idx) {
    src_train.push_back(src_side[i]);
    tgt_train.push_back(tgt_side[i]);
  }
  EncDecModel model =
      EncDecModel::create(direction, config.dims, Vocabulary::build(src_train, config.min_frequency),
                          Vocabulary::build(tgt_train, config.min_frequency));
  model.max_source_tokens = i2s ? config.max_intent_tokens : config.max_code_tokens;
  model.max_target_tokens = i2s ? config.max_code_tokens : config.max_intent_tokens;
  Rng init(mix(config.seed ^ (i2s ? 0x1ULL : 0x2ULL)));
  model.params.init_uniform(init, config.init_scale);

  auto encode_pairs = [&](const std::vector<std::size_t>& idx) {
    std::vector<IdPair> out;
    for (std::size_t i : idx) {
      IdPair p{model.source_vocab.encode(src_side[i]), model.target_vocab.encode(tgt_side[i])};
      if (p.source.empty()) p.source.push_back(Vocabulary::kUnk);
      out.push_back(std::move(p));
    }
    return out;
  };
  TrainingReport r = train_on_ids(model, encode_pairs(train_idx), encode_pairs(val_idx), config,
                                  on_step);
  if (report) *report = r;
  return model;
}

}  // namespace codemine
