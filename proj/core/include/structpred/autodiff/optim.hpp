#pragma once

#include <cstddef>
#include <optional>

#include "structpred/autodiff/parameter.hpp"

namespace structpred::ad {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.9;
  double adam_epsilon = 1e-12;
  double anneal_factor = 0.75;
  std::optional<std::size_t> anneal_every_steps = 5000;
  std::optional<std::size_t> anneal_patience_epochs;
  std::size_t max_steps = 50000;
  std::size_t max_epochs = 150;
  // Tokens per batch for the parsers, sentences per batch for the tagger.
  std::size_t batch_size = 5000;
  // Global-norm clip threshold; 0 disables clipping.
  double clip_norm = 5.0;

  // Parsing table: Adam, lr 1e-3, betas 0.9/0.9, eps 1e-12, x0.75 every
  // 5000 steps, 5000-token batches, 50000 steps.
  static OptimizerConfig parsing_defaults();
  // Tagging table: SGD, lr 0.1, x0.5 after 2 stale epochs, 32 sentences,
  // 150 epochs.
  static OptimizerConfig tagging_defaults();

  void validate() const;
};

template <Real T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Applies one update from the accumulated gradients, then zeroes them.
  void step(ParameterStore<T>& store);

  // Step-count annealing; call once per optimizer step.
  void on_step_end();
  // Patience annealing on a higher-is-better dev score; returns true when the
  // score improved on the best seen.
  bool on_epoch_end(double dev_score);

  double learning_rate() const { return learning_rate_; }
  std::size_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  double learning_rate_;
  std::size_t steps_ = 0;
  std::optional<double> best_score_;
  std::size_t stale_epochs_ = 0;
};

// Rescales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm measured before rescaling.
template <Real T>
T clip_global_norm(ParameterStore<T>& store, T max_norm);

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace structpred::ad
