#include "structpred/autodiff/optim.hpp"

#include <cmath>

#include "structpred/error.hpp"

namespace structpred::ad {

OptimizerConfig OptimizerConfig::parsing_defaults() { return OptimizerConfig{}; }

OptimizerConfig OptimizerConfig::tagging_defaults() {
  OptimizerConfig c;
  c.kind = OptimizerKind::kSgd;
  c.learning_rate = 0.1;
  c.anneal_factor = 0.5;
  c.anneal_every_steps.reset();
  c.anneal_patience_epochs = 2;
  c.batch_size = 32;
  c.max_epochs = 150;
  return c;
}

void OptimizerConfig::validate() const {
  if (anneal_every_steps.has_value() == anneal_patience_epochs.has_value()) {
    fail(ErrorCode::kConfig,
         "exactly one of anneal_every / anneal_patience must be set");
  }
  if (!(anneal_factor > 0.0 && anneal_factor <= 1.0)) {
    fail(ErrorCode::kConfig, "anneal_factor must lie in (0, 1]");
  }
  if (learning_rate <= 0.0) fail(ErrorCode::kConfig, "learning_rate must be positive");
  if (batch_size == 0) fail(ErrorCode::kConfig, "batch_size must be positive");
  if (anneal_every_steps && *anneal_every_steps == 0)
    fail(ErrorCode::kConfig, "anneal_every must be positive");
  if (clip_norm < 0.0) fail(ErrorCode::kConfig, "clip_norm must be non-negative");
}

template <Real T>
Optimizer<T>::Optimizer(OptimizerConfig config)
    : config_(config), learning_rate_(config.learning_rate) {
  config_.validate();
}

template <Real T>
void Optimizer<T>::step(ParameterStore<T>& store) {
  for (const auto& p : store.params()) {
    if (p->trainable && !p->tensor.has_grad()) {
      fail(ErrorCode::kValidation, "parameter '" + p->name + "' has no gradient");
    }
  }
  const T lr = static_cast<T>(learning_rate_);
  for (auto& p : store.params()) {
    if (!p->trainable) continue;
    auto value = p->tensor.mutable_data();
    auto grad = p->tensor.mutable_grad();
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
    } else {
      const T b1 = static_cast<T>(config_.adam_beta1);
      const T b2 = static_cast<T>(config_.adam_beta2);
      const T eps = static_cast<T>(config_.adam_epsilon);
      ++p->step;
      const T c1 = T(1) - std::pow(b1, static_cast<T>(p->step));
      const T c2 = T(1) - std::pow(b2, static_cast<T>(p->step));
      for (std::size_t i = 0; i < value.size(); ++i) {
        T& m = p->first_moment[i];
        T& v = p->second_moment[i];
        m = b1 * m + (T(1) - b1) * grad[i];
        v = b2 * v + (T(1) - b2) * grad[i] * grad[i];
        const T m_hat = m / c1;
        const T v_hat = v / c2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
    std::fill(grad.begin(), grad.end(), T(0));
  }
}

template <Real T>
void Optimizer<T>::on_step_end() {
  ++steps_;
  if (config_.anneal_every_steps && steps_ % *config_.anneal_every_steps == 0) {
    learning_rate_ *= config_.anneal_factor;
  }
}

template <Real T>
bool Optimizer<T>::on_epoch_end(double dev_score) {
  if (!best_score_ || dev_score > *best_score_) {
    best_score_ = dev_score;
    stale_epochs_ = 0;
    return true;
  }
  ++stale_epochs_;
  if (config_.anneal_patience_epochs && stale_epochs_ >= *config_.anneal_patience_epochs) {
    learning_rate_ *= config_.anneal_factor;
    stale_epochs_ = 0;
  }
  return false;
}

template <Real T>
T clip_global_norm(ParameterStore<T>& store, T max_norm) {
  long double total = 0;
  for (const auto& p : store.params()) {
    if (!p->trainable) continue;
    for (T g : p->tensor.grad()) total += static_cast<long double>(g) * g;
  }
  const T norm = static_cast<T>(std::sqrt(total));
  if (max_norm > T(0) && norm > max_norm) {
    const T factor = max_norm / norm;
    for (auto& p : store.params()) {
      if (!p->trainable) continue;
      for (auto& g : p->tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

template class Optimizer<float>;
template class Optimizer<double>;
template float clip_global_norm(ParameterStore<float>&, float);
template double clip_global_norm(ParameterStore<double>&, double);

}  // namespace structpred::ad
