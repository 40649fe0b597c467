#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "structpred/autodiff/tensor.hpp"
#include "structpred/rng.hpp"

namespace structpred::ad {

enum class Init {
  kZeros,
  kOnes,
  kXavierUniform,
  // Small symmetric uniform noise, for embedding tables without pretraining.
  kUniformSmall,
};

template <Real T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  std::uint64_t step = 0;
  // Frozen parameters are saved with the model but skipped by optimizers.
  bool trainable = true;
};

// Owns the trainable leaves of a model. Insertion order is the canonical
// order for checkpoints and optimizer sweeps.
template <Real T>
class ParameterStore {
 public:
  Tensor<T> create(const std::string& name, Shape shape, Init init, Rng& rng);
  Tensor<T> create_from(const std::string& name, Shape shape, std::vector<T> values);
  // Registers a constant that travels with the checkpoint, e.g. a pretrained
  // embedding table.
  Tensor<T> create_frozen(const std::string& name, Shape shape, std::vector<T> values);

  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  std::vector<std::unique_ptr<Parameter<T>>>& params() { return params_; }
  const std::vector<std::unique_ptr<Parameter<T>>>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  void zero_grad();

  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

 private:
  Tensor<T> insert(const std::string& name, Tensor<T> tensor, bool trainable);

  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace structpred::ad
