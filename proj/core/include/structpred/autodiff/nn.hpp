#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "structpred/autodiff/ops.hpp"
#include "structpred/autodiff/parameter.hpp"

namespace structpred::ad {

template <Real T>
struct Linear {
  Tensor<T> weight;  // in x out
  Tensor<T> bias;    // out

  static Linear create(ParameterStore<T>& store, const std::string& name,
                       std::size_t in, std::size_t out, Rng& rng);

  // x: n x in -> n x out
  Tensor<T> operator()(const Tensor<T>& x) const { return add(matmul(x, weight), bias); }
};

// Single-direction LSTM weights. Gate blocks are ordered input, forget,
// cell candidate, output along the 4h axis.
template <Real T>
struct LstmParams {
  Tensor<T> input_weight;      // in x 4h
  Tensor<T> recurrent_weight;  // h x 4h
  Tensor<T> bias;              // 4h, forget block initialised to +1
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static LstmParams create(ParameterStore<T>& store, const std::string& name,
                           std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
};

template <Real T>
struct LstmState {
  Tensor<T> h;  // 1 x hidden
  Tensor<T> c;  // 1 x hidden
};

// One cell update. x_t: 1 x in.
template <Real T>
LstmState<T> lstm_step(const Tensor<T>& x_t, const LstmState<T>& prev,
                       const LstmParams<T>& params);

// Same update with the input projection x_t * W_x + b already applied.
template <Real T>
LstmState<T> lstm_step_projected(const Tensor<T>& gates_in, const LstmState<T>& prev,
                                 const LstmParams<T>& params);

template <Real T>
LstmState<T> lstm_zero_state(std::size_t hidden_dim);

// Runs over the rows of `inputs` (n x in), right to left when `reverse`.
// Output rows stay aligned with input rows. `recurrent_mask` (1 x h), when
// defined, multiplies h before every recurrent use.
template <Real T>
Tensor<T> run_lstm(const LstmParams<T>& params, const Tensor<T>& inputs, bool reverse,
                   const Tensor<T>& recurrent_mask = {});

struct BiLstmDropout {
  double input = 0.0;      // variational, between layers
  double recurrent = 0.0;  // variational, on h across timesteps
};

// Stacked bidirectional LSTM. Layer l consumes the concatenated forward and
// backward states of layer l-1. An optional injected matrix is concatenated
// onto the input of one layer; index == layers() appends it to the output.
template <Real T>
class StackedBiLstm {
 public:
  StackedBiLstm() = default;
  // `layer_input_dims[l]` is the full input width of layer l.
  StackedBiLstm(ParameterStore<T>& store, const std::string& name,
                const std::vector<std::size_t>& layer_input_dims, std::size_t hidden_dim,
                Rng& rng);

  std::size_t layers() const { return layers_.size(); }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t output_dim() const { return 2 * hidden_dim_; }

  struct Injection {
    std::size_t layer = 0;
    Tensor<T> values;
  };

  Tensor<T> forward(const Tensor<T>& inputs, const std::optional<Injection>& injection,
                    const BiLstmDropout& dropout, bool training, Rng& rng) const;

 private:
  std::vector<std::pair<LstmParams<T>, LstmParams<T>>> layers_;
  std::size_t hidden_dim_ = 0;
};

}  // namespace structpred::ad
