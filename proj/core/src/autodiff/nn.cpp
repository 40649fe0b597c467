#include "structpred/autodiff/nn.hpp"

#include "structpred/error.hpp"

namespace structpred::ad {

template <Real T>
Linear<T> Linear<T>::create(ParameterStore<T>& store, const std::string& name,
                            std::size_t in, std::size_t out, Rng& rng) {
  Linear layer;
  layer.weight = store.create(name + ".weight", {in, out}, Init::kXavierUniform, rng);
  layer.bias = store.create(name + ".bias", {out}, Init::kZeros, rng);
  return layer;
}

template <Real T>
LstmParams<T> LstmParams<T>::create(ParameterStore<T>& store, const std::string& name,
                                    std::size_t input_dim, std::size_t hidden_dim,
                                    Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.input_weight =
      store.create(name + ".input_weight", {input_dim, 4 * hidden_dim}, Init::kXavierUniform, rng);
  p.recurrent_weight = store.create(name + ".recurrent_weight", {hidden_dim, 4 * hidden_dim},
                                    Init::kXavierUniform, rng);
  std::vector<T> bias(4 * hidden_dim, T(0));
  std::fill(bias.begin() + static_cast<std::ptrdiff_t>(hidden_dim),
            bias.begin() + static_cast<std::ptrdiff_t>(2 * hidden_dim), T(1));
  p.bias = store.create_from(name + ".bias", {4 * hidden_dim}, std::move(bias));
  return p;
}

template <Real T>
LstmState<T> lstm_zero_state(std::size_t hidden_dim) {
  return {Tensor<T>::zeros({1, hidden_dim}), Tensor<T>::zeros({1, hidden_dim})};
}

template <Real T>
LstmState<T> lstm_step_projected(const Tensor<T>& gates_in, const LstmState<T>& prev,
                                 const LstmParams<T>& params) {
  const std::size_t h = params.hidden_dim;
  if (gates_in.rank() != 2 || gates_in.dim(0) != 1 || gates_in.dim(1) != 4 * h) {
    fail(ErrorCode::kDimension, "lstm gates " + shape_string(gates_in.shape()) +
                                    " do not match hidden size " + std::to_string(h));
  }
  if (prev.h.shape() != Shape{1, h} || prev.c.shape() != Shape{1, h}) {
    fail(ErrorCode::kDimension, "lstm state " + shape_string(prev.h.shape()) +
                                    " does not match hidden size " + std::to_string(h));
  }
  const auto gates = add(gates_in, matmul(prev.h, params.recurrent_weight));
  const auto i = sigmoid(slice(gates, 1, 0, h));
  const auto f = sigmoid(slice(gates, 1, h, 2 * h));
  const auto g = tanh(slice(gates, 1, 2 * h, 3 * h));
  const auto o = sigmoid(slice(gates, 1, 3 * h, 4 * h));
  auto c = add(mul(f, prev.c), mul(i, g));
  auto out = mul(o, tanh(c));
  return {std::move(out), std::move(c)};
}

template <Real T>
LstmState<T> lstm_step(const Tensor<T>& x_t, const LstmState<T>& prev,
                       const LstmParams<T>& params) {
  if (x_t.rank() != 2 || x_t.dim(0) != 1 || x_t.dim(1) != params.input_dim) {
    fail(ErrorCode::kDimension, "lstm input " + shape_string(x_t.shape()) +
                                    " does not match input size " +
                                    std::to_string(params.input_dim));
  }
  return lstm_step_projected(add(matmul(x_t, params.input_weight), params.bias), prev,
                             params);
}

template <Real T>
Tensor<T> run_lstm(const LstmParams<T>& params, const Tensor<T>& inputs, bool reverse,
                   const Tensor<T>& recurrent_mask) {
  if (inputs.rank() != 2 || inputs.dim(1) != params.input_dim) {
    fail(ErrorCode::kDimension, "lstm sequence " + shape_string(inputs.shape()) +
                                    " does not match input size " +
                                    std::to_string(params.input_dim));
  }
  const std::size_t n = inputs.dim(0);
  const auto projected = add(matmul(inputs, params.input_weight), params.bias);
  std::vector<Tensor<T>> outputs(n);
  auto state = lstm_zero_state<T>(params.hidden_dim);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    LstmState<T> prev = state;
    if (recurrent_mask.defined()) prev.h = mul(prev.h, recurrent_mask);
    state = lstm_step_projected(slice(projected, 0, t, t + 1), prev, params);
    outputs[t] = state.h;
  }
  return concat<T>(std::span<const Tensor<T>>(outputs), 0);
}

template <Real T>
StackedBiLstm<T>::StackedBiLstm(ParameterStore<T>& store, const std::string& name,
                                const std::vector<std::size_t>& layer_input_dims,
                                std::size_t hidden_dim, Rng& rng)
    : hidden_dim_(hidden_dim) {
  for (std::size_t l = 0; l < layer_input_dims.size(); ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    auto fw = LstmParams<T>::create(store, prefix + ".forward", layer_input_dims[l],
                                    hidden_dim, rng);
    auto bw = LstmParams<T>::create(store, prefix + ".backward", layer_input_dims[l],
                                    hidden_dim, rng);
    layers_.emplace_back(std::move(fw), std::move(bw));
  }
}

template <Real T>
Tensor<T> StackedBiLstm<T>::forward(const Tensor<T>& inputs,
                                    const std::optional<Injection>& injection,
                                    const BiLstmDropout& dropout_cfg, bool training,
                                    Rng& rng) const {
  Tensor<T> x = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (injection && injection->layer == l) x = concat({x, injection->values}, 1);
    if (l > 0) x = dropout(x, dropout_cfg.input, DropoutMode::kVariational, training, rng);
    Tensor<T> fw_mask, bw_mask;
    if (training && dropout_cfg.recurrent > 0.0) {
      fw_mask = dropout_mask<T>({1, hidden_dim_}, dropout_cfg.recurrent, rng);
      bw_mask = dropout_mask<T>({1, hidden_dim_}, dropout_cfg.recurrent, rng);
    }
    const auto fw = run_lstm(layers_[l].first, x, false, fw_mask);
    const auto bw = run_lstm(layers_[l].second, x, true, bw_mask);
    x = concat({fw, bw}, 1);
  }
  if (injection && injection->layer == layers_.size()) x = concat({x, injection->values}, 1);
  return x;
}

#define STRUCTPRED_INSTANTIATE_NN(T)                                                       \
  template struct Linear<T>;                                                               \
  template struct LstmParams<T>;                                                           \
  template class StackedBiLstm<T>;                                                         \
  template LstmState<T> lstm_zero_state<T>(std::size_t);                                   \
  template LstmState<T> lstm_step(const Tensor<T>&, const LstmState<T>&,                   \
                                  const LstmParams<T>&);                                   \
  template LstmState<T> lstm_step_projected(const Tensor<T>&, const LstmState<T>&,         \
                                            const LstmParams<T>&);                         \
  template Tensor<T> run_lstm(const LstmParams<T>&, const Tensor<T>&, bool, const Tensor<T>&);

STRUCTPRED_INSTANTIATE_NN(float)
STRUCTPRED_INSTANTIATE_NN(double)

}  // namespace structpred::ad
