#include "structpred/embeddings/compose.hpp"

#include "structpred/error.hpp"

namespace structpred::emb {

std::string to_string(CompositionScheme scheme) {
  return scheme == CompositionScheme::kInput ? "input" : "hidden";
}

CompositionScheme composition_from_string(const std::string& name) {
  if (name == "input") return CompositionScheme::kInput;
  if (name == "hidden") return CompositionScheme::kHidden;
  fail(ErrorCode::kConfig, "unknown composition scheme '" + name + "' (input|hidden)");
}

std::size_t CompositionPlan::encoder_input_dim() const {
  if (scheme == CompositionScheme::kInput) return static_dim + contextual_dim;
  return static_dim + (split_layer == 0 ? contextual_dim : 0);
}

std::vector<std::size_t> CompositionPlan::layer_input_dims(std::size_t layers,
                                                           std::size_t hidden) const {
  std::vector<std::size_t> dims;
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t d = l == 0 ? encoder_input_dim() : 2 * hidden;
    if (scheme == CompositionScheme::kHidden && l > 0 && l == split_layer) d += contextual_dim;
    dims.push_back(d);
  }
  return dims;
}

std::size_t CompositionPlan::output_dim(std::size_t layers, std::size_t hidden) const {
  std::size_t d = 2 * hidden;
  if (scheme == CompositionScheme::kHidden && split_layer == layers) d += contextual_dim;
  return d;
}

void CompositionPlan::validate(std::size_t layers) const {
  if (scheme == CompositionScheme::kHidden && split_layer > layers) {
    fail(ErrorCode::kConfig, "composition layer " + std::to_string(split_layer) +
                                 " exceeds encoder depth " + std::to_string(layers));
  }
}

template <ad::Real T>
ComposedInput<T> compose_input(std::span<const ad::Tensor<T>> static_parts,
                               const ad::Tensor<T>& contextual,
                               const CompositionPlan& plan) {
  std::vector<ad::Tensor<T>> parts(static_parts.begin(), static_parts.end());
  if (parts.empty() && !contextual.defined()) {
    fail(ErrorCode::kInput, "compose_input: no input components");
  }
  std::optional<std::size_t> rows;
  for (const auto& p : parts) {
    if (rows && p.dim(0) != *rows) {
      fail(ErrorCode::kDimension, "compose_input: components cover different token counts");
    }
    rows = p.dim(0);
  }
  if (contextual.defined() && rows && contextual.dim(0) != *rows) {
    fail(ErrorCode::kDimension, "compose_input: contextual vectors cover " +
                                    std::to_string(contextual.dim(0)) + " tokens, static " +
                                    std::to_string(*rows));
  }

  ComposedInput<T> out;
  const bool inject = contextual.defined() && plan.scheme == CompositionScheme::kHidden &&
                      plan.split_layer > 0;
  if (contextual.defined() && !inject) parts.push_back(contextual);
  if (parts.empty()) {
    fail(ErrorCode::kInput, "compose_input: hidden-layer composition needs static parts");
  }
  out.base = parts.size() == 1 ? parts[0] : ad::concat<T>(std::span<const ad::Tensor<T>>(parts), 1);
  if (inject) out.injection = typename ad::StackedBiLstm<T>::Injection{plan.split_layer, contextual};
  return out;
}

template ComposedInput<float> compose_input(std::span<const ad::Tensor<float>>,
                                            const ad::Tensor<float>&, const CompositionPlan&);
template ComposedInput<double> compose_input(std::span<const ad::Tensor<double>>,
                                             const ad::Tensor<double>&,
                                             const CompositionPlan&);

}  // namespace structpred::emb
