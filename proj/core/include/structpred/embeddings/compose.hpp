#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structpred/autodiff/nn.hpp"

namespace structpred::emb {

// Input composition concatenates contextual vectors onto the encoder input.
// Hidden composition runs the first `split_layer` encoder layers on static
// features only and concatenates the contextual vectors onto the input of
// layer `split_layer`.
enum class CompositionScheme { kInput, kHidden };

std::string to_string(CompositionScheme scheme);
CompositionScheme composition_from_string(const std::string& name);

struct CompositionPlan {
  CompositionScheme scheme = CompositionScheme::kInput;
  std::size_t split_layer = 1;
  std::size_t static_dim = 0;
  std::size_t contextual_dim = 0;  // 0 = no contextual component

  // Width of the tensor fed to layer 0.
  std::size_t encoder_input_dim() const;
  // Input widths of every encoder layer, given the per-direction hidden size.
  std::vector<std::size_t> layer_input_dims(std::size_t layers, std::size_t hidden) const;
  // Width of the encoder output, including a contextual block appended after
  // the last layer when split_layer == layers.
  std::size_t output_dim(std::size_t layers, std::size_t hidden) const;

  void validate(std::size_t layers) const;
};

template <ad::Real T>
struct ComposedInput {
  ad::Tensor<T> base;
  std::optional<typename ad::StackedBiLstm<T>::Injection> injection;
};

// Every part is n x d_k; contextual, when defined, is n x contextual_dim.
template <ad::Real T>
ComposedInput<T> compose_input(std::span<const ad::Tensor<T>> static_parts,
                               const ad::Tensor<T>& contextual,
                               const CompositionPlan& plan);

template <ad::Real T>
ad::Tensor<T> run_encoder(const ad::StackedBiLstm<T>& encoder, const ComposedInput<T>& input,
                          const ad::BiLstmDropout& dropout, bool training, Rng& rng) {
  return encoder.forward(input.base, input.injection, dropout, training, rng);
}

}  // namespace structpred::emb
