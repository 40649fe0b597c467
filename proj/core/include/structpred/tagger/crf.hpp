#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "structpred/autodiff/tensor.hpp"

namespace structpred::tagger {

// Transition matrices are (t+2) x (t+2) with entry [i][j] scoring i -> j.
// Row t is the start state and column t+1 the end state.
inline std::size_t bos_index(std::size_t tags) { return tags; }
inline std::size_t eos_index(std::size_t tags) { return tags + 1; }

// log sum over every path y of exp(score(y)), by the forward algorithm.
// emissions: n x t, transitions: (t+2) x (t+2). The backward pass writes
// node marginals into the emission gradient and expected transition counts
// into the transition gradient.
template <ad::Real T>
ad::Tensor<T> crf_log_partition(const ad::Tensor<T>& emissions,
                                const ad::Tensor<T>& transitions);

// Score of one path, start and end transitions included.
template <ad::Real T>
ad::Tensor<T> crf_path_score(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions,
                             std::span<const std::size_t> tags);

template <ad::Real T>
ad::Tensor<T> crf_nll(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions,
                      std::span<const std::size_t> tags);

template <ad::Real T>
struct ViterbiResult {
  std::vector<std::size_t> tags;
  T score = 0;
};

// Best path. Ties resolve to the lowest tag id at every backpointer and at
// the final step.
template <ad::Real T>
ViterbiResult<T> viterbi(const ad::Tensor<T>& emissions, const ad::Tensor<T>& transitions);

}  // namespace structpred::tagger
