#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "structpred/autodiff/tensor.hpp"
#include "structpred/rng.hpp"

namespace structpred::ad {

// Matrix product of rank-2 tensors.
template <Real T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <Real T> Tensor<T> transpose(const Tensor<T>& a);
template <Real T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

// Elementwise binary ops broadcast numpy-style: shapes are right-aligned and
// every axis must match or be 1 on one side.
template <Real T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <Real T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <Real T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <Real T> Tensor<T> scale(const Tensor<T>& a, T factor);

template <Real T> Tensor<T> tanh(const Tensor<T>& a);
template <Real T> Tensor<T> sigmoid(const Tensor<T>& a);
template <Real T> Tensor<T> relu(const Tensor<T>& a);
template <Real T> Tensor<T> exp(const Tensor<T>& a);

template <Real T> Tensor<T> sum(const Tensor<T>& a);
template <Real T> Tensor<T> mean(const Tensor<T>& a);

template <Real T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);
template <Real T>
Tensor<T> concat(std::initializer_list<Tensor<T>> parts, std::size_t axis) {
  std::vector<Tensor<T>> v(parts);
  return concat<T>(std::span<const Tensor<T>>(v), axis);
}
// Half-open range [begin, end) along one axis.
template <Real T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin,
                std::size_t end);

// Rows of a rank-2 table; backward scatter-adds into the selected rows.
template <Real T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> ids);

// Reduction over one axis. Rows consisting only of -inf reduce to -inf.
template <Real T> Tensor<T> logsumexp(const Tensor<T>& x, std::size_t axis);
// Softmax over the last axis.
template <Real T> Tensor<T> softmax(const Tensor<T>& x);

enum class Reduction { kMean, kSum };

struct CrossEntropyOptions {
  // Per row: false excludes the row from the loss (padding).
  std::optional<std::vector<bool>> row_mask;
  // Per logit entry, row-major: false removes the class from the row's
  // support (treated as -inf).
  std::optional<std::vector<bool>> entry_mask;
  Reduction reduction = Reduction::kMean;
};

// -log softmax(logits)[gold] over rows of an n x c matrix.
template <Real T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                std::span<const std::size_t> gold,
                                const CrossEntropyOptions& options = {});

// Mean binary cross-entropy on logits over unmasked entries, in the
// max(x,0) - x*t + log(1 + exp(-|x|)) form.
template <Real T>
Tensor<T> sigmoid_cross_entropy(const Tensor<T>& logits,
                                std::span<const T> targets,
                                const std::optional<std::vector<bool>>& mask = {});

enum class DropoutMode {
  kStandard,     // independent per element
  kWord,         // whole rows (tokens) of a rank-2 input
  kVariational,  // one mask per feature shared by every row (timestep)
};

// Inverted dropout: survivors are scaled by 1 / (1 - rate).
template <Real T>
Tensor<T> dropout(const Tensor<T>& x, double rate, DropoutMode mode,
                  bool training, Rng& rng);

// Sample an inverted-dropout mask as a constant tensor of `shape`.
template <Real T>
Tensor<T> dropout_mask(Shape shape, double rate, Rng& rng);

// S[i][p][q] = sum_ab left[p][a] * weights[i][a][b] * right[q][b].
// left: P x A, weights: M x A x B, right: Q x B, result: M x P x Q.
template <Real T>
Tensor<T> bilinear(const Tensor<T>& left, const Tensor<T>& weights,
                   const Tensor<T>& right);

// scores: M x P x Q. Returns K x M with row k = scores[:, p_k, q_k].
template <Real T>
Tensor<T> select_pairs(const Tensor<T>& scores,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs);

}  // namespace structpred::ad
