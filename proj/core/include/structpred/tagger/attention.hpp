#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "structpred/autodiff/tensor.hpp"

namespace structpred::tagger {

template <ad::Real T>
struct SelfAttention {
  ad::Tensor<T> context;  // n x d
  ad::Tensor<T> weights;  // n x n, row-stochastic
};

// A = softmax(H H^T / sqrt(d)) row-wise, context = A H.
template <ad::Real T>
SelfAttention<T> self_attention(const ad::Tensor<T>& states);

struct AttentionRecord {
  std::string sent_id;
  std::size_t length = 0;
  std::vector<double> weights;  // length x length, row-major
  std::vector<std::string> tags;
};

// Element-wise mean of every record whose length equals `length`.
std::vector<double> average_attention(std::span<const AttentionRecord> records,
                                      std::size_t length);

// Comma-separated matrix, one row per line.
std::string attention_csv(std::span<const double> weights, std::size_t length);

}  // namespace structpred::tagger
