#include "structpred/tagger/attention.hpp"

#include <cmath>
#include <cstdio>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::tagger {

template <ad::Real T>
SelfAttention<T> self_attention(const ad::Tensor<T>& states) {
  if (states.rank() != 2 || states.dim(0) == 0) {
    fail(ErrorCode::kDimension,
         "self_attention: expected n x d states, got " + ad::shape_string(states.shape()));
  }
  const T factor = T(1) / std::sqrt(static_cast<T>(states.dim(1)));
  auto scores = ad::scale(ad::matmul(states, ad::transpose(states)), factor);
  auto weights = ad::softmax(scores);
  return {ad::matmul(weights, states), weights};
}

template SelfAttention<float> self_attention(const ad::Tensor<float>&);
template SelfAttention<double> self_attention(const ad::Tensor<double>&);

std::vector<double> average_attention(std::span<const AttentionRecord> records,
                                      std::size_t length) {
  std::vector<double> mean(length * length, 0.0);
  std::size_t matched = 0;
  for (const auto& record : records) {
    if (record.length != length) continue;
    if (record.weights.size() != length * length) {
      fail(ErrorCode::kDimension, "attention record '" + record.sent_id + "' has " +
                                      std::to_string(record.weights.size()) +
                                      " weights for length " + std::to_string(length));
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += record.weights[i];
    ++matched;
  }
  if (matched == 0) {
    fail(ErrorCode::kInput, "no sentences of length " + std::to_string(length));
  }
  for (double& v : mean) v /= static_cast<double>(matched);
  return mean;
}

std::string attention_csv(std::span<const double> weights, std::size_t length) {
  std::string out;
  char buffer[32];
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      if (j) out += ',';
      std::snprintf(buffer, sizeof buffer, "%.9g", weights[i * length + j]);
      out += buffer;
    }
    out += '\n';
  }
  return out;
}

}  // namespace structpred::tagger
