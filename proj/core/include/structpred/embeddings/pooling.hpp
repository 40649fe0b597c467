#pragma once

#include <span>
#include <string>
#include <vector>

#include "structpred/error.hpp"

namespace structpred::emb {

enum class PoolingStrategy { kLast, kAverage };

std::string to_string(PoolingStrategy strategy);
PoolingStrategy pooling_from_string(const std::string& name);

// Reduces one token's subword vectors to a single vector.
template <typename V>
std::vector<V> pool_subwords(std::span<const std::vector<V>> vectors,
                             PoolingStrategy strategy) {
  if (vectors.empty()) fail(ErrorCode::kInput, "pool_subwords: no subword vectors");
  if (strategy == PoolingStrategy::kLast) return vectors.back();
  std::vector<V> out(vectors.front().size(), V(0));
  for (const auto& v : vectors) {
    if (v.size() != out.size()) {
      fail(ErrorCode::kDimension, "pool_subwords: subword vectors differ in length");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  for (auto& x : out) x /= static_cast<V>(vectors.size());
  return out;
}

}  // namespace structpred::emb
