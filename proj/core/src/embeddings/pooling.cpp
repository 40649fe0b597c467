#include "structpred/embeddings/pooling.hpp"

namespace structpred::emb {

std::string to_string(PoolingStrategy strategy) {
  return strategy == PoolingStrategy::kLast ? "last" : "average";
}

PoolingStrategy pooling_from_string(const std::string& name) {
  if (name == "last") return PoolingStrategy::kLast;
  if (name == "average") return PoolingStrategy::kAverage;
  fail(ErrorCode::kConfig, "unknown pooling strategy '" + name + "' (last|average)");
}

}  // namespace structpred::emb
