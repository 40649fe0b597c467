#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "structpred/parser/biaffine.hpp"

namespace structpred::parser {

// Softmax cross-entropy over head candidates for every dependent plus
// softmax cross-entropy over labels at the gold head. `heads[d-1]` and
// `labels[d-1]` describe token d.
template <ad::Real T>
ad::Tensor<T> tree_loss(const ad::Tensor<T>& arc, const ad::Tensor<T>& rel,
                        std::span<const std::size_t> heads, std::span<const std::size_t> labels,
                        double arc_weight = 1.0, double label_weight = 1.0);

struct TreeDecode {
  std::vector<std::size_t> heads;
  std::vector<std::size_t> labels;
};

TreeDecode decode_tree(const ScorePack& scores, bool single_root = true);

}  // namespace structpred::parser
