#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "structpred/parser/biaffine.hpp"

namespace structpred::parser {

struct GraphDecodeConfig {
  // On the logit scale; 0 is probability 0.5.
  double arc_threshold = 0.0;
  // When false, a token left without heads receives its best-scoring one.
  bool allow_orphan_tokens = true;
};

struct LabeledArc {
  std::size_t head = 0;
  std::size_t dependent = 0;
  std::size_t label = 0;
  auto operator<=>(const LabeledArc&) const = default;
};

// Mean sigmoid cross-entropy over every (h, d) with d >= 1 and h != d, plus
// mean label cross-entropy over the gold arcs (zero when there are none).
template <ad::Real T>
ad::Tensor<T> graph_loss(const ad::Tensor<T>& arc, const ad::Tensor<T>& rel,
                         std::span<const LabeledArc> gold);

// Arcs sorted by (dependent, head).
std::vector<LabeledArc> decode_graph(const ScorePack& scores,
                                     const GraphDecodeConfig& config = {});

}  // namespace structpred::parser
