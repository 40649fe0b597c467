#include "structpred/parser/graph.hpp"

#include <algorithm>
#include <set>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::parser {

template <ad::Real T>
ad::Tensor<T> graph_loss(const ad::Tensor<T>& arc, const ad::Tensor<T>& rel,
                         std::span<const LabeledArc> gold) {
  const std::size_t nodes = arc.dim(0);
  const std::size_t m = rel.dim(0);
  std::vector<T> targets(nodes * nodes, T(0));
  std::vector<bool> mask(nodes * nodes, false);
  for (std::size_t h = 0; h < nodes; ++h)
    for (std::size_t d = 1; d < nodes; ++d) mask[h * nodes + d] = h != d;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> labels;
  for (const auto& a : gold) {
    if (a.head >= nodes || a.dependent == 0 || a.dependent >= nodes || a.head == a.dependent) {
      fail(ErrorCode::kValidation, "graph_loss: gold arc " + std::to_string(a.head) + "->" +
                                       std::to_string(a.dependent) + " out of bounds");
    }
    if (a.label >= m) fail(ErrorCode::kValidation, "graph_loss: invalid gold label");
    targets[a.head * nodes + a.dependent] = T(1);
    pairs.emplace_back(a.head, a.dependent);
    labels.push_back(a.label);
  }
  auto arc_loss = ad::sigmoid_cross_entropy(arc, std::span<const T>(targets), mask);
  if (pairs.empty()) return arc_loss;
  auto label_logits = ad::select_pairs(
      rel, std::span<const std::pair<std::size_t, std::size_t>>(pairs));
  return ad::add(arc_loss, ad::softmax_cross_entropy(label_logits,
                                                     std::span<const std::size_t>(labels)));
}

template ad::Tensor<float> graph_loss(const ad::Tensor<float>&, const ad::Tensor<float>&,
                                      std::span<const LabeledArc>);
template ad::Tensor<double> graph_loss(const ad::Tensor<double>&, const ad::Tensor<double>&,
                                       std::span<const LabeledArc>);

std::vector<LabeledArc> decode_graph(const ScorePack& scores, const GraphDecodeConfig& config) {
  const std::size_t nodes = scores.nodes;
  auto best_label = [&](std::size_t h, std::size_t d) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.labels; ++i) {
      if (scores.rel_at(i, h, d) > scores.rel_at(best, h, d)) best = i;
    }
    return best;
  };
  std::vector<LabeledArc> arcs;
  for (std::size_t d = 1; d < nodes; ++d) {
    bool any = false;
    for (std::size_t h = 0; h < nodes; ++h) {
      if (h == d) continue;
      if (scores.arc_at(h, d) >= config.arc_threshold) {
        arcs.push_back({h, d, best_label(h, d)});
        any = true;
      }
    }
    if (!any && !config.allow_orphan_tokens) {
      std::size_t best = 0;
      for (std::size_t h = 0; h < nodes; ++h) {
        if (h != d && scores.arc_at(h, d) > scores.arc_at(best, d)) best = h;
      }
      arcs.push_back({best, d, best_label(best, d)});
    }
  }
  return arcs;
}

}  // namespace structpred::parser
