#include "structpred/parser/tree.hpp"

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"
#include "structpred/parser/mst.hpp"

namespace structpred::parser {

template <ad::Real T>
ad::Tensor<T> tree_loss(const ad::Tensor<T>& arc, const ad::Tensor<T>& rel,
                        std::span<const std::size_t> heads, std::span<const std::size_t> labels,
                        double arc_weight, double label_weight) {
  const std::size_t nodes = arc.dim(0);
  const std::size_t n = nodes - 1;
  const std::size_t m = rel.dim(0);
  if (heads.size() != n || labels.size() != n) {
    fail(ErrorCode::kDimension, "tree_loss: gold annotation covers " +
                                    std::to_string(heads.size()) + " tokens, scores " +
                                    std::to_string(n));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t d = 1; d <= n; ++d) {
    if (heads[d - 1] > n || heads[d - 1] == d) {
      fail(ErrorCode::kValidation, "tree_loss: invalid gold head for token " + std::to_string(d));
    }
    if (labels[d - 1] >= m) {
      fail(ErrorCode::kValidation, "tree_loss: invalid gold label for token " + std::to_string(d));
    }
    pairs.emplace_back(heads[d - 1], d);
  }
  // Row d-1 lists the candidate heads of dependent d.
  auto by_dependent = ad::slice(ad::transpose(arc), 0, 1, nodes);
  ad::CrossEntropyOptions options;
  options.entry_mask = std::vector<bool>(n * nodes, true);
  for (std::size_t d = 1; d <= n; ++d) (*options.entry_mask)[(d - 1) * nodes + d] = false;
  auto arc_loss = ad::softmax_cross_entropy(by_dependent, heads, options);
  auto label_logits = ad::select_pairs(
      rel, std::span<const std::pair<std::size_t, std::size_t>>(pairs));
  auto label_loss = ad::softmax_cross_entropy(label_logits, labels);
  return ad::add(ad::scale(arc_loss, static_cast<T>(arc_weight)),
                 ad::scale(label_loss, static_cast<T>(label_weight)));
}

template ad::Tensor<float> tree_loss(const ad::Tensor<float>&, const ad::Tensor<float>&,
                                     std::span<const std::size_t>,
                                     std::span<const std::size_t>, double, double);
template ad::Tensor<double> tree_loss(const ad::Tensor<double>&, const ad::Tensor<double>&,
                                      std::span<const std::size_t>,
                                      std::span<const std::size_t>, double, double);

TreeDecode decode_tree(const ScorePack& scores, bool single_root) {
  TreeDecode out;
  out.heads = chu_liu_edmonds(scores.arc, scores.nodes, single_root);
  out.labels.resize(out.heads.size());
  for (std::size_t d = 1; d < scores.nodes; ++d) {
    const std::size_t h = out.heads[d - 1];
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.labels; ++i) {
      if (scores.rel_at(i, h, d) > scores.rel_at(best, h, d)) best = i;
    }
    out.labels[d - 1] = best;
  }
  return out;
}

}  // namespace structpred::parser
