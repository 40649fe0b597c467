#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace structpred::parser {

// Maximum spanning arborescence over an (n+1) x (n+1) row-major score matrix
// with entry [h][d] scoring head h for dependent d and node 0 as the root.
// Entries equal to -inf are forbidden arcs. Returns heads for tokens 1..n.
// With `single_root` exactly one token attaches to 0. Ties go to the
// smallest head index.
std::vector<std::size_t> chu_liu_edmonds(std::span<const double> scores, std::size_t nodes,
                                         bool single_root = true);

// Sum of scores[heads[d-1]][d] over d = 1..n.
double tree_score(std::span<const double> scores, std::size_t nodes,
                  std::span<const std::size_t> heads);

}  // namespace structpred::parser
