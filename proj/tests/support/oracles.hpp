#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace structpred::testing {

// Exhaustive CRF over all t^n paths; transitions are (t+2) x (t+2) with BOS
// at t and EOS at t+1, emissions n x t, both row-major.
struct CrfEnumeration {
  double log_partition = 0;
  double best_score = 0;
  std::vector<std::size_t> best_path;
  // exp(score - log_partition) summed over every path.
  double total_probability = 0;
};

double crf_path_score_naive(std::span<const double> emissions, std::span<const double> transitions,
                            std::size_t n, std::size_t t, std::span<const std::size_t> path);
CrfEnumeration crf_enumerate(std::span<const double> emissions,
                             std::span<const double> transitions, std::size_t n, std::size_t t);

// Best arborescence rooted at node 0 by trying every head assignment.
struct ArborescenceSearch {
  double score = 0;
  std::vector<std::size_t> heads;
  bool found = false;
};
ArborescenceSearch brute_force_arborescence(std::span<const double> scores, std::size_t nodes,
                                            bool single_root);

// True when the per-dependent argmax heads contain a cycle.
bool greedy_heads_cyclic(std::span<const double> scores, std::size_t nodes);

// Acyclic and every token reaches 0; `heads[d-1]` is the head of d.
bool is_tree(std::span<const std::size_t> heads);

// Naive loops for the biaffine scorers. Inputs row-major.
// arc: S[h][d] = sum_ab H[h][a] U[a][b] [D[d];1][b]
std::vector<double> naive_arc_scores(std::span<const double> head, std::span<const double> dep,
                                     std::span<const double> u, std::size_t nodes, std::size_t k);
// rel: S[i][h][d] = sum_ab H[h][a] U[i][a][b] [D[d];1][b] + sum_c [H[h];D[d];1][c] V[c][i]
std::vector<double> naive_rel_scores(std::span<const double> head, std::span<const double> dep,
                                     std::span<const double> u, std::span<const double> v,
                                     std::size_t nodes, std::size_t l, std::size_t m);

}  // namespace structpred::testing
