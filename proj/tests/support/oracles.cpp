#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace structpred::testing {

double crf_path_score_naive(std::span<const double> emissions, std::span<const double> transitions,
                            std::size_t n, std::size_t t, std::span<const std::size_t> path) {
  const std::size_t w = t + 2;
  double score = transitions[t * w + path[0]];
  for (std::size_t i = 0; i < n; ++i) {
    score += emissions[i * t + path[i]];
    if (i + 1 < n) score += transitions[path[i] * w + path[i + 1]];
  }
  return score + transitions[path[n - 1] * w + (t + 1)];
}

CrfEnumeration crf_enumerate(std::span<const double> emissions,
                             std::span<const double> transitions, std::size_t n, std::size_t t) {
  std::vector<std::size_t> path(n, 0);
  std::vector<double> scores;
  CrfEnumeration out;
  out.best_score = -std::numeric_limits<double>::infinity();
  while (true) {
    const double s = crf_path_score_naive(emissions, transitions, n, t, path);
    scores.push_back(s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best_path = path;
    }
    std::size_t i = n;
    while (i > 0 && path[i - 1] + 1 == t) path[--i] = 0;
    if (i == 0) break;
    ++path[i - 1];
  }
  double m = out.best_score, acc = 0;
  for (double s : scores) acc += std::exp(s - m);
  out.log_partition = m + std::log(acc);
  for (double s : scores) out.total_probability += std::exp(s - out.log_partition);
  return out;
}

bool is_tree(std::span<const std::size_t> heads) {
  const std::size_t n = heads.size();
  for (std::size_t d = 1; d <= n; ++d) {
    std::size_t cur = d, steps = 0;
    while (cur != 0) {
      if (heads[cur - 1] > n || heads[cur - 1] == cur) return false;
      cur = heads[cur - 1];
      if (++steps > n) return false;
    }
  }
  return true;
}

ArborescenceSearch brute_force_arborescence(std::span<const double> scores, std::size_t nodes,
                                            bool single_root) {
  const std::size_t n = nodes - 1;
  ArborescenceSearch best;
  best.score = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> heads(n, 0);
  while (true) {
    std::size_t roots = 0;
    double s = 0;
    bool ok = true;
    for (std::size_t d = 1; d <= n && ok; ++d) {
      const std::size_t h = heads[d - 1];
      if (h == d) ok = false;
      if (h == 0) ++roots;
      s += scores[h * nodes + d];
    }
    if (ok && (!single_root || roots == 1) && std::isfinite(s) && is_tree(heads) &&
        s > best.score) {
      best.score = s;
      best.heads = heads;
      best.found = true;
    }
    std::size_t i = n;
    while (i > 0 && heads[i - 1] == n) heads[--i] = 0;
    if (i == 0) break;
    ++heads[i - 1];
  }
  return best;
}

bool greedy_heads_cyclic(std::span<const double> scores, std::size_t nodes) {
  const std::size_t n = nodes - 1;
  std::vector<std::size_t> heads(n);
  for (std::size_t d = 1; d <= n; ++d) {
    std::size_t best = 0;
    double bs = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h <= n; ++h) {
      if (h == d) continue;
      if (scores[h * nodes + d] > bs) {
        bs = scores[h * nodes + d];
        best = h;
      }
    }
    heads[d - 1] = best;
  }
  return !is_tree(heads);
}

std::vector<double> naive_arc_scores(std::span<const double> head, std::span<const double> dep,
                                     std::span<const double> u, std::size_t nodes, std::size_t k) {
  std::vector<double> out(nodes * nodes, 0.0);
  for (std::size_t h = 0; h < nodes; ++h)
    for (std::size_t d = 0; d < nodes; ++d) {
      double s = 0;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b <= k; ++b) {
          const double db = b < k ? dep[d * k + b] : 1.0;
          s += head[h * k + a] * u[a * (k + 1) + b] * db;
        }
      out[h * nodes + d] = s;
    }
  return out;
}

std::vector<double> naive_rel_scores(std::span<const double> head, std::span<const double> dep,
                                     std::span<const double> u, std::span<const double> v,
                                     std::size_t nodes, std::size_t l, std::size_t m) {
  std::vector<double> out(m * nodes * nodes, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t h = 0; h < nodes; ++h)
      for (std::size_t d = 0; d < nodes; ++d) {
        double s = 0;
        for (std::size_t a = 0; a < l; ++a)
          for (std::size_t b = 0; b <= l; ++b) {
            const double db = b < l ? dep[d * l + b] : 1.0;
            s += head[h * l + a] * u[(i * l + a) * (l + 1) + b] * db;
          }
        for (std::size_t c = 0; c < 2 * l + 1; ++c) {
          const double x = c < l ? head[h * l + c] : c < 2 * l ? dep[d * l + (c - l)] : 1.0;
          s += x * v[c * m + i];
        }
        out[(i * nodes + h) * nodes + d] = s;
      }
  return out;
}

}  // namespace structpred::testing
