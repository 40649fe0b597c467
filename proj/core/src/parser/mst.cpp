#include "structpred/parser/mst.hpp"

#include <cmath>
#include <limits>

#include "structpred/error.hpp"

namespace structpred::parser {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Returns a head for every node 1..n-1 (index 0 unused).
std::vector<std::size_t> solve(const std::vector<double>& s, std::size_t n) {
  std::vector<std::size_t> head(n, 0);
  for (std::size_t d = 1; d < n; ++d) {
    double best = kNegInf;
    std::size_t arg = kNone;
    for (std::size_t h = 0; h < n; ++h) {
      if (h == d) continue;
      if (s[h * n + d] > best) {
        best = s[h * n + d];
        arg = h;
      }
    }
    if (arg == kNone) {
      fail(ErrorCode::kInput, "chu_liu_edmonds: node " + std::to_string(d) +
                                  " has no admissible head");
    }
    head[d] = arg;
  }

  std::vector<std::size_t> mark(n, kNone);
  std::vector<bool> in_cycle(n, false);
  std::vector<std::size_t> cycle;
  for (std::size_t start = 1; start < n && cycle.empty(); ++start) {
    std::size_t v = start;
    while (v != 0 && mark[v] == kNone) {
      mark[v] = start;
      v = head[v];
    }
    if (v != 0 && mark[v] == start) {
      std::size_t u = v;
      do {
        in_cycle[u] = true;
        u = head[u];
      } while (u != v);
      for (std::size_t k = 0; k < n; ++k)
        if (in_cycle[k]) cycle.push_back(k);
    }
  }
  if (cycle.empty()) return head;

  std::vector<std::size_t> to_new(n, kNone), to_old;
  for (std::size_t v = 0; v < n; ++v) {
    if (!in_cycle[v]) {
      to_new[v] = to_old.size();
      to_old.push_back(v);
    }
  }
  const std::size_t c = to_old.size();
  const std::size_t m = c + 1;
  std::vector<double> s2(m * m, kNegInf);
  std::vector<std::size_t> enter(m, kNone), leave(m, kNone);
  for (std::size_t u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (std::size_t v = 1; v < n; ++v) {
      if (in_cycle[v] || u == v) continue;
      s2[to_new[u] * m + to_new[v]] = s[u * n + v];
    }
    double best = kNegInf;
    for (std::size_t v : cycle) {
      const double arc = s[u * n + v];
      if (arc == kNegInf) continue;
      const double gain = arc - s[head[v] * n + v];
      if (enter[to_new[u]] == kNone || gain > best) {
        best = gain;
        enter[to_new[u]] = v;
      }
    }
    if (enter[to_new[u]] != kNone) s2[to_new[u] * m + c] = best;
  }
  for (std::size_t v = 1; v < n; ++v) {
    if (in_cycle[v]) continue;
    double best = kNegInf;
    for (std::size_t u : cycle) {
      if (s[u * n + v] > best) {
        best = s[u * n + v];
        leave[to_new[v]] = u;
      }
    }
    s2[c * m + to_new[v]] = best;
  }

  const auto sub = solve(s2, m);
  std::vector<std::size_t> out(n, 0);
  for (std::size_t v = 1; v < n; ++v) {
    if (in_cycle[v]) {
      out[v] = head[v];
      continue;
    }
    const std::size_t h = sub[to_new[v]];
    out[v] = h == c ? leave[to_new[v]] : to_old[h];
  }
  const std::size_t u = to_old[sub[c]];
  out[enter[to_new[u]]] = u;
  return out;
}

}  // namespace

double tree_score(std::span<const double> scores, std::size_t nodes,
                  std::span<const std::size_t> heads) {
  double total = 0;
  for (std::size_t d = 1; d < nodes; ++d) total += scores[heads[d - 1] * nodes + d];
  return total;
}

std::vector<std::size_t> chu_liu_edmonds(std::span<const double> scores, std::size_t nodes,
                                         bool single_root) {
  if (nodes < 2) fail(ErrorCode::kInput, "chu_liu_edmonds: empty sentence");
  if (scores.size() != nodes * nodes) {
    fail(ErrorCode::kDimension, "chu_liu_edmonds: expected " + std::to_string(nodes * nodes) +
                                    " scores, got " + std::to_string(scores.size()));
  }
  std::vector<double> s(scores.begin(), scores.end());
  for (std::size_t v = 0; v < nodes; ++v) {
    s[v * nodes + v] = kNegInf;
    s[v * nodes] = kNegInf;
  }
  auto full = solve(s, nodes);
  std::vector<std::size_t> heads(full.begin() + 1, full.end());
  if (!single_root) return heads;
  std::size_t root_children = 0;
  for (std::size_t h : heads) root_children += h == 0;
  if (root_children == 1) return heads;

  std::vector<std::size_t> best;
  double best_score = kNegInf;
  for (std::size_t r = 1; r < nodes; ++r) {
    if (s[r] == kNegInf) continue;
    std::vector<double> restricted = s;
    for (std::size_t d = 1; d < nodes; ++d)
      if (d != r) restricted[d] = kNegInf;
    std::vector<std::size_t> candidate;
    try {
      auto out = solve(restricted, nodes);
      candidate.assign(out.begin() + 1, out.end());
    } catch (const Error&) {
      continue;
    }
    const double score = tree_score(s, nodes, candidate);
    if (best.empty() || score > best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  if (best.empty()) fail(ErrorCode::kInput, "chu_liu_edmonds: no single-rooted tree exists");
  return best;
}

}  // namespace structpred::parser
