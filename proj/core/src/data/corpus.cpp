#include "structpred/data/corpus.hpp"

#include <algorithm>

#include "structpred/error.hpp"

namespace structpred::data {

bool Sentence::has_tree() const {
  return !tokens.empty() &&
         std::all_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.tree_head.has_value(); });
}

bool is_single_rooted_tree(const std::vector<std::size_t>& heads) {
  const std::size_t n = heads.size();
  std::size_t roots = 0;
  for (std::size_t d = 0; d < n; ++d) {
    if (heads[d] > n || heads[d] == d + 1) return false;
    if (heads[d] == 0) ++roots;
  }
  if (roots != 1) return false;
  // 0 = unvisited, 1 = on current walk, 2 = known to reach root.
  std::vector<int> mark(n + 1, 0);
  mark[0] = 2;
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> walk;
    std::size_t node = start;
    while (mark[node] == 0) {
      mark[node] = 1;
      walk.push_back(node);
      node = heads[node - 1];
    }
    if (mark[node] == 1) return false;
    for (auto w : walk) mark[w] = 2;
  }
  return true;
}

namespace {

std::string where(const Sentence& s) {
  return s.sent_id.empty() ? std::string("sentence") : "sentence '" + s.sent_id + "'";
}

void validate_indices(const Sentence& sentence) {
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (sentence.tokens[i].index != i + 1) {
      fail(ErrorCode::kValidation, where(sentence) + ": token indices must run 1.." +
                                       std::to_string(sentence.tokens.size()));
    }
  }
}

}  // namespace

void validate_tree(const Sentence& sentence) {
  validate_indices(sentence);
  const std::size_t n = sentence.size();
  std::size_t annotated = 0;
  for (const auto& t : sentence.tokens) annotated += t.tree_head.has_value();
  if (annotated == 0) return;
  if (annotated != n) {
    fail(ErrorCode::kValidation, where(sentence) + ": tree annotation is incomplete");
  }
  std::vector<std::size_t> heads;
  std::size_t roots = 0;
  for (const auto& t : sentence.tokens) {
    const std::size_t h = *t.tree_head;
    if (h > n) {
      fail(ErrorCode::kValidation, where(sentence) + ": head " + std::to_string(h) +
                                       " of token " + std::to_string(t.index) +
                                       " out of range");
    }
    if (h == t.index) {
      fail(ErrorCode::kValidation, where(sentence) + ": token " + std::to_string(t.index) +
                                       " heads itself");
    }
    roots += (h == 0);
    heads.push_back(h);
  }
  if (roots != 1) {
    fail(ErrorCode::kValidation, where(sentence) + ": expected exactly one root, found " +
                                     std::to_string(roots));
  }
  if (!is_single_rooted_tree(heads)) {
    fail(ErrorCode::kValidation, where(sentence) + ": cycle detected in heads");
  }
}

void validate_graph(const Sentence& sentence) {
  validate_indices(sentence);
  const std::size_t n = sentence.size();
  for (const auto& t : sentence.tokens) {
    bool root_arc = false;
    for (const auto& arc : t.graph_arcs) {
      if (arc.head > n) {
        fail(ErrorCode::kValidation, where(sentence) + ": arc head " +
                                         std::to_string(arc.head) + " out of range");
      }
      if (arc.head == t.index) {
        fail(ErrorCode::kValidation, where(sentence) + ": self arc on token " +
                                         std::to_string(t.index));
      }
      root_arc = root_arc || arc.head == 0;
    }
    if (root_arc != t.top) {
      fail(ErrorCode::kValidation, where(sentence) + ": top flag of token " +
                                       std::to_string(t.index) +
                                       " disagrees with its root arc");
    }
  }
}

void mark_predicates(Sentence& sentence) {
  for (auto& t : sentence.tokens) t.pred = false;
  for (const auto& t : sentence.tokens) {
    for (const auto& arc : t.graph_arcs) {
      if (arc.head > 0) sentence.tokens.at(arc.head - 1).pred = true;
    }
  }
}

std::string join_forms(const Sentence& sentence, const std::string& separator) {
  std::string out;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i) out += separator;
    out += sentence.tokens[i].form;
  }
  return out;
}

}  // namespace structpred::data
