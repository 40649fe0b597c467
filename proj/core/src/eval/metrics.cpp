#include "structpred/eval/metrics.hpp"

#include <algorithm>

#include "structpred/error.hpp"

namespace structpred::eval {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void check_aligned(std::span<const data::Sentence> gold, std::span<const data::Sentence> pred) {
  const std::size_t common = std::min(gold.size(), pred.size());
  for (std::size_t s = 0; s < common; ++s) {
    if (gold[s].size() != pred[s].size()) {
      fail(ErrorCode::kAlignment, "sentence " + std::to_string(s + 1) + ": gold has " +
                                      std::to_string(gold[s].size()) + " tokens, prediction " +
                                      std::to_string(pred[s].size()));
    }
  }
  if (gold.size() != pred.size()) {
    fail(ErrorCode::kAlignment, "gold has " + std::to_string(gold.size()) +
                                    " sentences, prediction " + std::to_string(pred.size()) +
                                    " (first unmatched sentence " +
                                    std::to_string(common + 1) + ")");
  }
}

AccuracyScores pos_accuracy(std::span<const std::string> gold, std::span<const std::string> pred,
                            const std::vector<bool>& oov_mask) {
  if (gold.size() != pred.size() || gold.size() != oov_mask.size()) {
    fail(ErrorCode::kAlignment, "pos_accuracy: " + std::to_string(gold.size()) +
                                    " gold tags, " + std::to_string(pred.size()) +
                                    " predicted, " + std::to_string(oov_mask.size()) +
                                    " mask entries");
  }
  AccuracyScores s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool ok = gold[i] == pred[i];
    ++s.total;
    s.correct += ok;
    if (oov_mask[i]) {
      ++s.oov_total;
      s.oov_correct += ok;
    }
  }
  s.all = percent(s.correct, s.total);
  s.oov = percent(s.oov_correct, s.oov_total);
  return s;
}

AccuracyScores pos_accuracy(std::span<const data::Sentence> gold,
                            std::span<const data::Sentence> pred,
                            const std::vector<bool>& oov_mask) {
  check_aligned(gold, pred);
  std::vector<std::string> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      g.push_back(gold[s].tokens[i].pos);
      p.push_back(pred[s].tokens[i].pos);
    }
  }
  return pos_accuracy(g, p, oov_mask);
}

bool is_punctuation(const data::Token& token) {
  static const std::set<std::string> kPennPunct = {"``", "''", ",", ".", ":",
                                                   "-LRB-", "-RRB-", "PU", "#", "$"};
  return token.upos == "PUNCT" || kPennPunct.count(token.pos) > 0;
}

AttachmentScores uas_las(std::span<const data::Sentence> gold,
                         std::span<const data::Sentence> pred,
                         const AttachmentOptions& options) {
  check_aligned(gold, pred);
  AttachmentScores s;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    for (std::size_t i = 0; i < gold[k].size(); ++i) {
      const auto& g = gold[k].tokens[i];
      const auto& p = pred[k].tokens[i];
      if (!g.tree_head) {
        fail(ErrorCode::kInput, "sentence " + std::to_string(k + 1) + " token " +
                                    std::to_string(i + 1) + ": gold head missing");
      }
      if (options.exclude_punctuation && is_punctuation(g)) continue;
      ++s.total;
      if (p.tree_head && *p.tree_head == *g.tree_head) {
        ++s.head_correct;
        if (p.tree_label == g.tree_label) ++s.label_correct;
      }
    }
  }
  s.uas = percent(s.head_correct, s.total);
  s.las = percent(s.label_correct, s.total);
  return s;
}

F1Scores f1_from_counts(std::size_t gold, std::size_t predicted, std::size_t correct) {
  F1Scores s;
  s.gold = gold;
  s.predicted = predicted;
  s.correct = correct;
  s.precision = percent(correct, predicted);
  s.recall = percent(correct, gold);
  s.f1 = percent(2 * correct, gold + predicted);
  return s;
}

std::set<GraphArcKey> graph_arc_set(const data::Sentence& sentence,
                                    const GraphF1Options& options) {
  std::set<GraphArcKey> arcs;
  for (const auto& t : sentence.tokens) {
    for (const auto& a : t.graph_arcs) {
      if (a.head == 0 && !options.include_top) continue;
      arcs.insert({a.head, t.index, options.labeled ? a.label : std::string()});
    }
  }
  return arcs;
}

F1Scores graph_f1(std::span<const data::Sentence> gold, std::span<const data::Sentence> pred,
                  const GraphF1Options& options) {
  check_aligned(gold, pred);
  std::size_t g = 0, p = 0, c = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const auto ga = graph_arc_set(gold[k], options);
    const auto pa = graph_arc_set(pred[k], options);
    g += ga.size();
    p += pa.size();
    for (const auto& a : pa) c += ga.count(a);
  }
  return f1_from_counts(g, p, c);
}

}  // namespace structpred::eval
