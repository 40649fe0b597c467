#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "structpred/data/corpus.hpp"

namespace structpred::eval {

struct AccuracyScores {
  double all = 0;  // percent
  double oov = 0;  // percent; 0 when no token is masked
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t oov_total = 0;
  std::size_t oov_correct = 0;
};

AccuracyScores pos_accuracy(std::span<const std::string> gold, std::span<const std::string> pred,
                            const std::vector<bool>& oov_mask);
// Compares the fine-grained tag column; `oov_mask` runs over all tokens of
// the corpus in order.
AccuracyScores pos_accuracy(std::span<const data::Sentence> gold,
                            std::span<const data::Sentence> pred,
                            const std::vector<bool>& oov_mask);

struct AttachmentOptions {
  bool exclude_punctuation = false;
};

// Universal PUNCT or a Penn-style punctuation tag.
bool is_punctuation(const data::Token& token);

struct AttachmentScores {
  double uas = 0;
  double las = 0;
  std::size_t total = 0;
  std::size_t head_correct = 0;
  std::size_t label_correct = 0;
};

AttachmentScores uas_las(std::span<const data::Sentence> gold,
                         std::span<const data::Sentence> pred,
                         const AttachmentOptions& options = {});

struct F1Scores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

// Micro-averaged scores from counts; precision and recall are 0 when their
// denominator is.
F1Scores f1_from_counts(std::size_t gold, std::size_t predicted, std::size_t correct);

struct GraphF1Options {
  bool labeled = true;
  bool include_top = true;
};

struct GraphArcKey {
  std::size_t head = 0;
  std::size_t dependent = 0;
  std::string label;
  auto operator<=>(const GraphArcKey&) const = default;
};

// Arcs of one sentence as scored: root arcs appear only with include_top,
// labels only when labeled.
std::set<GraphArcKey> graph_arc_set(const data::Sentence& sentence, const GraphF1Options& options);

F1Scores graph_f1(std::span<const data::Sentence> gold, std::span<const data::Sentence> pred,
                  const GraphF1Options& options = {});

// Fails with an alignment error naming the first mismatching sentence.
void check_aligned(std::span<const data::Sentence> gold, std::span<const data::Sentence> pred);

}  // namespace structpred::eval
