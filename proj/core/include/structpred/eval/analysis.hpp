#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structpred/eval/report.hpp"

namespace structpred::eval {

struct LengthBin {
  std::size_t lo = 1;
  std::optional<std::size_t> hi;  // empty for the overflow bin
  std::size_t sentences = 0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t unlabeled_correct = 0;
  std::size_t labeled_correct = 0;
  std::optional<double> uf;  // empty when the bin holds no sentence
  std::optional<double> lf;

  std::string name() const;
};

// Bins [1, w], [w+1, 2w], ... up to max_len, then one overflow bin. Sentence
// records of every report are pooled.
std::vector<LengthBin> length_binned_f1(std::span<const RunReport> reports,
                                        std::size_t bin_width = 10, std::size_t max_len = 50);

std::string length_bins_csv(std::span<const LengthBin> bins);
// Line chart: labeled solid, unlabeled dashed.
std::string length_bins_svg(std::span<const LengthBin> bins, const std::string& title = "");

struct LabelDiff {
  std::string label;
  double f1_a = 0;
  double f1_b = 0;
  double diff = 0;  // f1_b - f1_a
};

struct LabelRanking {
  std::vector<LabelDiff> all;       // diff descending, then label name
  std::vector<LabelDiff> positive;  // top_k with diff > 0, largest first
  std::vector<LabelDiff> negative;  // top_k with diff < 0, most negative first
};

double label_f1(const LabelCounts& counts);

LabelRanking label_diff_ranking(const RunReport& a, const RunReport& b, std::size_t top_k = 5);

std::string label_ranking_csv(const LabelRanking& ranking);
std::string label_ranking_svg(const LabelRanking& ranking, const std::string& title = "");

// Grey-scale heat map of a row-stochastic matrix.
std::string attention_svg(std::span<const double> weights, std::size_t length,
                          std::span<const std::string> labels = {});

}  // namespace structpred::eval
