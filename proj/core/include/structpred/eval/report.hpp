#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structpred/data/corpus.hpp"
#include "structpred/eval/metrics.hpp"

namespace structpred::eval {

enum class Task { kPos, kDep, kSdp };
std::string to_string(Task task);
Task task_from_string(const std::string& name);

// Counts for one sentence. For trees and tags every token is one gold and
// one predicted item; for graphs the items are arcs.
struct SentenceRecord {
  std::size_t length = 0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t unlabeled_correct = 0;
  std::size_t labeled_correct = 0;
};

struct LabelCounts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

struct RunReport {
  Task task = Task::kPos;
  std::string dataset;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
  std::vector<SentenceRecord> sentences;
  std::map<std::string, LabelCounts> labels;

  void validate() const;
  std::string to_json() const;
  static RunReport from_json(const std::string& text);
  // Metric names and values in aligned columns.
  std::string to_text() const;
};

struct ReportOptions {
  std::vector<bool> oov_mask;  // pos: one entry per token
  bool exclude_punctuation = false;
  bool include_top = true;
};

// Metrics: ALL/OOV for pos, UAS/LAS for dep, UP/UR/UF/LP/LR/LF for sdp.
RunReport build_report(Task task, const std::string& dataset, std::uint64_t seed,
                       std::span<const data::Sentence> gold, std::span<const data::Sentence> pred,
                       const ReportOptions& options = {});

struct MetricSummary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation
  double min = 0;
  double max = 0;
};

struct AggregateReport {
  Task task = Task::kPos;
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, MetricSummary> metrics;

  std::string to_json() const;
  std::string to_text() const;
};

// Needs at least two reports of the same task and dataset with the same
// metric names.
AggregateReport aggregate_runs(std::span<const RunReport> reports);

}  // namespace structpred::eval
