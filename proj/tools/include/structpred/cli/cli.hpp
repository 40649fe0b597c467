#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "structpred/config/experiment.hpp"
#include "structpred/data/io.hpp"
#include "structpred/eval/analysis.hpp"
#include "structpred/eval/report.hpp"

namespace structpred::cli {

data::CorpusFormat format_for(eval::Task task);
std::string extension_for(eval::Task task);
// From the file extension (.conllu, .sdp, .tagged/.tsv/.txt).
data::CorpusFormat format_from_path(const std::filesystem::path& path);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  eval::RunReport dev;
  std::optional<eval::RunReport> test;
  // The test report when a test set is configured, else the dev report.
  const eval::RunReport& primary() const { return test ? *test : dev; }
};

struct TrainOutcome {
  std::vector<SeedOutcome> runs;
  std::optional<eval::AggregateReport> aggregate;
};

// Per seed: <out>/seed-<n>/{model.spck, model.json, report.json,
// dev_report.json, history.json, predictions}; <out>/aggregate.json once
// there are two or more seeds.
TrainOutcome train_experiment(const config::ExperimentConfig& config,
                              const std::filesystem::path& out, std::ostream& log);

// Reads a corpus in the model's native format and writes predictions in the
// same format. `precision` overrides the precision recorded with the model.
void predict_file(const std::filesystem::path& model_dir, const std::filesystem::path& input,
                  const std::filesystem::path& output,
                  const std::filesystem::path& sidecar = {},
                  const std::optional<std::string>& precision = std::nullopt);

struct EvaluateOptions {
  eval::Task task = eval::Task::kPos;
  std::filesystem::path train;  // pos: forms outside this corpus are OOV
  bool include_top = true;
  bool exclude_punctuation = false;
  std::string dataset = "eval";
};

eval::RunReport evaluate_files(const std::filesystem::path& gold,
                               const std::filesystem::path& pred,
                               const EvaluateOptions& options);

struct AttentionSummary {
  std::size_t length = 0;
  std::size_t sentences = 0;
  std::vector<double> weights;
};

// Averages the attention matrices of sentences with `length` tokens (the
// most frequent length when unset) and writes attention-<L>.csv and .svg.
AttentionSummary analyze_attention(const std::filesystem::path& model_dir,
                                   const std::filesystem::path& input,
                                   const std::filesystem::path& out,
                                   std::optional<std::size_t> length = std::nullopt,
                                   const std::filesystem::path& sidecar = {});

// length-bins.csv and length-bins.svg.
std::vector<eval::LengthBin> analyze_length(const std::vector<std::filesystem::path>& reports,
                                            const std::filesystem::path& out,
                                            std::size_t width = 10, std::size_t max_len = 50);

// label-ranking.csv and label-ranking.svg.
eval::LabelRanking analyze_labels(const std::filesystem::path& baseline,
                                  const std::filesystem::path& system,
                                  const std::filesystem::path& out, std::size_t top_k = 5);

eval::RunReport read_report(const std::filesystem::path& path);

// Command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace structpred::cli
