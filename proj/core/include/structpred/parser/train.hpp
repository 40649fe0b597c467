#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "structpred/autodiff/optim.hpp"
#include "structpred/data/corpus.hpp"
#include "structpred/parser/biaffine.hpp"
#include "structpred/parser/graph.hpp"
#include "structpred/parser/tree.hpp"

namespace structpred::parser {

template <ad::Real T>
struct ParserExample {
  ParserFeatures<T> features;
  std::vector<std::size_t> heads;   // tree task
  std::vector<std::size_t> labels;  // tree task
  std::vector<LabeledArc> arcs;     // graph task
  std::size_t size() const { return features.lemmas.size(); }
};

template <ad::Real T>
ParserFeatures<T> make_features(const data::Sentence& sentence, const ad::Tensor<T>& contextual);

// Gold trees and graphs mapped through the label vocabulary; unknown labels
// are an input error.
template <ad::Real T>
ParserExample<T> make_tree_example(const data::Sentence& sentence,
                                   const data::Vocabulary& labels,
                                   const ad::Tensor<T>& contextual);
template <ad::Real T>
ParserExample<T> make_graph_example(const data::Sentence& sentence,
                                    const data::Vocabulary& labels,
                                    const ad::Tensor<T>& contextual);

// Writes predictions into a copy-ready sentence.
void apply_tree(data::Sentence& sentence, const TreeDecode& decoded,
                const data::Vocabulary& labels);
void apply_graph(data::Sentence& sentence, std::span<const LabeledArc> arcs,
                 const data::Vocabulary& labels);

// Batches of whole sentences, filled in length order up to `token_budget`
// tokens; a single longer sentence forms its own batch.
std::vector<std::vector<std::size_t>> token_batches(std::span<const std::size_t> lengths,
                                                    std::size_t token_budget);

enum class ParserTask { kTree, kGraph };

struct ParserEval {
  std::size_t step = 0;
  double train_loss = 0;  // mean over batches since the previous evaluation
  double dev_score = 0;
  double learning_rate = 0;
  bool improved = false;
};

struct ParserTrainOptions {
  ad::OptimizerConfig optimizer = ad::OptimizerConfig::parsing_defaults();
  std::size_t eval_every_steps = 100;
  // Stop once the DEV score (percent) reaches this value.
  std::optional<double> stop_at_dev_score;
  GraphDecodeConfig decode;
  std::function<void(const ParserEval&)> on_eval;
};

struct ParserTrainResult {
  double best_dev_score = 0;
  std::size_t best_step = 0;
  double final_dev_score = 0;
  std::size_t steps = 0;
  std::vector<ParserEval> history;
};

// LAS for trees, labeled F1 (root arcs included) for graphs, in percent.
template <ad::Real T>
double parser_dev_score(const BiaffineModel<T>& model, std::span<const ParserExample<T>> dev,
                        ParserTask task, const GraphDecodeConfig& decode = {});

template <ad::Real T>
ad::Tensor<T> parser_loss(const BiaffineModel<T>& model, const ParserExample<T>& example,
                          ParserTask task, bool training, Rng& rng);

// Best-DEV-LAS checkpoint is left in the model.
template <ad::Real T>
ParserTrainResult train_parser(BiaffineModel<T>& model, std::span<const ParserExample<T>> train,
                               std::span<const ParserExample<T>> dev,
                               const ParserTrainOptions& options, Rng& rng);

// Best-DEV-LF checkpoint is left in the model.
template <ad::Real T>
ParserTrainResult train_graph_parser(BiaffineModel<T>& model,
                                     std::span<const ParserExample<T>> train,
                                     std::span<const ParserExample<T>> dev,
                                     const ParserTrainOptions& options, Rng& rng);

}  // namespace structpred::parser
