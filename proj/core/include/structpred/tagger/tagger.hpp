#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structpred/autodiff/nn.hpp"
#include "structpred/autodiff/optim.hpp"
#include "structpred/data/corpus.hpp"
#include "structpred/data/vocab.hpp"
#include "structpred/embeddings/compose.hpp"
#include "structpred/embeddings/static_table.hpp"
#include "structpred/tagger/attention.hpp"
#include "structpred/tagger/crf.hpp"

namespace structpred::tagger {

struct TaggerConfig {
  bool use_static = true;
  bool use_contextual = false;
  // Width of the character-LM features; 0 disables them.
  std::size_t flair_dim = 0;
  std::size_t word_dim = 100;
  bool word_trainable = true;
  bool lowercase_lookup = false;
  std::size_t lstm_layers = 1;
  std::size_t lstm_hidden = 256;
  bool attention = false;
  double embedding_dropout = 0.5;
  emb::CompositionScheme scheme = emb::CompositionScheme::kInput;
  std::size_t split_layer = 1;
  std::size_t contextual_dim = 0;

  void validate() const;
};

// Per-sentence inputs. `flair` and `contextual` are n x d constants, left
// undefined when the component is disabled.
template <ad::Real T>
struct TaggerFeatures {
  std::vector<std::string> forms;
  ad::Tensor<T> flair;
  ad::Tensor<T> contextual;
};

template <ad::Real T>
struct TaggerExample {
  TaggerFeatures<T> features;
  std::vector<std::size_t> tags;
};

template <ad::Real T>
class TaggerModel {
 public:
  // `words` is the lookup vocabulary of a randomly initialised table; with
  // `pretrained` the table and its vocabulary come from the file instead.
  TaggerModel(TaggerConfig config, data::Vocabulary words, data::Vocabulary tags, Rng& rng,
              const emb::EmbeddingFile* pretrained = nullptr);

  const TaggerConfig& config() const { return config_; }
  const data::Vocabulary& tags() const { return tags_; }
  const data::Vocabulary& words() const { return words_.vocab(); }
  ad::ParameterStore<T>& store() { return *store_; }
  const ad::ParameterStore<T>& store() const { return *store_; }
  const ad::Tensor<T>& transitions() const { return transitions_; }
  ad::Linear<T>& emission_layer() { return emission_; }
  std::size_t encoder_output_dim() const { return encoder_output_dim_; }

  // n x t. `attention`, when given and the block is enabled, receives A.
  ad::Tensor<T> emissions(const TaggerFeatures<T>& features, bool training, Rng& rng,
                          ad::Tensor<T>* attention = nullptr) const;
  ad::Tensor<T> loss(const TaggerExample<T>& example, bool training, Rng& rng) const;
  std::vector<std::size_t> decode(const TaggerFeatures<T>& features,
                                  ad::Tensor<T>* attention = nullptr) const;

 private:
  TaggerConfig config_;
  data::Vocabulary tags_;
  std::unique_ptr<ad::ParameterStore<T>> store_;
  emb::StaticTable<T> words_;
  emb::CompositionPlan plan_;
  ad::StackedBiLstm<T> encoder_;
  std::size_t encoder_output_dim_ = 0;
  ad::Linear<T> emission_;
  ad::Tensor<T> transitions_;
};

template <ad::Real T>
double tag_accuracy(const TaggerModel<T>& model, std::span<const TaggerExample<T>> examples);

struct TaggerEpoch {
  std::size_t epoch = 0;
  double train_loss = 0;
  double dev_accuracy = 0;
  double learning_rate = 0;
  bool improved = false;
};

struct TaggerTrainOptions {
  ad::OptimizerConfig optimizer = ad::OptimizerConfig::tagging_defaults();
  // Stop once DEV accuracy (percent) reaches this value.
  std::optional<double> stop_at_dev_score;
  std::function<void(const TaggerEpoch&)> on_epoch;
};

struct TaggerTrainResult {
  double best_dev_accuracy = 0;
  std::size_t best_epoch = 0;
  double final_dev_accuracy = 0;
  std::size_t epochs = 0;
  std::vector<TaggerEpoch> history;
};

// Mini-batch training on sentence-count batches; the model is left holding
// the parameters of the best DEV epoch.
template <ad::Real T>
TaggerTrainResult train_tagger(TaggerModel<T>& model, std::span<const TaggerExample<T>> train,
                               std::span<const TaggerExample<T>> dev,
                               const TaggerTrainOptions& options, Rng& rng);

extern template class TaggerModel<float>;
extern template class TaggerModel<double>;

}  // namespace structpred::tagger
