#include "structpred/tagger/tagger.hpp"

#include <algorithm>
#include <numeric>

#include "structpred/error.hpp"

namespace structpred::tagger {

void TaggerConfig::validate() const {
  if (!use_static && flair_dim == 0 && !use_contextual) {
    fail(ErrorCode::kConfig, "tagger: no embedding component enabled");
  }
  if (use_contextual && contextual_dim == 0) {
    fail(ErrorCode::kConfig, "tagger: contextual component enabled without a dimension");
  }
  if (lstm_layers == 0 || lstm_hidden == 0) {
    fail(ErrorCode::kConfig, "tagger: encoder needs at least one layer and unit");
  }
  if (embedding_dropout < 0.0 || embedding_dropout >= 1.0) {
    fail(ErrorCode::kConfig, "tagger: embedding dropout must lie in [0, 1)");
  }
  if (scheme == emb::CompositionScheme::kHidden && !use_static && flair_dim == 0) {
    fail(ErrorCode::kConfig, "tagger: hidden-layer composition needs a static component");
  }
}

template <ad::Real T>
TaggerModel<T>::TaggerModel(TaggerConfig config, data::Vocabulary words, data::Vocabulary tags,
                            Rng& rng, const emb::EmbeddingFile* pretrained)
    : config_(std::move(config)),
      tags_(std::move(tags)),
      store_(std::make_unique<ad::ParameterStore<T>>()) {
  if (tags_.reserved()) {
    fail(ErrorCode::kConfig, "tagger: tag vocabulary must not reserve ids");
  }
  if (tags_.size() == 0) fail(ErrorCode::kInput, "tagger: empty tag vocabulary");
  if (pretrained) config_.word_dim = pretrained->dim;
  config_.validate();

  if (config_.use_static) {
    if (pretrained) {
      words_ = emb::StaticTable<T>::pretrained(*store_, "tagger.word", *pretrained,
                                               config_.lowercase_lookup, config_.word_trainable);
    } else {
      words_ = emb::StaticTable<T>::random(*store_, "tagger.word", std::move(words),
                                           config_.word_dim, config_.word_trainable,
                                           config_.lowercase_lookup, rng);
    }
  }
  plan_.scheme = config_.scheme;
  plan_.split_layer = config_.split_layer;
  plan_.static_dim = (config_.use_static ? config_.word_dim : 0) + config_.flair_dim;
  plan_.contextual_dim = config_.use_contextual ? config_.contextual_dim : 0;
  plan_.validate(config_.lstm_layers);

  encoder_ = ad::StackedBiLstm<T>(*store_, "tagger.encoder",
                                  plan_.layer_input_dims(config_.lstm_layers, config_.lstm_hidden),
                                  config_.lstm_hidden, rng);
  encoder_output_dim_ = plan_.output_dim(config_.lstm_layers, config_.lstm_hidden);
  const std::size_t features = encoder_output_dim_ * (config_.attention ? 2 : 1);
  emission_ = ad::Linear<T>::create(*store_, "tagger.emission", features, tags_.size(), rng);
  const std::size_t width = tags_.size() + 2;
  transitions_ = store_->create("tagger.crf.transitions", {width, width}, ad::Init::kZeros, rng);
}

template <ad::Real T>
ad::Tensor<T> TaggerModel<T>::emissions(const TaggerFeatures<T>& features, bool training,
                                        Rng& rng, ad::Tensor<T>* attention) const {
  const double rate = config_.embedding_dropout;
  std::vector<ad::Tensor<T>> parts;
  if (config_.use_static) {
    parts.push_back(ad::dropout(words_.embed(features.forms), rate, ad::DropoutMode::kStandard,
                                training, rng));
  }
  if (config_.flair_dim > 0) {
    if (!features.flair.defined() || features.flair.dim(1) != config_.flair_dim) {
      fail(ErrorCode::kDimension, "tagger: character-LM features missing or of wrong width");
    }
    parts.push_back(
        ad::dropout(features.flair, rate, ad::DropoutMode::kStandard, training, rng));
  }
  ad::Tensor<T> contextual;
  if (config_.use_contextual) {
    if (!features.contextual.defined() ||
        features.contextual.dim(1) != config_.contextual_dim) {
      fail(ErrorCode::kDimension, "tagger: contextual vectors missing or of wrong width");
    }
    contextual =
        ad::dropout(features.contextual, rate, ad::DropoutMode::kStandard, training, rng);
  }
  const auto composed =
      emb::compose_input<T>(std::span<const ad::Tensor<T>>(parts), contextual, plan_);
  auto states = emb::run_encoder(encoder_, composed, {}, training, rng);
  if (config_.attention) {
    auto block = self_attention(states);
    if (attention) *attention = block.weights;
    states = ad::concat({states, block.context}, 1);
  }
  return emission_(states);
}

template <ad::Real T>
ad::Tensor<T> TaggerModel<T>::loss(const TaggerExample<T>& example, bool training,
                                   Rng& rng) const {
  return crf_nll(emissions(example.features, training, rng), transitions_,
                 std::span<const std::size_t>(example.tags));
}

template <ad::Real T>
std::vector<std::size_t> TaggerModel<T>::decode(const TaggerFeatures<T>& features,
                                                ad::Tensor<T>* attention) const {
  ad::NoGradGuard guard;
  Rng unused(0);
  return viterbi(emissions(features, false, unused, attention), transitions_).tags;
}

template <ad::Real T>
double tag_accuracy(const TaggerModel<T>& model, std::span<const TaggerExample<T>> examples) {
  std::size_t total = 0, correct = 0;
  for (const auto& ex : examples) {
    const auto predicted = model.decode(ex.features);
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == ex.tags[i];
    total += predicted.size();
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

template <ad::Real T>
TaggerTrainResult train_tagger(TaggerModel<T>& model, std::span<const TaggerExample<T>> train,
                               std::span<const TaggerExample<T>> dev,
                               const TaggerTrainOptions& options, Rng& rng) {
  if (train.empty()) fail(ErrorCode::kInput, "train_tagger: empty training corpus");
  if (dev.empty()) fail(ErrorCode::kInput, "train_tagger: empty development corpus");
  ad::Optimizer<T> optimizer(options.optimizer);
  const auto& cfg = optimizer.config();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TaggerTrainResult result;
  auto best = model.store().snapshot();
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      ad::Tensor<T> total;
      for (std::size_t k = begin; k < end; ++k) {
        auto loss = model.loss(train[order[k]], true, rng);
        total = total.defined() ? ad::add(total, loss) : loss;
      }
      auto batch_loss = ad::scale(total, T(1) / static_cast<T>(end - begin));
      epoch_loss += static_cast<double>(batch_loss.item()) * static_cast<double>(end - begin);
      batch_loss.backward();
      if (cfg.clip_norm > 0) ad::clip_global_norm(model.store(), static_cast<T>(cfg.clip_norm));
      optimizer.step(model.store());
      optimizer.on_step_end();
    }
    const double dev_accuracy = tag_accuracy(model, dev);
    const double lr = optimizer.learning_rate();
    const bool improved = optimizer.on_epoch_end(dev_accuracy);
    if (improved || !have_best) {
      best = model.store().snapshot();
      have_best = true;
      result.best_dev_accuracy = dev_accuracy;
      result.best_epoch = epoch;
    }
    TaggerEpoch log{epoch, epoch_loss / static_cast<double>(train.size()), dev_accuracy, lr,
                    improved};
    result.history.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
    result.final_dev_accuracy = dev_accuracy;
    result.epochs = epoch;
    if (options.stop_at_dev_score && dev_accuracy >= *options.stop_at_dev_score) break;
  }
  model.store().restore(best);
  return result;
}

template class TaggerModel<float>;
template class TaggerModel<double>;
template double tag_accuracy(const TaggerModel<float>&, std::span<const TaggerExample<float>>);
template double tag_accuracy(const TaggerModel<double>&,
                             std::span<const TaggerExample<double>>);
template TaggerTrainResult train_tagger(TaggerModel<float>&,
                                        std::span<const TaggerExample<float>>,
                                        std::span<const TaggerExample<float>>,
                                        const TaggerTrainOptions&, Rng&);
template TaggerTrainResult train_tagger(TaggerModel<double>&,
                                        std::span<const TaggerExample<double>>,
                                        std::span<const TaggerExample<double>>,
                                        const TaggerTrainOptions&, Rng&);

}  // namespace structpred::tagger
