#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "structpred/autodiff/nn.hpp"
#include "structpred/autodiff/optim.hpp"
#include "structpred/data/corpus.hpp"
#include "structpred/data/vocab.hpp"

namespace structpred::emb {

// Character stream of a sentence is sentinel + text + sentinel.
inline constexpr char kCharSentinel = '\n';

enum class LmDirection { kForward, kBackward };

struct CharLmConfig {
  std::size_t embedding_dim = 100;
  std::size_t hidden_dim = 2048;
  std::size_t epochs = 10;
  ad::OptimizerConfig optimizer = [] {
    ad::OptimizerConfig c;
    c.kind = ad::OptimizerKind::kAdam;
    c.learning_rate = 1e-2;
    c.adam_beta2 = 0.999;
    c.adam_epsilon = 1e-8;
    c.anneal_factor = 1.0;
    c.anneal_every_steps = 1000000;
    return c;
  }();
  // Inserted between tokens when raw text has to be reconstructed; empty
  // for scripts written without spaces.
  std::string token_separator = " ";
};

// Character offsets [begin, end] (inclusive, 0-based in the raw text) of each
// token, located left to right. Fails when a form is not found.
std::vector<std::pair<std::size_t, std::size_t>> token_char_offsets(
    const data::Sentence& sentence, const std::string& separator = " ");

std::string sentence_text(const data::Sentence& sentence, const std::string& separator = " ");

// One direction of the character language model. Characters are bytes.
template <ad::Real T>
class CharLmHalf {
 public:
  CharLmHalf(std::string name, LmDirection direction, data::Vocabulary chars,
             std::size_t embedding_dim, std::size_t hidden_dim, Rng& rng);

  LmDirection direction() const { return direction_; }
  const data::Vocabulary& chars() const { return chars_; }
  std::size_t hidden_dim() const { return lstm_.hidden_dim; }
  ad::ParameterStore<T>& store() { return *store_; }
  const ad::ParameterStore<T>& store() const { return *store_; }

  // Vocabulary ids of sentinel + text + sentinel in reading order.
  std::vector<std::size_t> encode(const std::string& text) const;

  // Hidden state after consuming each stream position, indexed by position
  // in the original (left-to-right) stream: stream_length x hidden.
  ad::Tensor<T> hidden_states(const std::string& text) const;

  // Mean next-character cross-entropy over the stream.
  ad::Tensor<T> loss(const std::string& text) const;

  // Probability distribution over the next character after reading `prefix`
  // (in this half's reading direction, sentinel included).
  std::vector<T> next_char_distribution(const std::string& prefix) const;

 private:
  ad::Tensor<T> run(const std::vector<std::size_t>& ids) const;

  LmDirection direction_;
  data::Vocabulary chars_;
  std::unique_ptr<ad::ParameterStore<T>> store_;
  ad::Tensor<T> embedding_;
  ad::LstmParams<T> lstm_;
  ad::Linear<T> output_;
};

// Character vocabulary over raw texts, including the sentinel.
data::Vocabulary build_char_vocab(std::span<const std::string> texts);

template <ad::Real T>
T perplexity(const CharLmHalf<T>& lm, std::span<const std::string> texts);

struct CharLmEpoch {
  std::size_t epoch = 0;
  double perplexity = 0;
};

// Trains one half on the texts; `on_epoch` receives dev (or train, when dev
// is empty) perplexity after each epoch.
template <ad::Real T>
std::unique_ptr<CharLmHalf<T>> train_char_lm(
    std::span<const std::string> train_texts, std::span<const std::string> dev_texts,
    LmDirection direction, const CharLmConfig& config, Rng& rng,
    const std::function<void(const CharLmEpoch&)>& on_epoch = {});

// Forward and backward halves with the contextual string embedding rule:
// token spanning characters [i, j] gets h_forward(c_{j+1}) ++ h_backward(c_{i-1}).
template <ad::Real T>
class CharLm {
 public:
  CharLm(std::unique_ptr<CharLmHalf<T>> forward, std::unique_ptr<CharLmHalf<T>> backward,
         std::string separator = " ");

  std::size_t output_dim() const { return forward_->hidden_dim() + backward_->hidden_dim(); }
  const CharLmHalf<T>& forward() const { return *forward_; }
  const CharLmHalf<T>& backward() const { return *backward_; }
  CharLmHalf<T>& forward() { return *forward_; }
  CharLmHalf<T>& backward() { return *backward_; }
  const std::string& separator() const { return separator_; }

  // n x output_dim constant (no gradient into the language model).
  ad::Tensor<T> flair_embed(const data::Sentence& sentence) const;

 private:
  std::unique_ptr<CharLmHalf<T>> forward_;
  std::unique_ptr<CharLmHalf<T>> backward_;
  std::string separator_;
};

extern template class CharLmHalf<float>;
extern template class CharLmHalf<double>;
extern template class CharLm<float>;
extern template class CharLm<double>;

}  // namespace structpred::emb
