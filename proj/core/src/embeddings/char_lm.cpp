#include "structpred/embeddings/char_lm.hpp"

#include <cmath>

#include "structpred/error.hpp"

namespace structpred::emb {

std::string sentence_text(const data::Sentence& sentence, const std::string& separator) {
  return sentence.raw_text ? *sentence.raw_text : data::join_forms(sentence, separator);
}

std::vector<std::pair<std::size_t, std::size_t>> token_char_offsets(
    const data::Sentence& sentence, const std::string& separator) {
  const std::string text = sentence_text(sentence, separator);
  std::vector<std::pair<std::size_t, std::size_t>> offsets;
  std::size_t cursor = 0;
  for (const auto& t : sentence.tokens) {
    if (t.form.empty()) {
      fail(ErrorCode::kInput, "token " + std::to_string(t.index) + " has an empty form");
    }
    const std::size_t at = text.find(t.form, cursor);
    if (at == std::string::npos) {
      fail(ErrorCode::kAlignment, "token '" + t.form + "' (" + std::to_string(t.index) +
                                      ") not found in raw text of sentence '" +
                                      sentence.sent_id + "'");
    }
    offsets.emplace_back(at, at + t.form.size() - 1);
    cursor = at + t.form.size();
  }
  return offsets;
}

data::Vocabulary build_char_vocab(std::span<const std::string> texts) {
  data::Vocabulary vocab(true, data::VocabField::kChar);
  vocab.add(std::string(1, kCharSentinel));
  for (const auto& text : texts)
    for (char c : text) vocab.add(std::string(1, c));
  return vocab;
}

template <ad::Real T>
CharLmHalf<T>::CharLmHalf(std::string name, LmDirection direction, data::Vocabulary chars,
                          std::size_t embedding_dim, std::size_t hidden_dim, Rng& rng)
    : direction_(direction),
      chars_(std::move(chars)),
      store_(std::make_unique<ad::ParameterStore<T>>()) {
  embedding_ = store_->create(name + ".embedding", {chars_.size(), embedding_dim},
                              ad::Init::kUniformSmall, rng);
  lstm_ = ad::LstmParams<T>::create(*store_, name + ".lstm", embedding_dim, hidden_dim, rng);
  // Zero output weights start the model at the uniform distribution.
  output_.weight = store_->create(name + ".output.weight", {hidden_dim, chars_.size()},
                                  ad::Init::kZeros, rng);
  output_.bias = store_->create(name + ".output.bias", {chars_.size()}, ad::Init::kZeros, rng);
}

template <ad::Real T>
std::vector<std::size_t> CharLmHalf<T>::encode(const std::string& text) const {
  std::vector<std::size_t> ids;
  ids.reserve(text.size() + 2);
  ids.push_back(chars_.id(std::string(1, kCharSentinel)));
  for (char c : text) ids.push_back(chars_.id(std::string(1, c)));
  ids.push_back(chars_.id(std::string(1, kCharSentinel)));
  if (direction_ == LmDirection::kBackward) std::reverse(ids.begin(), ids.end());
  return ids;
}

template <ad::Real T>
ad::Tensor<T> CharLmHalf<T>::run(const std::vector<std::size_t>& ids) const {
  const auto inputs = ad::gather_rows(embedding_, std::span<const std::size_t>(ids));
  return ad::run_lstm(lstm_, inputs, false);
}

template <ad::Real T>
ad::Tensor<T> CharLmHalf<T>::hidden_states(const std::string& text) const {
  const auto states = run(encode(text));
  if (direction_ == LmDirection::kForward) return states;
  std::vector<std::size_t> reverse_rows(states.dim(0));
  for (std::size_t i = 0; i < reverse_rows.size(); ++i)
    reverse_rows[i] = reverse_rows.size() - 1 - i;
  return ad::gather_rows(states, std::span<const std::size_t>(reverse_rows));
}

template <ad::Real T>
ad::Tensor<T> CharLmHalf<T>::loss(const std::string& text) const {
  const auto ids = encode(text);
  const auto states = run(ids);
  const auto logits = output_(ad::slice(states, 0, 0, ids.size() - 1));
  std::vector<std::size_t> next(ids.begin() + 1, ids.end());
  return ad::softmax_cross_entropy(logits, std::span<const std::size_t>(next));
}

template <ad::Real T>
std::vector<T> CharLmHalf<T>::next_char_distribution(const std::string& prefix) const {
  if (prefix.empty()) fail(ErrorCode::kInput, "next_char_distribution: empty prefix");
  std::vector<std::size_t> ids;
  for (char c : prefix) ids.push_back(chars_.id(std::string(1, c)));
  const auto states = run(ids);
  const auto last = ad::slice(states, 0, ids.size() - 1, ids.size());
  const auto probs = ad::softmax(output_(last));
  return {probs.data().begin(), probs.data().end()};
}

template <ad::Real T>
T perplexity(const CharLmHalf<T>& lm, std::span<const std::string> texts) {
  long double total = 0;
  std::size_t count = 0;
  for (const auto& text : texts) {
    const std::size_t predictions = text.size() + 1;
    total += static_cast<long double>(lm.loss(text).item()) * predictions;
    count += predictions;
  }
  if (count == 0) fail(ErrorCode::kInput, "perplexity over an empty corpus");
  return static_cast<T>(std::exp(total / count));
}

template <ad::Real T>
std::unique_ptr<CharLmHalf<T>> train_char_lm(
    std::span<const std::string> train_texts, std::span<const std::string> dev_texts,
    LmDirection direction, const CharLmConfig& config, Rng& rng,
    const std::function<void(const CharLmEpoch&)>& on_epoch) {
  if (train_texts.empty()) fail(ErrorCode::kInput, "train_char_lm: empty corpus");
  const std::string name =
      direction == LmDirection::kForward ? "charlm.forward" : "charlm.backward";
  auto lm = std::make_unique<CharLmHalf<T>>(name, direction, build_char_vocab(train_texts),
                                            config.embedding_dim, config.hidden_dim, rng);
  ad::Optimizer<T> optimizer(config.optimizer);
  std::vector<std::size_t> order(train_texts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto eval_texts = dev_texts.empty() ? train_texts : dev_texts;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      auto loss = lm->loss(train_texts[i]);
      loss.backward();
      ad::clip_global_norm(lm->store(), static_cast<T>(config.optimizer.clip_norm));
      optimizer.step(lm->store());
      optimizer.on_step_end();
    }
    if (on_epoch) on_epoch({epoch, static_cast<double>(perplexity(*lm, eval_texts))});
  }
  return lm;
}

template <ad::Real T>
CharLm<T>::CharLm(std::unique_ptr<CharLmHalf<T>> forward,
                  std::unique_ptr<CharLmHalf<T>> backward, std::string separator)
    : forward_(std::move(forward)),
      backward_(std::move(backward)),
      separator_(std::move(separator)) {
  if (forward_->direction() != LmDirection::kForward ||
      backward_->direction() != LmDirection::kBackward) {
    fail(ErrorCode::kInput, "CharLm halves passed in the wrong order");
  }
}

template <ad::Real T>
ad::Tensor<T> CharLm<T>::flair_embed(const data::Sentence& sentence) const {
  const std::string text = sentence_text(sentence, separator_);
  const auto offsets = token_char_offsets(sentence, separator_);
  // Stream position of text character k is k + 1; position 0 and
  // text.size() + 1 are the sentinels.
  const auto fw = forward_->hidden_states(text);
  const auto bw = backward_->hidden_states(text);
  std::vector<std::size_t> fw_rows, bw_rows;
  for (const auto& [begin, end] : offsets) {
    if (end + 2 >= fw.dim(0)) {
      fail(ErrorCode::kAlignment, "token offsets outside raw text");
    }
    fw_rows.push_back(end + 2);  // c_{j+1}
    bw_rows.push_back(begin);    // c_{i-1}
  }
  const auto out =
      ad::concat({ad::gather_rows(fw, std::span<const std::size_t>(fw_rows)),
                  ad::gather_rows(bw, std::span<const std::size_t>(bw_rows))},
                 1);
  return out.detach();
}

template class CharLmHalf<float>;
template class CharLmHalf<double>;
template class CharLm<float>;
template class CharLm<double>;
template float perplexity(const CharLmHalf<float>&, std::span<const std::string>);
template double perplexity(const CharLmHalf<double>&, std::span<const std::string>);
template std::unique_ptr<CharLmHalf<float>> train_char_lm(
    std::span<const std::string>, std::span<const std::string>, LmDirection,
    const CharLmConfig&, Rng&, const std::function<void(const CharLmEpoch&)>&);
template std::unique_ptr<CharLmHalf<double>> train_char_lm(
    std::span<const std::string>, std::span<const std::string>, LmDirection,
    const CharLmConfig&, Rng&, const std::function<void(const CharLmEpoch&)>&);

}  // namespace structpred::emb
