#include <cmath>
#include <limits>

#include "doctest.h"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "structpred/autodiff/ops.hpp"
#include "structpred/data/io.hpp"
#include "structpred/tagger/attention.hpp"
#include "structpred/tagger/crf.hpp"
#include "structpred/tagger/tagger.hpp"

using namespace structpred;
using testing::code_of;
using testing::fixture;
using TD = ad::Tensor<double>;

namespace {

std::vector<double> values(const TD& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("crf partition small cases") {
  auto em = TD::from({1, 2}, {0.3, -1.2});
  auto tr = TD::zeros({4, 4});
  CHECK(tagger::crf_log_partition(em, tr).item() ==
        doctest::Approx(std::log(std::exp(0.3) + std::exp(-1.2))));
  for (std::size_t n : {1u, 3u, 5u})
    for (std::size_t t : {1u, 2u, 4u}) {
      auto z = tagger::crf_log_partition(TD::zeros({n, t}), TD::zeros({t + 2, t + 2})).item();
      CHECK(z == doctest::Approx(n * std::log(static_cast<double>(t))));
      std::vector<std::size_t> tags(n, 0);
      CHECK(tagger::crf_nll(TD::zeros({n, t}), TD::zeros({t + 2, t + 2}), std::span<const std::size_t>(tags))
                .item() == doctest::Approx(n * std::log(static_cast<double>(t))));
    }
}

TEST_CASE("crf matches exhaustive enumeration") {
  Rng rng(17);
  for (std::size_t n = 1; n <= 5; ++n)
    for (std::size_t t = 1; t <= 4; ++t)
      for (int trial = 0; trial < 20; ++trial) {
        auto em = testing::random_tensor({n, t}, rng);
        auto tr = testing::random_tensor({t + 2, t + 2}, rng);
        const auto oracle = testing::crf_enumerate(em.data(), tr.data(), n, t);
        const double z = tagger::crf_log_partition(em, tr).item();
        CHECK(std::abs(z - oracle.log_partition) < 1e-8);
        CHECK(std::abs(oracle.total_probability - 1.0) < 1e-8);
        const auto v = tagger::viterbi(em, tr);
        CHECK(v.tags == oracle.best_path);
        CHECK(std::abs(v.score - oracle.best_score) < 1e-9);
        CHECK(v.score <= z);
        if (t > 1) CHECK(v.score < z);
        std::vector<std::size_t> gold(n);
        for (auto& g : gold) g = rng.below(t);
        const double nll = tagger::crf_nll(em, tr, std::span<const std::size_t>(gold)).item();
        CHECK(nll >= -1e-8);
        const double p = std::exp(-nll);
        CHECK(p > 0);
        CHECK(p <= 1 + 1e-12);
        CHECK(tagger::crf_path_score(em, tr, std::span<const std::size_t>(gold)).item() ==
              doctest::Approx(testing::crf_path_score_naive(em.data(), tr.data(), n, t, gold)));
      }
}

TEST_CASE("crf gradient is marginals minus gold indicators") {
  Rng rng(2);
  const std::size_t n = 3, t = 3;
  auto em = TD::from({n, t}, values(testing::random_tensor({n, t}, rng)), true);
  auto tr = testing::random_tensor({t + 2, t + 2}, rng);
  std::vector<std::size_t> gold{2, 0, 1};
  tagger::crf_nll(em, tr, std::span<const std::size_t>(gold)).backward();
  // Node marginals by enumeration.
  const auto oracle = testing::crf_enumerate(em.data(), tr.data(), n, t);
  std::vector<double> marg(n * t, 0);
  std::vector<std::size_t> path(n, 0);
  for (std::size_t code = 0; code < 27; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= t) path[n - 1 - i] = c % t;
    const double p = std::exp(testing::crf_path_score_naive(em.data(), tr.data(), n, t, path) - oracle.log_partition);
    for (std::size_t i = 0; i < n; ++i) marg[i * t + path[i]] += p;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j)
      CHECK(em.grad()[i * t + j] == doctest::Approx(marg[i * t + j] - (gold[i] == j ? 1 : 0)).epsilon(1e-9));
}

TEST_CASE("crf extreme cases and errors") {
  auto em = TD::full({3, 2}, -1e9);
  std::vector<std::size_t> gold{1, 0, 1};
  std::vector<double> e(6, -1e9);
  for (std::size_t i = 0; i < 3; ++i) e[i * 2 + gold[i]] = 0;
  auto only = TD::from({3, 2}, e);
  CHECK(tagger::crf_nll(only, TD::zeros({4, 4}), std::span<const std::size_t>(gold)).item() ==
        doctest::Approx(0.0).epsilon(1e-9));

  Rng rng(1);
  auto one = tagger::viterbi(testing::random_tensor({4, 1}, rng), TD::zeros({3, 3}));
  CHECK(one.tags == std::vector<std::size_t>(4, 0));

  auto dom = TD::from({3, 3}, {0, 2, 1, 5, 1, 0, 0, 0, 3});
  CHECK(tagger::viterbi(dom, TD::zeros({5, 5})).tags == std::vector<std::size_t>{1, 0, 2});
  // Exact tie resolves to the lower id.
  CHECK(tagger::viterbi(TD::zeros({2, 3}), TD::zeros({5, 5})).tags == std::vector<std::size_t>{0, 0});

  std::vector<std::size_t> bad{0, 5, 0};
  CHECK(code_of([&] { tagger::crf_nll(only, TD::zeros({4, 4}), std::span<const std::size_t>(bad)); }) ==
        ErrorCode::kInput);
  CHECK(code_of([&] { tagger::crf_log_partition(only, TD::zeros({3, 3})); }) == ErrorCode::kDimension);
}

TEST_CASE("self-attention properties") {
  Rng rng(6);
  auto h1 = testing::random_tensor({1, 4}, rng);
  auto a1 = tagger::self_attention(h1);
  CHECK(a1.weights.item() == doctest::Approx(1.0));
  CHECK(values(a1.context) == values(h1));

  auto same = TD::from({3, 2}, {1, 2, 1, 2, 1, 2});
  auto as = tagger::self_attention(same);
  for (double w : as.weights.data()) CHECK(w == doctest::Approx(1.0 / 3));

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    auto a = tagger::self_attention(testing::random_tensor({n, 5}, rng));
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) row += a.weights.at(i, j);
      CHECK(std::abs(row - 1) < 1e-6);
    }
  }
}

TEST_CASE("attention averaging") {
  tagger::AttentionRecord a{"a", 2, {0.2, 0.8, 0.6, 0.4}, {}};
  tagger::AttentionRecord b{"b", 2, {0.4, 0.6, 1.0, 0.0}, {}};
  tagger::AttentionRecord c{"c", 3, std::vector<double>(9, 1.0 / 3), {}};
  std::vector<tagger::AttentionRecord> one{a};
  CHECK(tagger::average_attention(one, 2) == a.weights);
  std::vector<tagger::AttentionRecord> all{a, b, c};
  const auto avg = tagger::average_attention(all, 2);
  CHECK(avg[0] == doctest::Approx(0.3));
  CHECK(avg[1] == doctest::Approx(0.7));
  CHECK(avg[2] == doctest::Approx(0.8));
  CHECK(avg[3] == doctest::Approx(0.2));
  CHECK(code_of([&] { tagger::average_attention(all, 5); }) == ErrorCode::kInput);
  CHECK(tagger::attention_csv(a.weights, 2) == "0.2,0.8\n0.6,0.4\n");
}

namespace {

struct ToyTagging {
  data::Corpus corpus;
  data::Vocabulary words;
  data::Vocabulary tags;
  std::vector<tagger::TaggerExample<double>> examples;
};

ToyTagging toy_tagging(std::size_t limit = 0) {
  ToyTagging t;
  t.corpus = data::read_tagged(fixture("toy.tagged"));
  if (limit) t.corpus.resize(limit);
  t.words = data::build_vocab(t.corpus, data::VocabField::kForm);
  t.tags = data::build_vocab(t.corpus, data::VocabField::kPos, {1, false, false});
  for (const auto& s : t.corpus) {
    tagger::TaggerExample<double> ex;
    for (const auto& tok : s.tokens) {
      ex.features.forms.push_back(tok.form);
      ex.tags.push_back(t.tags.id(tok.pos));
    }
    t.examples.push_back(std::move(ex));
  }
  return t;
}

tagger::TaggerConfig small_config() {
  tagger::TaggerConfig cfg;
  cfg.word_dim = 8;
  cfg.lstm_hidden = 8;
  return cfg;
}

}  // namespace

TEST_CASE("tagger emissions shape and zero projection") {
  auto toy = toy_tagging(4);
  Rng rng(1);
  tagger::TaggerModel<double> model(small_config(), toy.words, toy.tags, rng);
  auto em = model.emissions(toy.examples[0].features, false, rng);
  CHECK(em.shape() == ad::Shape{toy.examples[0].features.forms.size(), toy.tags.size()});
  CHECK(model.transitions().shape() == ad::Shape{toy.tags.size() + 2, toy.tags.size() + 2});
  for (auto& v : model.emission_layer().weight.mutable_data()) v = 0;
  for (auto& v : model.emission_layer().bias.mutable_data()) v = 0;
  const auto zero = model.emissions(toy.examples[0].features, false, rng);
  for (double v : zero.data()) CHECK(v == 0.0);
}

TEST_CASE("attention with zero context projection leaves tags unchanged") {
  auto toy = toy_tagging(8);
  auto plain_cfg = small_config();
  auto attn_cfg = plain_cfg;
  attn_cfg.attention = true;
  Rng r1(42), r2(42);
  tagger::TaggerModel<double> plain(plain_cfg, toy.words, toy.tags, r1);
  tagger::TaggerModel<double> attn(attn_cfg, toy.words, toy.tags, r2);
  // Share every parameter; the context rows of the attention model's
  // projection are zero.
  const std::size_t enc = plain.encoder_output_dim();
  const std::size_t t = toy.tags.size();
  for (std::size_t i = 0; i < plain.store().size(); ++i) {
    auto& src = plain.store().params()[i];
    auto* dst = attn.store().find(src->name);
    REQUIRE(dst);
    if (src->name == plain.store().params()[i]->name && dst->tensor.size() == src->tensor.size()) {
      std::copy(src->tensor.data().begin(), src->tensor.data().end(), dst->tensor.mutable_data().begin());
    }
  }
  auto w = attn.emission_layer().weight.mutable_data();
  const auto pw = plain.emission_layer().weight.data();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t r = 0; r < enc; ++r)
    for (std::size_t c = 0; c < t; ++c) w[r * t + c] = pw[r * t + c];
  // Random transitions so decoding is not emission-only.
  Rng tr(3);
  auto a_tr = attn.store().find("tagger.crf.transitions")->tensor.mutable_data();
  auto p_tr = plain.store().find("tagger.crf.transitions")->tensor.mutable_data();
  for (std::size_t i = 0; i < a_tr.size(); ++i) a_tr[i] = p_tr[i] = tr.uniform(-1, 1);

  for (const auto& ex : toy.examples) {
    ad::Tensor<double> weights;
    CHECK(attn.decode(ex.features, &weights) == plain.decode(ex.features));
    CHECK(weights.defined());
    CHECK(weights.shape() == ad::Shape{ex.features.forms.size(), ex.features.forms.size()});
  }
}

TEST_CASE("tagger returns its best dev checkpoint") {
  auto toy = toy_tagging();
  std::vector<tagger::TaggerExample<double>> train(toy.examples.begin(), toy.examples.begin() + 24);
  std::vector<tagger::TaggerExample<double>> dev(toy.examples.begin() + 24, toy.examples.end());
  Rng rng(5);
  tagger::TaggerModel<double> model(small_config(), toy.words, toy.tags, rng);
  tagger::TaggerTrainOptions opt;
  opt.optimizer.max_epochs = 6;
  opt.optimizer.batch_size = 8;
  std::size_t calls = 0;
  opt.on_epoch = [&](const tagger::TaggerEpoch&) { ++calls; };
  auto result = tagger::train_tagger(model, std::span<const tagger::TaggerExample<double>>(train),
                                     std::span<const tagger::TaggerExample<double>>(dev), opt, rng);
  CHECK(calls == 6);
  CHECK(result.epochs == 6);
  CHECK(result.best_dev_accuracy >= result.final_dev_accuracy);
  double best = 0;
  for (const auto& e : result.history) best = std::max(best, e.dev_accuracy);
  CHECK(result.best_dev_accuracy == best);
  CHECK(tagger::tag_accuracy(model, std::span<const tagger::TaggerExample<double>>(dev)) ==
        doctest::Approx(result.best_dev_accuracy));
  CHECK(code_of([&] {
          tagger::train_tagger(model, {}, std::span<const tagger::TaggerExample<double>>(dev), opt, rng);
        }) == ErrorCode::kInput);
}

TEST_CASE("tagger config validation") {
  auto cfg = small_config();
  cfg.use_static = false;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kConfig);
  cfg = small_config();
  cfg.use_contextual = true;
  cfg.contextual_dim = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kConfig);
}
