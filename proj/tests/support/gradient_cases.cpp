#include "gradient_cases.hpp"

#include <utility>

#include "structpred/autodiff/nn.hpp"
#include "structpred/autodiff/ops.hpp"
#include "structpred/parser/biaffine.hpp"
#include "structpred/parser/graph.hpp"
#include "structpred/parser/tree.hpp"
#include "structpred/tagger/attention.hpp"
#include "structpred/tagger/crf.hpp"
#include "structpred/tagger/tagger.hpp"

namespace structpred::testing {

namespace {

using TD = ad::Tensor<double>;
using Inputs = std::vector<TD>;

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// Reduces any tensor to a scalar through a fixed random weighting so every
// output entry gets a distinct upstream gradient.
TD weighted_sum(const TD& x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(x, random_tensor(x.shape(), rng)));
}

GradCase unary(std::string name, std::function<TD(const TD&)> op, double lo = -2, double hi = 2) {
  return {name, [op, lo, hi](Rng& rng) {
            const std::uint64_t w = rng.next_u64();
            auto x = random_tensor({dim(rng, 1, 4), dim(rng, 1, 4)}, rng, lo, hi);
            return check_gradients([&](const Inputs& in) { return weighted_sum(op(in[0]), w); },
                                   {x});
          }};
}

}  // namespace

std::vector<GradCase> op_gradient_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"matmul", [](Rng& rng) {
                     const auto n = dim(rng, 1, 4), k = dim(rng, 1, 4), m = dim(rng, 1, 4);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& in) { return weighted_sum(ad::matmul(in[0], in[1]), w); },
                         {random_tensor({n, k}, rng), random_tensor({k, m}, rng)});
                   }});
  cases.push_back(unary("transpose", [](const TD& x) { return ad::transpose(x); }));
  cases.push_back(unary("reshape", [](const TD& x) { return ad::reshape(x, {x.size()}); }));
  cases.push_back({"add_broadcast", [](Rng& rng) {
                     const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& in) {
                           return weighted_sum(ad::add(ad::add(in[0], in[1]), in[2]), w);
                         },
                         {random_tensor({n, m}, rng), random_tensor({m}, rng),
                          random_tensor({n, 1}, rng)});
                   }});
  cases.push_back({"sub_broadcast", [](Rng& rng) {
                     const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& in) { return weighted_sum(ad::sub(in[0], in[1]), w); },
                         {random_tensor({n, m}, rng), random_tensor({1, m}, rng)});
                   }});
  cases.push_back({"mul_broadcast", [](Rng& rng) {
                     const auto a = dim(rng, 1, 3), n = dim(rng, 1, 3), m = dim(rng, 1, 3);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& in) { return weighted_sum(ad::mul(in[0], in[1]), w); },
                         {random_tensor({a, n, m}, rng), random_tensor({n, 1}, rng)});
                   }});
  cases.push_back(unary("scale", [](const TD& x) { return ad::scale(x, -1.7); }));
  cases.push_back(unary("tanh", [](const TD& x) { return ad::tanh(x); }));
  cases.push_back(unary("sigmoid", [](const TD& x) { return ad::sigmoid(x); }));
  cases.push_back(unary("relu", [](const TD& x) { return ad::relu(x); }));
  cases.push_back(unary("exp", [](const TD& x) { return ad::exp(x); }));
  cases.push_back(unary("sum", [](const TD& x) { return ad::sum(x); }));
  cases.push_back(unary("mean", [](const TD& x) { return ad::mean(x); }));
  cases.push_back({"concat", [](Rng& rng) {
                     const auto n = dim(rng, 1, 3), a = dim(rng, 1, 3), b = dim(rng, 1, 3);
                     const std::size_t axis = rng.below(2);
                     const auto w = rng.next_u64();
                     Inputs in = axis == 1 ? Inputs{random_tensor({n, a}, rng), random_tensor({n, b}, rng)}
                                           : Inputs{random_tensor({a, n}, rng), random_tensor({b, n}, rng)};
                     return check_gradients(
                         [&](const Inputs& x) {
                           return weighted_sum(ad::concat<double>(std::span<const TD>(x), axis), w);
                         },
                         in);
                   }});
  cases.push_back({"slice", [](Rng& rng) {
                     const auto n = dim(rng, 2, 5), m = dim(rng, 1, 3);
                     const auto b = rng.below(n - 1);
                     const auto e = b + 1 + rng.below(n - b - 1);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) { return weighted_sum(ad::slice(x[0], 0, b, e + 1), w); },
                         {random_tensor({n, m}, rng)});
                   }});
  cases.push_back({"gather_rows", [](Rng& rng) {
                     const auto v = dim(rng, 2, 5), d = dim(rng, 1, 3);
                     std::vector<std::size_t> ids(dim(rng, 1, 6));
                     for (auto& id : ids) id = rng.below(v);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) {
                           return weighted_sum(ad::gather_rows(x[0], std::span<const std::size_t>(ids)), w);
                         },
                         {random_tensor({v, d}, rng)});
                   }});
  cases.push_back({"logsumexp", [](Rng& rng) {
                     const std::size_t axis = rng.below(2);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) { return weighted_sum(ad::logsumexp(x[0], axis), w); },
                         {random_tensor({dim(rng, 1, 4), dim(rng, 1, 4)}, rng)});
                   }});
  cases.push_back(unary("softmax", [](const TD& x) { return ad::softmax(x); }));
  cases.push_back({"softmax_cross_entropy", [](Rng& rng) {
                     const auto n = dim(rng, 1, 4), c = dim(rng, 2, 5);
                     std::vector<std::size_t> gold(n);
                     ad::CrossEntropyOptions opt;
                     opt.row_mask = std::vector<bool>(n, true);
                     opt.entry_mask = std::vector<bool>(n * c, true);
                     for (std::size_t i = 0; i < n; ++i) {
                       gold[i] = rng.below(c);
                       if (i > 0 && rng.bernoulli(0.3)) (*opt.row_mask)[i] = false;
                       for (std::size_t j = 0; j < c; ++j)
                         if (j != gold[i] && rng.bernoulli(0.2)) (*opt.entry_mask)[i * c + j] = false;
                     }
                     opt.reduction = rng.bernoulli(0.5) ? ad::Reduction::kMean : ad::Reduction::kSum;
                     return check_gradients(
                         [&](const Inputs& x) {
                           return ad::softmax_cross_entropy(x[0], std::span<const std::size_t>(gold), opt);
                         },
                         {random_tensor({n, c}, rng)});
                   }});
  cases.push_back({"sigmoid_cross_entropy", [](Rng& rng) {
                     const auto n = dim(rng, 1, 4), c = dim(rng, 1, 4);
                     std::vector<double> targets(n * c);
                     std::vector<bool> mask(n * c, true);
                     for (std::size_t i = 0; i < targets.size(); ++i) {
                       targets[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
                       if (i > 0 && rng.bernoulli(0.2)) mask[i] = false;
                     }
                     return check_gradients(
                         [&](const Inputs& x) {
                           return ad::sigmoid_cross_entropy(x[0], std::span<const double>(targets),
                                                            std::optional<std::vector<bool>>(mask));
                         },
                         {random_tensor({n, c}, rng)});
                   }});
  for (auto mode : {ad::DropoutMode::kStandard, ad::DropoutMode::kWord, ad::DropoutMode::kVariational}) {
    const std::string name = mode == ad::DropoutMode::kStandard ? "dropout_standard"
                             : mode == ad::DropoutMode::kWord   ? "dropout_word"
                                                                : "dropout_variational";
    cases.push_back({name, [mode](Rng& rng) {
                       const auto mask_seed = rng.next_u64();
                       const auto w = rng.next_u64();
                       return check_gradients(
                           [&](const Inputs& x) {
                             Rng r(mask_seed);
                             return weighted_sum(ad::dropout(x[0], 0.4, mode, true, r), w);
                           },
                           {random_tensor({dim(rng, 1, 4), dim(rng, 1, 4)}, rng)});
                     }});
  }
  cases.push_back({"bilinear", [](Rng& rng) {
                     const auto m = dim(rng, 1, 3), p = dim(rng, 1, 3), q = dim(rng, 1, 3);
                     const auto a = dim(rng, 1, 3), b = dim(rng, 1, 3);
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) { return weighted_sum(ad::bilinear(x[0], x[1], x[2]), w); },
                         {random_tensor({p, a}, rng), random_tensor({m, a, b}, rng),
                          random_tensor({q, b}, rng)});
                   }});
  cases.push_back({"select_pairs", [](Rng& rng) {
                     const auto m = dim(rng, 1, 3), p = dim(rng, 1, 3), q = dim(rng, 1, 3);
                     std::vector<std::pair<std::size_t, std::size_t>> pairs(dim(rng, 1, 5));
                     for (auto& pr : pairs) pr = {rng.below(p), rng.below(q)};
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) {
                           return weighted_sum(
                               ad::select_pairs(x[0], std::span<const std::pair<std::size_t, std::size_t>>(pairs)), w);
                         },
                         {random_tensor({m, p, q}, rng)});
                   }});
  cases.push_back({"lstm", [](Rng& rng) {
                     const auto in = dim(rng, 1, 3), h = dim(rng, 1, 3), n = dim(rng, 1, 4);
                     const bool reverse = rng.bernoulli(0.5);
                     const auto w = rng.next_u64();
                     ad::ParameterStore<double> store;
                     auto p = ad::LstmParams<double>::create(store, "lstm", in, h, rng);
                     auto x = random_tensor({n, in}, rng);
                     return check_gradients(
                         [&](const Inputs& t) {
                           ad::LstmParams<double> q = p;
                           q.input_weight = t[1];
                           q.recurrent_weight = t[2];
                           q.bias = t[3];
                           return weighted_sum(ad::run_lstm(q, t[0], reverse), w);
                         },
                         {x, p.input_weight, p.recurrent_weight, p.bias});
                   }});
  cases.push_back({"self_attention", [](Rng& rng) {
                     const auto w = rng.next_u64();
                     return check_gradients(
                         [&](const Inputs& x) {
                           auto a = tagger::self_attention(x[0]);
                           return ad::add(weighted_sum(a.context, w), weighted_sum(a.weights, w + 1));
                         },
                         {random_tensor({dim(rng, 1, 4), dim(rng, 1, 4)}, rng)});
                   }});
  return cases;
}

GradCheckResult check_store_gradients(ad::ParameterStore<double>& store,
                                      const std::function<ad::Tensor<double>()>& loss,
                                      double eps) {
  store.zero_grad();
  loss().backward();
  GradCheckResult result;
  for (auto& p : store.params()) {
    if (!p->trainable) continue;
    const std::vector<double> analytic(p->tensor.grad().begin(), p->tensor.grad().end());
    auto data = p->tensor.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double plus = loss().item();
      data[i] = saved - eps;
      const double minus = loss().item();
      data[i] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      result.max_rel_error = std::max(result.max_rel_error, relative_error(a, numeric));
      result.max_abs_error = std::max(result.max_abs_error, std::abs(a - numeric));
      ++result.checked;
    }
  }
  store.zero_grad();
  return result;
}

namespace {

data::Vocabulary symbols(bool reserved, data::VocabField field, std::size_t count,
                         const std::string& prefix) {
  data::Vocabulary v(reserved, field);
  for (std::size_t i = 0; i < count; ++i) v.add(prefix + std::to_string(i));
  return v;
}

std::vector<std::size_t> random_tree(std::size_t n, Rng& rng) {
  // Attach tokens in a random order to an already attached node.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i + 1;
  rng.shuffle(order);
  std::vector<std::size_t> heads(n, 0);
  std::vector<std::size_t> attached{0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = i == 0 ? 0 : attached[1 + rng.below(attached.size() - 1)];
    heads[order[i] - 1] = h;
    attached.push_back(order[i]);
  }
  return heads;
}

}  // namespace

std::vector<GradCase> model_gradient_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"crf_nll", [](Rng& rng) {
                     const auto n = dim(rng, 1, 5), t = dim(rng, 1, 4);
                     std::vector<std::size_t> tags(n);
                     for (auto& x : tags) x = rng.below(t);
                     return check_gradients(
                         [&](const Inputs& x) {
                           return tagger::crf_nll(x[0], x[1], std::span<const std::size_t>(tags));
                         },
                         {random_tensor({n, t}, rng), random_tensor({t + 2, t + 2}, rng)});
                   }});
  cases.push_back({"tree_loss", [](Rng& rng) {
                     const auto n = dim(rng, 1, 5), m = dim(rng, 1, 4);
                     const auto heads = random_tree(n, rng);
                     std::vector<std::size_t> labels(n);
                     for (auto& l : labels) l = rng.below(m);
                     return check_gradients(
                         [&](const Inputs& x) {
                           return parser::tree_loss(x[0], x[1], std::span<const std::size_t>(heads),
                                                    std::span<const std::size_t>(labels), 1.0, 0.7);
                         },
                         {random_tensor({n + 1, n + 1}, rng), random_tensor({m, n + 1, n + 1}, rng)});
                   }});
  cases.push_back({"graph_loss", [](Rng& rng) {
                     const auto n = dim(rng, 1, 5), m = dim(rng, 1, 4);
                     std::vector<parser::LabeledArc> arcs;
                     for (std::size_t d = 1; d <= n; ++d)
                       for (std::size_t h = 0; h <= n; ++h)
                         if (h != d && rng.bernoulli(0.3)) arcs.push_back({h, d, rng.below(m)});
                     return check_gradients(
                         [&](const Inputs& x) {
                           return parser::graph_loss(x[0], x[1], std::span<const parser::LabeledArc>(arcs));
                         },
                         {random_tensor({n + 1, n + 1}, rng), random_tensor({m, n + 1, n + 1}, rng)});
                   }});
  cases.push_back({"tagger_model", [](Rng& rng) {
                     tagger::TaggerConfig cfg;
                     cfg.word_dim = 3;
                     cfg.lstm_hidden = 2;
                     cfg.attention = rng.bernoulli(0.5);
                     cfg.use_contextual = rng.bernoulli(0.5);
                     cfg.contextual_dim = cfg.use_contextual ? 2 : 0;
                     cfg.scheme = rng.bernoulli(0.5) ? emb::CompositionScheme::kInput
                                                     : emb::CompositionScheme::kHidden;
                     cfg.embedding_dropout = 0.3;
                     const std::uint64_t init = rng.next_u64();
                     Rng init_rng(init);
                     tagger::TaggerModel<double> model(cfg, symbols(true, data::VocabField::kForm, 4, "w"),
                                                       symbols(false, data::VocabField::kPos, 3, "T"),
                                                       init_rng);
                     // Transitions start at zero; move them off the symmetric point.
                     for (auto& p : model.store().params())
                       for (auto& v : p->tensor.mutable_data()) v += rng.uniform(-0.5, 0.5);
                     const auto n = dim(rng, 1, 4);
                     tagger::TaggerExample<double> ex;
                     for (std::size_t i = 0; i < n; ++i) {
                       ex.features.forms.push_back("w" + std::to_string(rng.below(5)));
                       ex.tags.push_back(rng.below(3));
                     }
                     if (cfg.use_contextual) ex.features.contextual = random_tensor({n, 2}, rng);
                     const auto drop_seed = rng.next_u64();
                     return check_store_gradients(model.store(), [&] {
                       Rng r(drop_seed);
                       return model.loss(ex, true, r);
                     });
                   }});
  for (bool graph : {false, true}) {
    cases.push_back({graph ? "graph_parser_model" : "tree_parser_model", [graph](Rng& rng) {
                       parser::BiaffineConfig cfg;
                       cfg.lemma_dim = 2;
                       cfg.lemma_trainable = true;
                       cfg.pos_dim = 2;
                       cfg.lstm_layers = 1 + rng.below(2);
                       cfg.lstm_hidden = 2;
                       cfg.arc_mlp = 2;
                       cfg.label_mlp = 2;
                       cfg.use_contextual = rng.bernoulli(0.5);
                       cfg.contextual_dim = cfg.use_contextual ? 2 : 0;
                       cfg.scheme = rng.bernoulli(0.5) ? emb::CompositionScheme::kInput
                                                       : emb::CompositionScheme::kHidden;
                       cfg.split_layer = 1;
                       const std::uint64_t init = rng.next_u64();
                       Rng init_rng(init);
                       parser::BiaffineModel<double> model(
                           cfg, symbols(true, data::VocabField::kLemma, 3, "l"),
                           symbols(true, data::VocabField::kPos, 2, "p"),
                           symbols(false, data::VocabField::kTreeLabel, 3, "r"), init_rng);
                       for (auto& p : model.store().params())
                         for (auto& v : p->tensor.mutable_data()) v += rng.uniform(-0.3, 0.3);
                       const auto n = dim(rng, 1, 4);
                       parser::ParserFeatures<double> f;
                       for (std::size_t i = 0; i < n; ++i) {
                         f.lemmas.push_back("l" + std::to_string(rng.below(4)));
                         f.pos.push_back("p" + std::to_string(rng.below(2)));
                       }
                       if (cfg.use_contextual) f.contextual = random_tensor({n, 2}, rng);
                       const auto heads = random_tree(n, rng);
                       std::vector<std::size_t> labels(n);
                       for (auto& l : labels) l = rng.below(3);
                       std::vector<parser::LabeledArc> arcs;
                       for (std::size_t d = 1; d <= n; ++d) arcs.push_back({heads[d - 1], d, labels[d - 1]});
                       const auto drop_seed = rng.next_u64();
                       return check_store_gradients(model.store(), [&] {
                         Rng r(drop_seed);
                         auto s = model.score(f, true, r);
                         return graph ? parser::graph_loss(s.arc, s.rel, std::span<const parser::LabeledArc>(arcs))
                                      : parser::tree_loss(s.arc, s.rel, std::span<const std::size_t>(heads),
                                                          std::span<const std::size_t>(labels));
                       });
                     }});
  }
  return cases;
}

}  // namespace structpred::testing
