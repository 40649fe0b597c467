#include "structpred/parser/biaffine.hpp"

#include <limits>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::parser {

void BiaffineConfig::validate() const {
  if (lemma_dim == 0 && pos_dim == 0) {
    fail(ErrorCode::kConfig, "parser: lemma and POS embeddings both disabled");
  }
  if (use_contextual && contextual_dim == 0) {
    fail(ErrorCode::kConfig, "parser: contextual component enabled without a dimension");
  }
  if (lstm_layers == 0 || lstm_hidden == 0 || arc_mlp == 0 || label_mlp == 0) {
    fail(ErrorCode::kConfig, "parser: layer sizes must be positive");
  }
  for (double rate : {embedding_dropout, word_dropout, lstm_dropout, recurrent_dropout,
                      mlp_dropout}) {
    if (rate < 0.0 || rate >= 1.0) fail(ErrorCode::kConfig, "parser: dropout outside [0, 1)");
  }
  if (arc_loss_weight < 0.0 || label_loss_weight < 0.0) {
    fail(ErrorCode::kConfig, "parser: loss weights must be non-negative");
  }
}

void ScorePack::mask() {
  const double ninf = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < nodes; ++v) {
    arc[v * nodes + v] = ninf;
    arc[v * nodes] = ninf;
  }
}

template <ad::Real T>
ScorePack to_score_pack(const ParserScores<T>& scores) {
  ScorePack pack;
  pack.nodes = scores.arc.dim(0);
  pack.labels = scores.rel.dim(0);
  pack.arc.assign(scores.arc.data().begin(), scores.arc.data().end());
  pack.rel.assign(scores.rel.data().begin(), scores.rel.data().end());
  pack.mask();
  return pack;
}

template <ad::Real T>
ad::Tensor<T> biaffine_arc_scores(const ad::Tensor<T>& arc_h, const ad::Tensor<T>& arc_d,
                                  const ad::Tensor<T>& u_arc) {
  const std::size_t n = arc_d.dim(0);
  const std::size_t k = arc_d.dim(1);
  if (u_arc.rank() != 2 || u_arc.dim(0) != k || u_arc.dim(1) != k + 1) {
    fail(ErrorCode::kDimension, "arc scorer: U must be " + std::to_string(k) + "x" +
                                    std::to_string(k + 1));
  }
  auto dep = ad::concat({arc_d, ad::Tensor<T>::full({n, 1}, T(1))}, 1);
  auto scores = ad::bilinear(arc_h, ad::reshape(u_arc, {1, k, k + 1}), dep);
  return ad::reshape(scores, {arc_h.dim(0), n});
}

template <ad::Real T>
ad::Tensor<T> biaffine_rel_scores(const ad::Tensor<T>& rel_h, const ad::Tensor<T>& rel_d,
                                  const ad::Tensor<T>& u_rel, const ad::Tensor<T>& v_rel) {
  const std::size_t n = rel_h.dim(0);
  const std::size_t l = rel_h.dim(1);
  const std::size_t m = u_rel.dim(0);
  if (u_rel.rank() != 3 || u_rel.dim(1) != l || u_rel.dim(2) != l + 1) {
    fail(ErrorCode::kDimension, "label scorer: U must be m x " + std::to_string(l) + "x" +
                                    std::to_string(l + 1));
  }
  if (v_rel.rank() != 2 || v_rel.dim(0) != 2 * l + 1 || v_rel.dim(1) != m) {
    fail(ErrorCode::kDimension, "label scorer: V must be " + std::to_string(2 * l + 1) + "x" +
                                    std::to_string(m));
  }
  auto dep = ad::concat({rel_d, ad::Tensor<T>::full({rel_d.dim(0), 1}, T(1))}, 1);
  auto bilinear = ad::bilinear(rel_h, u_rel, dep);
  auto head_term = ad::reshape(ad::transpose(ad::matmul(rel_h, ad::slice(v_rel, 0, 0, l))),
                               {m, n, 1});
  auto dep_term = ad::reshape(
      ad::transpose(ad::matmul(rel_d, ad::slice(v_rel, 0, l, 2 * l))), {m, 1, rel_d.dim(0)});
  auto bias = ad::reshape(ad::slice(v_rel, 0, 2 * l, 2 * l + 1), {m, 1, 1});
  return ad::add(ad::add(ad::add(bilinear, head_term), dep_term), bias);
}

template <ad::Real T>
BiaffineModel<T>::BiaffineModel(BiaffineConfig config, data::Vocabulary lemmas,
                                data::Vocabulary pos, data::Vocabulary labels, Rng& rng,
                                const emb::EmbeddingFile* pretrained)
    : config_(std::move(config)),
      labels_(std::move(labels)),
      store_(std::make_unique<ad::ParameterStore<T>>()) {
  if (labels_.reserved()) fail(ErrorCode::kConfig, "parser: label vocabulary must not reserve ids");
  if (labels_.size() == 0) fail(ErrorCode::kInput, "parser: empty label vocabulary");
  if (pretrained) config_.lemma_dim = pretrained->dim;
  config_.validate();

  auto& store = *store_;
  if (config_.lemma_dim > 0) {
    if (pretrained) {
      lemma_table_ = emb::StaticTable<T>::pretrained(store, "parser.lemma", *pretrained,
                                                     config_.lowercase_lookup,
                                                     config_.lemma_trainable);
    } else {
      lemma_table_ = emb::StaticTable<T>::random(store, "parser.lemma", std::move(lemmas),
                                                 config_.lemma_dim, config_.lemma_trainable,
                                                 config_.lowercase_lookup, rng);
    }
  }
  if (config_.pos_dim > 0) {
    pos_table_ = emb::StaticTable<T>::random(store, "parser.pos", std::move(pos),
                                             config_.pos_dim, true, false, rng);
  }
  plan_.scheme = config_.scheme;
  plan_.split_layer = config_.split_layer;
  plan_.static_dim = config_.lemma_dim + config_.pos_dim;
  plan_.contextual_dim = config_.use_contextual ? config_.contextual_dim : 0;
  plan_.validate(config_.lstm_layers);

  root_static_ = store.create("parser.root.static", {1, plan_.static_dim},
                              ad::Init::kUniformSmall, rng);
  if (plan_.contextual_dim > 0) {
    root_contextual_ = store.create("parser.root.contextual", {1, plan_.contextual_dim},
                                    ad::Init::kUniformSmall, rng);
  }
  encoder_ = ad::StackedBiLstm<T>(store, "parser.encoder",
                                  plan_.layer_input_dims(config_.lstm_layers, config_.lstm_hidden),
                                  config_.lstm_hidden, rng);
  state_dim_ = plan_.output_dim(config_.lstm_layers, config_.lstm_hidden);

  const std::size_t k = config_.arc_mlp;
  const std::size_t l = config_.label_mlp;
  const std::size_t m = labels_.size();
  arc_head = ad::Linear<T>::create(store, "parser.mlp.arc_head", state_dim_, k, rng);
  arc_dep = ad::Linear<T>::create(store, "parser.mlp.arc_dep", state_dim_, k, rng);
  rel_head = ad::Linear<T>::create(store, "parser.mlp.rel_head", state_dim_, l, rng);
  rel_dep = ad::Linear<T>::create(store, "parser.mlp.rel_dep", state_dim_, l, rng);
  u_arc = store.create("parser.arc.U", {k, k + 1}, ad::Init::kXavierUniform, rng);
  u_rel = store.create("parser.rel.U", {m, l, l + 1}, ad::Init::kXavierUniform, rng);
  v_rel = store.create("parser.rel.V", {2 * l + 1, m}, ad::Init::kXavierUniform, rng);
}

template <ad::Real T>
ad::Tensor<T> BiaffineModel<T>::encode(const ParserFeatures<T>& features, bool training,
                                       Rng& rng) const {
  const std::size_t n = features.lemmas.size();
  if (n == 0) fail(ErrorCode::kInput, "parser: empty sentence");
  if (features.pos.size() != n) {
    fail(ErrorCode::kDimension, "parser: lemma and POS sequences differ in length");
  }
  std::vector<ad::Tensor<T>> parts;
  auto embed = [&](const emb::StaticTable<T>& table, const std::vector<std::string>& symbols) {
    auto rows = table.embed(symbols);
    rows = ad::dropout(rows, config_.word_dropout, ad::DropoutMode::kWord, training, rng);
    return ad::dropout(rows, config_.embedding_dropout, ad::DropoutMode::kStandard, training,
                       rng);
  };
  if (config_.lemma_dim > 0) parts.push_back(embed(lemma_table_, features.lemmas));
  if (config_.pos_dim > 0) parts.push_back(embed(pos_table_, features.pos));
  auto tokens = parts.size() == 1
                    ? parts[0]
                    : ad::concat<T>(std::span<const ad::Tensor<T>>(parts), 1);
  std::vector<ad::Tensor<T>> with_root{ad::concat({root_static_, tokens}, 0)};

  ad::Tensor<T> contextual;
  if (plan_.contextual_dim > 0) {
    if (!features.contextual.defined() || features.contextual.dim(0) != n ||
        features.contextual.dim(1) != plan_.contextual_dim) {
      fail(ErrorCode::kDimension, "parser: contextual vectors missing or of wrong shape");
    }
    auto ctx = ad::dropout(features.contextual, config_.embedding_dropout,
                           ad::DropoutMode::kStandard, training, rng);
    contextual = ad::concat({root_contextual_, ctx}, 0);
  }
  const auto composed =
      emb::compose_input<T>(std::span<const ad::Tensor<T>>(with_root), contextual, plan_);
  return emb::run_encoder(encoder_, composed,
                          {config_.lstm_dropout, config_.recurrent_dropout}, training, rng);
}

template <ad::Real T>
ad::Tensor<T> BiaffineModel<T>::mlp(const ad::Linear<T>& layer, const ad::Tensor<T>& states,
                                    bool training, Rng& rng) const {
  return ad::dropout(ad::relu(layer(states)), config_.mlp_dropout, ad::DropoutMode::kStandard,
                     training, rng);
}

template <ad::Real T>
ad::Tensor<T> BiaffineModel<T>::score_arcs(const ad::Tensor<T>& states, bool training,
                                           Rng& rng) const {
  auto h = mlp(arc_head, states, training, rng);
  auto d = mlp(arc_dep, states, training, rng);
  return biaffine_arc_scores(h, d, u_arc);
}

template <ad::Real T>
ad::Tensor<T> BiaffineModel<T>::score_rels(const ad::Tensor<T>& states, bool training,
                                           Rng& rng) const {
  auto h = mlp(rel_head, states, training, rng);
  auto d = mlp(rel_dep, states, training, rng);
  return biaffine_rel_scores(h, d, u_rel, v_rel);
}

template <ad::Real T>
ParserScores<T> BiaffineModel<T>::score(const ParserFeatures<T>& features, bool training,
                                        Rng& rng) const {
  auto states = encode(features, training, rng);
  auto arc = score_arcs(states, training, rng);
  auto rel = score_rels(states, training, rng);
  return {arc, rel};
}

template <ad::Real T>
ScorePack BiaffineModel<T>::score_pack(const ParserFeatures<T>& features) const {
  ad::NoGradGuard guard;
  Rng unused(0);
  return to_score_pack(score(features, false, unused));
}

#define STRUCTPRED_INSTANTIATE_BIAFFINE(T)                                                  \
  template class BiaffineModel<T>;                                                          \
  template ScorePack to_score_pack(const ParserScores<T>&);                                 \
  template ad::Tensor<T> biaffine_arc_scores(const ad::Tensor<T>&, const ad::Tensor<T>&,    \
                                             const ad::Tensor<T>&);                         \
  template ad::Tensor<T> biaffine_rel_scores(const ad::Tensor<T>&, const ad::Tensor<T>&,    \
                                             const ad::Tensor<T>&, const ad::Tensor<T>&);

STRUCTPRED_INSTANTIATE_BIAFFINE(float)
STRUCTPRED_INSTANTIATE_BIAFFINE(double)

}  // namespace structpred::parser
