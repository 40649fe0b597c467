#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "structpred/autodiff/nn.hpp"
#include "structpred/data/vocab.hpp"
#include "structpred/embeddings/compose.hpp"
#include "structpred/embeddings/static_table.hpp"

namespace structpred::parser {

struct BiaffineConfig {
  std::size_t lemma_dim = 100;
  bool lemma_trainable = false;
  bool lowercase_lookup = false;
  std::size_t pos_dim = 100;
  bool use_contextual = false;
  std::size_t contextual_dim = 0;
  emb::CompositionScheme scheme = emb::CompositionScheme::kInput;
  std::size_t split_layer = 1;
  std::size_t lstm_layers = 3;
  std::size_t lstm_hidden = 400;
  std::size_t arc_mlp = 500;
  std::size_t label_mlp = 100;
  double embedding_dropout = 0.33;
  double word_dropout = 0.33;
  double lstm_dropout = 0.33;
  double recurrent_dropout = 0.33;
  double mlp_dropout = 0.33;
  double arc_loss_weight = 1.0;
  double label_loss_weight = 1.0;

  void validate() const;
};

template <ad::Real T>
struct ParserFeatures {
  std::vector<std::string> lemmas;
  std::vector<std::string> pos;
  ad::Tensor<T> contextual;  // n x contextual_dim, or undefined
};

// Differentiable scores over nodes 0..n (0 = ROOT).
template <ad::Real T>
struct ParserScores {
  ad::Tensor<T> arc;  // N x N, [h][d]
  ad::Tensor<T> rel;  // m x N x N, [i][h][d]
};

// Plain score tables for decoding. Masked entries are -inf.
struct ScorePack {
  std::size_t nodes = 0;   // n + 1
  std::size_t labels = 0;  // m
  std::vector<double> arc;
  std::vector<double> rel;

  double arc_at(std::size_t h, std::size_t d) const { return arc[h * nodes + d]; }
  double rel_at(std::size_t i, std::size_t h, std::size_t d) const {
    return rel[(i * nodes + h) * nodes + d];
  }
  // Sets column 0 and the diagonal of the arc table to -inf.
  void mask();
};

template <ad::Real T>
ScorePack to_score_pack(const ParserScores<T>& scores);

// S[h][d] = arc_h[h] . U [arc_d[d]; 1]; arc_h, arc_d: N x k, U: k x (k+1).
template <ad::Real T>
ad::Tensor<T> biaffine_arc_scores(const ad::Tensor<T>& arc_h, const ad::Tensor<T>& arc_d,
                                  const ad::Tensor<T>& u_arc);

// S[i][h][d] = rel_h[h] . U_i [rel_d[d]; 1] + [rel_h[h]; rel_d[d]; 1] . V[:, i].
// rel_h, rel_d: N x l, U: m x l x (l+1), V: (2l+1) x m.
template <ad::Real T>
ad::Tensor<T> biaffine_rel_scores(const ad::Tensor<T>& rel_h, const ad::Tensor<T>& rel_d,
                                  const ad::Tensor<T>& u_rel, const ad::Tensor<T>& v_rel);

template <ad::Real T>
class BiaffineModel {
 public:
  // Without `pretrained`, the lemma table is random over `lemmas`.
  BiaffineModel(BiaffineConfig config, data::Vocabulary lemmas, data::Vocabulary pos,
                data::Vocabulary labels, Rng& rng,
                const emb::EmbeddingFile* pretrained = nullptr);

  const BiaffineConfig& config() const { return config_; }
  const data::Vocabulary& lemmas() const { return lemma_table_.vocab(); }
  const data::Vocabulary& pos() const { return pos_table_.vocab(); }
  const data::Vocabulary& labels() const { return labels_; }
  ad::ParameterStore<T>& store() { return *store_; }
  const ad::ParameterStore<T>& store() const { return *store_; }
  std::size_t input_dim() const { return plan_.encoder_input_dim(); }
  std::size_t state_dim() const { return state_dim_; }

  // (n+1) x state_dim; row 0 encodes the learned ROOT input.
  ad::Tensor<T> encode(const ParserFeatures<T>& features, bool training, Rng& rng) const;
  ad::Tensor<T> score_arcs(const ad::Tensor<T>& states, bool training, Rng& rng) const;
  ad::Tensor<T> score_rels(const ad::Tensor<T>& states, bool training, Rng& rng) const;
  ParserScores<T> score(const ParserFeatures<T>& features, bool training, Rng& rng) const;
  // Inference scores, masked.
  ScorePack score_pack(const ParserFeatures<T>& features) const;

  ad::Linear<T> arc_head, arc_dep, rel_head, rel_dep;
  ad::Tensor<T> u_arc, u_rel, v_rel;

 private:
  ad::Tensor<T> mlp(const ad::Linear<T>& layer, const ad::Tensor<T>& states, bool training,
                    Rng& rng) const;

  BiaffineConfig config_;
  data::Vocabulary labels_;
  std::unique_ptr<ad::ParameterStore<T>> store_;
  emb::StaticTable<T> lemma_table_;
  emb::StaticTable<T> pos_table_;
  ad::Tensor<T> root_static_;
  ad::Tensor<T> root_contextual_;
  emb::CompositionPlan plan_;
  ad::StackedBiLstm<T> encoder_;
  std::size_t state_dim_ = 0;
};

extern template class BiaffineModel<float>;
extern template class BiaffineModel<double>;

}  // namespace structpred::parser
