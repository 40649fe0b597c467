#include "structpred/parser/train.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::parser {

namespace {

std::string lemma_of(const data::Token& t) { return t.lemma != "_" ? t.lemma : t.form; }
std::string pos_of(const data::Token& t) { return t.pos != "_" ? t.pos : t.upos; }

std::size_t label_id(const data::Vocabulary& labels, const std::string& label,
                     const data::Sentence& sentence) {
  const auto id = labels.find(label);
  if (!id) {
    fail(ErrorCode::kInput, "sentence '" + sentence.sent_id + "': label '" + label +
                                "' is not in the label vocabulary");
  }
  return *id;
}

}  // namespace

template <ad::Real T>
ParserFeatures<T> make_features(const data::Sentence& sentence,
                                const ad::Tensor<T>& contextual) {
  ParserFeatures<T> f;
  for (const auto& t : sentence.tokens) {
    f.lemmas.push_back(lemma_of(t));
    f.pos.push_back(pos_of(t));
  }
  f.contextual = contextual;
  return f;
}

template <ad::Real T>
ParserExample<T> make_tree_example(const data::Sentence& sentence,
                                   const data::Vocabulary& labels,
                                   const ad::Tensor<T>& contextual) {
  data::validate_tree(sentence);
  if (!sentence.has_tree()) {
    fail(ErrorCode::kInput, "sentence '" + sentence.sent_id + "' has no tree annotation");
  }
  ParserExample<T> ex;
  ex.features = make_features(sentence, contextual);
  for (const auto& t : sentence.tokens) {
    ex.heads.push_back(*t.tree_head);
    ex.labels.push_back(label_id(labels, t.tree_label.value_or("_"), sentence));
  }
  return ex;
}

template <ad::Real T>
ParserExample<T> make_graph_example(const data::Sentence& sentence,
                                    const data::Vocabulary& labels,
                                    const ad::Tensor<T>& contextual) {
  data::validate_graph(sentence);
  ParserExample<T> ex;
  ex.features = make_features(sentence, contextual);
  for (const auto& t : sentence.tokens) {
    for (const auto& a : t.graph_arcs) {
      ex.arcs.push_back({a.head, t.index, label_id(labels, a.label, sentence)});
    }
  }
  return ex;
}

void apply_tree(data::Sentence& sentence, const TreeDecode& decoded,
                const data::Vocabulary& labels) {
  if (decoded.heads.size() != sentence.size()) {
    fail(ErrorCode::kDimension, "apply_tree: prediction length differs from sentence");
  }
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    sentence.tokens[i].tree_head = decoded.heads[i];
    sentence.tokens[i].tree_label = labels.symbol(decoded.labels[i]);
  }
}

void apply_graph(data::Sentence& sentence, std::span<const LabeledArc> arcs,
                 const data::Vocabulary& labels) {
  for (auto& t : sentence.tokens) {
    t.graph_arcs.clear();
    t.top = false;
  }
  for (const auto& a : arcs) {
    if (a.dependent == 0 || a.dependent > sentence.size()) {
      fail(ErrorCode::kDimension, "apply_graph: dependent out of range");
    }
    auto& t = sentence.tokens[a.dependent - 1];
    if (a.head == 0) {
      t.top = true;
      t.graph_arcs.push_back({0, data::kTopLabel});
    } else {
      t.graph_arcs.push_back({a.head, labels.symbol(a.label)});
    }
  }
  for (auto& t : sentence.tokens) std::sort(t.graph_arcs.begin(), t.graph_arcs.end());
  data::mark_predicates(sentence);
}

std::vector<std::vector<std::size_t>> token_batches(std::span<const std::size_t> lengths,
                                                    std::size_t token_budget) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
  std::vector<std::vector<std::size_t>> batches;
  std::size_t used = 0;
  for (std::size_t i : order) {
    if (batches.empty() || used + lengths[i] > token_budget) {
      batches.emplace_back();
      used = 0;
    }
    batches.back().push_back(i);
    used += lengths[i];
  }
  return batches;
}

template <ad::Real T>
ad::Tensor<T> parser_loss(const BiaffineModel<T>& model, const ParserExample<T>& example,
                          ParserTask task, bool training, Rng& rng) {
  const auto scores = model.score(example.features, training, rng);
  if (task == ParserTask::kTree) {
    return tree_loss(scores.arc, scores.rel, std::span<const std::size_t>(example.heads),
                     std::span<const std::size_t>(example.labels),
                     model.config().arc_loss_weight, model.config().label_loss_weight);
  }
  return graph_loss(scores.arc, scores.rel, std::span<const LabeledArc>(example.arcs));
}

template <ad::Real T>
double parser_dev_score(const BiaffineModel<T>& model, std::span<const ParserExample<T>> dev,
                        ParserTask task, const GraphDecodeConfig& decode) {
  std::size_t correct = 0, gold = 0, predicted = 0;
  for (const auto& ex : dev) {
    const auto pack = model.score_pack(ex.features);
    if (task == ParserTask::kTree) {
      const auto out = decode_tree(pack);
      for (std::size_t i = 0; i < out.heads.size(); ++i) {
        correct += out.heads[i] == ex.heads[i] && out.labels[i] == ex.labels[i];
      }
      gold += out.heads.size();
    } else {
      const auto out = decode_graph(pack, decode);
      std::set<LabeledArc> reference(ex.arcs.begin(), ex.arcs.end());
      for (const auto& a : out) correct += reference.count(a);
      gold += reference.size();
      predicted += out.size();
    }
  }
  if (task == ParserTask::kTree) {
    return gold == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(gold);
  }
  if (correct == 0) return gold == 0 && predicted == 0 ? 100.0 : 0.0;
  return 100.0 * 2.0 * static_cast<double>(correct) / static_cast<double>(gold + predicted);
}

namespace {

template <ad::Real T>
ParserTrainResult train(BiaffineModel<T>& model, std::span<const ParserExample<T>> train_set,
                        std::span<const ParserExample<T>> dev, ParserTask task,
                        const ParserTrainOptions& options, Rng& rng) {
  if (train_set.empty()) fail(ErrorCode::kInput, "train_parser: empty training corpus");
  if (dev.empty()) fail(ErrorCode::kInput, "train_parser: empty development corpus");
  if (options.eval_every_steps == 0) {
    fail(ErrorCode::kConfig, "train_parser: eval_every_steps must be positive");
  }
  ad::Optimizer<T> optimizer(options.optimizer);
  const auto& cfg = optimizer.config();
  std::vector<std::size_t> lengths;
  for (const auto& ex : train_set) lengths.push_back(ex.size());
  const auto batches = token_batches(lengths, cfg.batch_size);
  std::vector<std::size_t> batch_order(batches.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});

  ParserTrainResult result;
  auto best = model.store().snapshot();
  bool have_best = false;
  double loss_sum = 0;
  std::size_t loss_batches = 0;
  bool stop = false;

  auto evaluate = [&] {
    const double score = parser_dev_score(model, dev, task, options.decode);
    ParserEval log{optimizer.steps(), loss_batches ? loss_sum / loss_batches : 0.0, score,
                   optimizer.learning_rate(), false};
    if (!have_best || score > result.best_dev_score) {
      best = model.store().snapshot();
      have_best = true;
      result.best_dev_score = score;
      result.best_step = optimizer.steps();
      log.improved = true;
    }
    result.final_dev_score = score;
    result.history.push_back(log);
    if (options.on_eval) options.on_eval(log);
    loss_sum = 0;
    loss_batches = 0;
    if (options.stop_at_dev_score && score >= *options.stop_at_dev_score) stop = true;
  };

  while (!stop && optimizer.steps() < cfg.max_steps) {
    rng.shuffle(batch_order);
    for (std::size_t b : batch_order) {
      ad::Tensor<T> total;
      std::size_t tokens = 0;
      for (std::size_t i : batches[b]) {
        const auto& ex = train_set[i];
        auto loss = ad::scale(parser_loss(model, ex, task, true, rng), static_cast<T>(ex.size()));
        total = total.defined() ? ad::add(total, loss) : loss;
        tokens += ex.size();
      }
      auto batch_loss = ad::scale(total, T(1) / static_cast<T>(tokens));
      loss_sum += static_cast<double>(batch_loss.item());
      ++loss_batches;
      batch_loss.backward();
      if (cfg.clip_norm > 0) ad::clip_global_norm(model.store(), static_cast<T>(cfg.clip_norm));
      optimizer.step(model.store());
      optimizer.on_step_end();
      if (optimizer.steps() % options.eval_every_steps == 0) evaluate();
      if (stop || optimizer.steps() >= cfg.max_steps) break;
    }
  }
  if (result.history.empty() || result.history.back().step != optimizer.steps()) evaluate();
  result.steps = optimizer.steps();
  model.store().restore(best);
  return result;
}

}  // namespace

template <ad::Real T>
ParserTrainResult train_parser(BiaffineModel<T>& model, std::span<const ParserExample<T>> train_set,
                               std::span<const ParserExample<T>> dev,
                               const ParserTrainOptions& options, Rng& rng) {
  return train(model, train_set, dev, ParserTask::kTree, options, rng);
}

template <ad::Real T>
ParserTrainResult train_graph_parser(BiaffineModel<T>& model,
                                     std::span<const ParserExample<T>> train_set,
                                     std::span<const ParserExample<T>> dev,
                                     const ParserTrainOptions& options, Rng& rng) {
  return train(model, train_set, dev, ParserTask::kGraph, options, rng);
}

#define STRUCTPRED_INSTANTIATE_PARSER_TRAIN(T)                                              \
  template ParserFeatures<T> make_features(const data::Sentence&, const ad::Tensor<T>&);    \
  template ParserExample<T> make_tree_example(const data::Sentence&, const data::Vocabulary&, \
                                              const ad::Tensor<T>&);                        \
  template ParserExample<T> make_graph_example(const data::Sentence&,                       \
                                               const data::Vocabulary&, const ad::Tensor<T>&); \
  template ad::Tensor<T> parser_loss(const BiaffineModel<T>&, const ParserExample<T>&,      \
                                     ParserTask, bool, Rng&);                               \
  template double parser_dev_score(const BiaffineModel<T>&,                                 \
                                   std::span<const ParserExample<T>>, ParserTask,           \
                                   const GraphDecodeConfig&);                               \
  template ParserTrainResult train_parser(BiaffineModel<T>&,                                \
                                          std::span<const ParserExample<T>>,                \
                                          std::span<const ParserExample<T>>,                \
                                          const ParserTrainOptions&, Rng&);                 \
  template ParserTrainResult train_graph_parser(BiaffineModel<T>&,                          \
                                                std::span<const ParserExample<T>>,          \
                                                std::span<const ParserExample<T>>,          \
                                                const ParserTrainOptions&, Rng&);

STRUCTPRED_INSTANTIATE_PARSER_TRAIN(float)
STRUCTPRED_INSTANTIATE_PARSER_TRAIN(double)

}  // namespace structpred::parser
