#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "structpred/autodiff/checkpoint.hpp"
#include "structpred/cli/cli.hpp"
#include "structpred/data/vocab.hpp"
#include "structpred/embeddings/char_lm.hpp"
#include "structpred/embeddings/sidecar.hpp"
#include "structpred/embeddings/static_table.hpp"
#include "structpred/error.hpp"
#include "structpred/eval/metrics.hpp"
#include "structpred/parser/train.hpp"
#include "structpred/tagger/tagger.hpp"

namespace structpred::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

data::CorpusFormat format_for(eval::Task task) {
  switch (task) {
    case eval::Task::kPos: return data::CorpusFormat::kTagged;
    case eval::Task::kDep: return data::CorpusFormat::kConllu;
    case eval::Task::kSdp: return data::CorpusFormat::kSdp;
  }
  return data::CorpusFormat::kTagged;
}

std::string extension_for(eval::Task task) {
  switch (task) {
    case eval::Task::kPos: return ".tagged";
    case eval::Task::kDep: return ".conllu";
    case eval::Task::kSdp: return ".sdp";
  }
  return ".txt";
}

data::CorpusFormat format_from_path(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".conllu" || ext == ".conll") return data::CorpusFormat::kConllu;
  if (ext == ".sdp") return data::CorpusFormat::kSdp;
  if (ext == ".tagged" || ext == ".tsv" || ext == ".txt") return data::CorpusFormat::kTagged;
  fail(ErrorCode::kConfig, "cannot infer the corpus format of " + path.string() +
                               " (use .conllu, .sdp or .tagged)");
}

namespace {

constexpr const char* kModelFormat = "structpred-model";
constexpr int kModelVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json vocab_json(const data::Vocabulary& v) { return v.symbols(); }

data::Vocabulary vocab_from(const json& j, bool reserved, data::VocabField field) {
  return data::Vocabulary::from_symbols(reserved, field, j.get<std::vector<std::string>>());
}

json to_json(const tagger::TaggerConfig& c) {
  return {{"use_static", c.use_static},
          {"use_contextual", c.use_contextual},
          {"flair_dim", c.flair_dim},
          {"word_dim", c.word_dim},
          {"word_trainable", c.word_trainable},
          {"lowercase_lookup", c.lowercase_lookup},
          {"lstm_layers", c.lstm_layers},
          {"lstm_hidden", c.lstm_hidden},
          {"attention", c.attention},
          {"embedding_dropout", c.embedding_dropout},
          {"scheme", emb::to_string(c.scheme)},
          {"split_layer", c.split_layer},
          {"contextual_dim", c.contextual_dim}};
}

tagger::TaggerConfig tagger_config_from(const json& j) {
  tagger::TaggerConfig c;
  c.use_static = j.at("use_static").get<bool>();
  c.use_contextual = j.at("use_contextual").get<bool>();
  c.flair_dim = j.at("flair_dim").get<std::size_t>();
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.word_trainable = j.at("word_trainable").get<bool>();
  c.lowercase_lookup = j.at("lowercase_lookup").get<bool>();
  c.lstm_layers = j.at("lstm_layers").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.attention = j.at("attention").get<bool>();
  c.embedding_dropout = j.at("embedding_dropout").get<double>();
  c.scheme = emb::composition_from_string(j.at("scheme").get<std::string>());
  c.split_layer = j.at("split_layer").get<std::size_t>();
  c.contextual_dim = j.at("contextual_dim").get<std::size_t>();
  return c;
}

json to_json(const parser::BiaffineConfig& c) {
  return {{"lemma_dim", c.lemma_dim},
          {"lemma_trainable", c.lemma_trainable},
          {"lowercase_lookup", c.lowercase_lookup},
          {"pos_dim", c.pos_dim},
          {"use_contextual", c.use_contextual},
          {"contextual_dim", c.contextual_dim},
          {"scheme", emb::to_string(c.scheme)},
          {"split_layer", c.split_layer},
          {"lstm_layers", c.lstm_layers},
          {"lstm_hidden", c.lstm_hidden},
          {"arc_mlp", c.arc_mlp},
          {"label_mlp", c.label_mlp},
          {"embedding_dropout", c.embedding_dropout},
          {"word_dropout", c.word_dropout},
          {"lstm_dropout", c.lstm_dropout},
          {"recurrent_dropout", c.recurrent_dropout},
          {"mlp_dropout", c.mlp_dropout},
          {"arc_loss_weight", c.arc_loss_weight},
          {"label_loss_weight", c.label_loss_weight}};
}

parser::BiaffineConfig parser_config_from(const json& j) {
  parser::BiaffineConfig c;
  c.lemma_dim = j.at("lemma_dim").get<std::size_t>();
  c.lemma_trainable = j.at("lemma_trainable").get<bool>();
  c.lowercase_lookup = j.at("lowercase_lookup").get<bool>();
  c.pos_dim = j.at("pos_dim").get<std::size_t>();
  c.use_contextual = j.at("use_contextual").get<bool>();
  c.contextual_dim = j.at("contextual_dim").get<std::size_t>();
  c.scheme = emb::composition_from_string(j.at("scheme").get<std::string>());
  c.split_layer = j.at("split_layer").get<std::size_t>();
  c.lstm_layers = j.at("lstm_layers").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.arc_mlp = j.at("arc_mlp").get<std::size_t>();
  c.label_mlp = j.at("label_mlp").get<std::size_t>();
  c.embedding_dropout = j.at("embedding_dropout").get<double>();
  c.word_dropout = j.at("word_dropout").get<double>();
  c.lstm_dropout = j.at("lstm_dropout").get<double>();
  c.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.mlp_dropout = j.at("mlp_dropout").get<double>();
  c.arc_loss_weight = j.at("arc_loss_weight").get<double>();
  c.label_loss_weight = j.at("label_loss_weight").get<double>();
  return c;
}

// Everything needed to rebuild a trained model next to its checkpoint.
template <ad::Real T>
struct Model {
  eval::Task task = eval::Task::kPos;
  std::string precision = "f32";
  emb::PoolingStrategy pooling = emb::PoolingStrategy::kAverage;
  bool contextual = false;
  config::DecodeSection decode;
  std::size_t char_embedding_dim = 0;
  std::unique_ptr<emb::CharLm<T>> char_lm;
  std::unique_ptr<tagger::TaggerModel<T>> tagger;
  std::unique_ptr<parser::BiaffineModel<T>> parser;

  std::vector<ad::ParameterStore<T>*> stores() {
    std::vector<ad::ParameterStore<T>*> out;
    if (tagger) out.push_back(&tagger->store());
    if (parser) out.push_back(&parser->store());
    if (char_lm) {
      out.push_back(&char_lm->forward().store());
      out.push_back(&char_lm->backward().store());
    }
    return out;
  }

  std::vector<const ad::ParameterStore<T>*> const_stores() {
    std::vector<const ad::ParameterStore<T>*> out;
    for (auto* s : stores()) out.push_back(s);
    return out;
  }

  json metadata(const std::string& dataset, std::uint64_t seed) const {
    json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["task"] = eval::to_string(task);
    j["dataset"] = dataset;
    j["seed"] = seed;
    j["precision"] = precision;
    j["pooling"] = emb::to_string(pooling);
    j["contextual"] = contextual;
    j["decode"] = {{"arc_threshold", decode.arc_threshold},
                   {"allow_orphans", decode.allow_orphans},
                   {"single_root", decode.single_root}};
    if (tagger) {
      j["tagger"] = to_json(tagger->config());
      j["vocab"] = {{"words", vocab_json(tagger->words())}, {"tags", vocab_json(tagger->tags())}};
    } else {
      j["parser"] = to_json(parser->config());
      j["vocab"] = {{"lemmas", vocab_json(parser->lemmas())},
                    {"pos", vocab_json(parser->pos())},
                    {"labels", vocab_json(parser->labels())}};
    }
    if (char_lm) {
      j["char_lm"] = {{"embedding_dim", char_embedding_dim},
                      {"hidden", char_lm->forward().hidden_dim()},
                      {"separator", char_lm->separator()},
                      {"forward_chars", vocab_json(char_lm->forward().chars())},
                      {"backward_chars", vocab_json(char_lm->backward().chars())}};
    } else {
      j["char_lm"] = nullptr;
    }
    return j;
  }
};

// Per-sentence constant inputs that do not come from the corpus columns.
template <ad::Real T>
struct Inputs {
  std::vector<ad::Tensor<T>> contextual;
  std::vector<ad::Tensor<T>> flair;
};

template <ad::Real T>
std::vector<ad::Tensor<T>> contextual_features(const data::Corpus& corpus, const fs::path& path,
                                               emb::PoolingStrategy pooling,
                                               std::size_t expected_dim) {
  const auto sidecar = emb::load_sidecar(path, corpus);
  const std::size_t dim = sidecar.dim();
  if (expected_dim != 0 && dim != expected_dim) {
    fail(ErrorCode::kDimension, "sidecar " + path.string() + " has width " +
                                    std::to_string(dim) + ", model expects " +
                                    std::to_string(expected_dim));
  }
  std::vector<ad::Tensor<T>> out;
  out.reserve(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto flat = sidecar.pooled_sentence(s, pooling);
    out.push_back(ad::Tensor<T>::from({corpus[s].size(), dim},
                                      std::vector<T>(flat.begin(), flat.end())));
  }
  return out;
}

template <ad::Real T>
Inputs<T> model_inputs(const Model<T>& m, const data::Corpus& corpus, const fs::path& sidecar,
                       std::size_t contextual_dim) {
  Inputs<T> in;
  in.contextual.resize(corpus.size());
  in.flair.resize(corpus.size());
  if (m.contextual) {
    if (sidecar.empty()) {
      fail(ErrorCode::kConfig, "the model reads contextual vectors; a sidecar file is required");
    }
    in.contextual = contextual_features<T>(corpus, sidecar, m.pooling, contextual_dim);
  }
  if (m.char_lm) {
    for (std::size_t i = 0; i < corpus.size(); ++i) in.flair[i] = m.char_lm->flair_embed(corpus[i]);
  }
  return in;
}

template <ad::Real T>
tagger::TaggerFeatures<T> tagger_features(const data::Sentence& s, const Inputs<T>& in,
                                          std::size_t i) {
  tagger::TaggerFeatures<T> f;
  for (const auto& t : s.tokens) f.forms.push_back(t.form);
  f.flair = in.flair[i];
  f.contextual = in.contextual[i];
  return f;
}

template <ad::Real T>
std::vector<tagger::TaggerExample<T>> tagger_examples(const data::Corpus& corpus,
                                                      const Inputs<T>& in,
                                                      const data::Vocabulary& tags) {
  std::vector<tagger::TaggerExample<T>> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    tagger::TaggerExample<T> ex;
    ex.features = tagger_features(corpus[i], in, i);
    for (const auto& t : corpus[i].tokens) ex.tags.push_back(tags.id(t.pos));
    out.push_back(std::move(ex));
  }
  return out;
}

template <ad::Real T>
std::vector<parser::ParserExample<T>> parser_examples(const data::Corpus& corpus,
                                                      const Inputs<T>& in,
                                                      const data::Vocabulary& labels,
                                                      eval::Task task) {
  std::vector<parser::ParserExample<T>> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back(task == eval::Task::kDep
                      ? parser::make_tree_example<T>(corpus[i], labels, in.contextual[i])
                      : parser::make_graph_example<T>(corpus[i], labels, in.contextual[i]));
  }
  return out;
}

template <ad::Real T>
data::Corpus predict_corpus(const Model<T>& m, const data::Corpus& corpus, const Inputs<T>& in,
                            std::vector<tagger::AttentionRecord>* attention = nullptr) {
  data::Corpus out = corpus;
  ad::NoGradGuard no_grad;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& sentence = out[i];
    if (sentence.tokens.empty()) continue;
    if (m.tagger) {
      ad::Tensor<T> weights;
      const bool record = attention && m.tagger->config().attention;
      const auto tags =
          m.tagger->decode(tagger_features(corpus[i], in, i), record ? &weights : nullptr);
      for (std::size_t k = 0; k < tags.size(); ++k) {
        sentence.tokens[k].pos = m.tagger->tags().symbol(tags[k]);
      }
      if (record) {
        tagger::AttentionRecord r;
        r.sent_id = sentence.sent_id;
        r.length = sentence.size();
        r.weights.assign(weights.data().begin(), weights.data().end());
        for (const auto& t : sentence.tokens) r.tags.push_back(t.pos);
        attention->push_back(std::move(r));
      }
      continue;
    }
    const auto features = parser::make_features<T>(corpus[i], in.contextual[i]);
    const auto pack = m.parser->score_pack(features);
    if (m.task == eval::Task::kDep) {
      parser::apply_tree(sentence, parser::decode_tree(pack, m.decode.single_root),
                         m.parser->labels());
    } else {
      parser::GraphDecodeConfig g{m.decode.arc_threshold, m.decode.allow_orphans};
      const auto arcs = parser::decode_graph(pack, g);
      parser::apply_graph(sentence, arcs, m.parser->labels());
    }
  }
  return out;
}

struct Corpora {
  data::Corpus train, dev, test;
  std::optional<emb::EmbeddingFile> embeddings;
};

tagger::TaggerConfig tagger_config(const config::ExperimentConfig& c, std::size_t flair_dim,
                                   std::size_t contextual_dim, bool pretrained) {
  tagger::TaggerConfig t;
  t.use_static = c.model.use_static;
  t.use_contextual = c.model.use_contextual;
  t.flair_dim = flair_dim;
  t.word_dim = c.model.static_dim;
  t.word_trainable = c.model.static_trainable.value_or(!pretrained);
  t.lowercase_lookup = c.model.lowercase_lookup;
  t.lstm_layers = c.model.bilstm_layers;
  t.lstm_hidden = c.model.bilstm_hidden;
  t.attention = c.model.attention;
  t.embedding_dropout = c.dropout.embeddings;
  t.scheme = c.model.composition;
  t.split_layer = c.model.composition_layer;
  t.contextual_dim = contextual_dim;
  return t;
}

parser::BiaffineConfig parser_config(const config::ExperimentConfig& c,
                                     std::size_t contextual_dim) {
  parser::BiaffineConfig p;
  p.lemma_dim = c.model.lemma_dim;
  p.lemma_trainable = c.model.static_trainable.value_or(false);
  p.lowercase_lookup = c.model.lowercase_lookup;
  p.pos_dim = c.model.tag_dim;
  p.use_contextual = c.model.use_contextual;
  p.contextual_dim = contextual_dim;
  p.scheme = c.model.composition;
  p.split_layer = c.model.composition_layer;
  p.lstm_layers = c.model.bilstm_layers;
  p.lstm_hidden = c.model.bilstm_hidden;
  p.arc_mlp = c.model.mlp_arc;
  p.label_mlp = c.model.mlp_label;
  p.embedding_dropout = c.dropout.embeddings;
  p.word_dropout = c.dropout.word;
  p.lstm_dropout = c.dropout.variational;
  p.recurrent_dropout = c.dropout.variational;
  p.mlp_dropout = c.dropout.mlp;
  p.arc_loss_weight = c.model.arc_loss_weight;
  p.label_loss_weight = c.model.label_loss_weight;
  return p;
}

// Label inventory over TRN and DEV so that DEV scoring never meets an
// unknown gold label.
data::Vocabulary label_inventory(const Corpora& d, data::VocabField field) {
  data::VocabOptions options;
  options.reserved = false;
  auto vocab = data::build_vocab(d.train, field, options);
  const auto extra = data::build_vocab(d.dev, field, options);
  for (const auto& s : extra.symbols()) vocab.add(s, 0);
  return vocab;
}

std::vector<std::string> texts_of(const data::Corpus& corpus, const std::string& separator) {
  std::vector<std::string> out;
  for (const auto& s : corpus) out.push_back(emb::sentence_text(s, separator));
  return out;
}

template <ad::Real T>
SeedOutcome train_seed(const config::ExperimentConfig& c, std::uint64_t seed, const Corpora& d,
                       const fs::path& dir, std::ostream& log) {
  Rng rng(seed);
  Model<T> m;
  m.task = c.task;
  m.precision = c.precision;
  m.pooling = c.model.pooling;
  m.contextual = c.model.use_contextual;
  m.decode = c.decode;

  if (c.model.use_char_lm) {
    const auto train_texts = texts_of(d.train, c.char_lm.token_separator);
    const auto dev_texts = texts_of(d.dev, c.char_lm.token_separator);
    auto forward = emb::train_char_lm<T>(train_texts, dev_texts, emb::LmDirection::kForward,
                                         c.char_lm, rng);
    auto backward = emb::train_char_lm<T>(train_texts, dev_texts, emb::LmDirection::kBackward,
                                          c.char_lm, rng);
    m.char_embedding_dim = c.char_lm.embedding_dim;
    m.char_lm = std::make_unique<emb::CharLm<T>>(std::move(forward), std::move(backward),
                                                 c.char_lm.token_separator);
  }

  const auto train_in = model_inputs(m, d.train, c.paths.sidecar_train, c.model.bert_dim);
  std::size_t contextual_dim = 0;
  if (m.contextual && !train_in.contextual.empty()) contextual_dim = train_in.contextual[0].dim(1);
  if (m.contextual && contextual_dim == 0) contextual_dim = c.model.bert_dim;
  const auto dev_in = model_inputs(m, d.dev, c.paths.sidecar_dev, contextual_dim);
  const bool has_test = !c.paths.test.empty();
  const auto test_in = has_test ? model_inputs(m, d.test, c.paths.sidecar_test, contextual_dim)
                                : Inputs<T>{};
  const emb::EmbeddingFile* pretrained = d.embeddings ? &*d.embeddings : nullptr;

  json history = json::array();
  if (c.task == eval::Task::kPos) {
    data::VocabOptions word_options;
    word_options.lowercase = c.model.lowercase_lookup;
    auto words = data::build_vocab(d.train, data::VocabField::kForm, word_options);
    auto tags = label_inventory(d, data::VocabField::kPos);
    const std::size_t flair_dim = m.char_lm ? m.char_lm->output_dim() : 0;
    m.tagger = std::make_unique<tagger::TaggerModel<T>>(
        tagger_config(c, flair_dim, contextual_dim, pretrained != nullptr), std::move(words),
        std::move(tags), rng, c.model.use_static ? pretrained : nullptr);
    const auto train_ex = tagger_examples(d.train, train_in, m.tagger->tags());
    const auto dev_ex = tagger_examples(d.dev, dev_in, m.tagger->tags());
    tagger::TaggerTrainOptions options;
    options.optimizer = c.optimizer;
    options.stop_at_dev_score = c.training.stop_at_dev_score;
    const auto result = tagger::train_tagger<T>(*m.tagger, train_ex, dev_ex, options, rng);
    for (const auto& e : result.history) {
      history.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"dev_accuracy", e.dev_accuracy},
                         {"learning_rate", e.learning_rate},
                         {"improved", e.improved}});
    }
    log << "seed " << seed << ": best DEV accuracy " << result.best_dev_accuracy << " at epoch "
        << result.best_epoch << "\n";
  } else {
    const auto field =
        c.task == eval::Task::kDep ? data::VocabField::kTreeLabel : data::VocabField::kGraphLabel;
    auto lemmas = data::build_vocab(d.train, data::VocabField::kLemma,
                                    {.min_count = 1, .reserved = true,
                                     .lowercase = c.model.lowercase_lookup});
    auto pos = data::build_vocab(d.train, data::VocabField::kPos);
    m.parser = std::make_unique<parser::BiaffineModel<T>>(
        parser_config(c, contextual_dim), std::move(lemmas), std::move(pos),
        label_inventory(d, field), rng, pretrained);
    const auto train_ex = parser_examples(d.train, train_in, m.parser->labels(), c.task);
    const auto dev_ex = parser_examples(d.dev, dev_in, m.parser->labels(), c.task);
    parser::ParserTrainOptions options;
    options.optimizer = c.optimizer;
    options.eval_every_steps = c.training.eval_every;
    options.stop_at_dev_score = c.training.stop_at_dev_score;
    options.decode = {c.decode.arc_threshold, c.decode.allow_orphans};
    const auto result =
        c.task == eval::Task::kDep
            ? parser::train_parser<T>(*m.parser, train_ex, dev_ex, options, rng)
            : parser::train_graph_parser<T>(*m.parser, train_ex, dev_ex, options, rng);
    for (const auto& e : result.history) {
      history.push_back({{"step", e.step},
                         {"train_loss", e.train_loss},
                         {"dev_score", e.dev_score},
                         {"learning_rate", e.learning_rate},
                         {"improved", e.improved}});
    }
    log << "seed " << seed << ": best DEV score " << result.best_dev_score << " at step "
        << result.best_step << "\n";
  }

  fs::create_directories(dir);
  eval::ReportOptions report_options;
  report_options.exclude_punctuation = c.decode.exclude_punct;
  report_options.include_top = c.decode.include_top;
  const auto train_forms = data::build_vocab(d.train, data::VocabField::kForm);
  const auto format = format_for(c.task);
  const std::string ext = extension_for(c.task);

  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.dir = dir;
  {
    const auto pred = predict_corpus(m, d.dev, dev_in);
    data::write_corpus(dir / ("dev.pred" + ext), pred, format);
    if (c.task == eval::Task::kPos) report_options.oov_mask = data::oov_mask(d.dev, train_forms);
    outcome.dev = eval::build_report(c.task, c.dataset, seed, d.dev, pred, report_options);
  }
  if (has_test) {
    const auto pred = predict_corpus(m, d.test, test_in);
    data::write_corpus(dir / ("test.pred" + ext), pred, format);
    if (c.task == eval::Task::kPos) report_options.oov_mask = data::oov_mask(d.test, train_forms);
    outcome.test = eval::build_report(c.task, c.dataset, seed, d.test, pred, report_options);
  }

  ad::save_parameters<T>(dir / "model.spck", m.const_stores());
  write_text(dir / "model.json", m.metadata(c.dataset, seed).dump(2) + "\n");
  write_text(dir / "dev_report.json", outcome.dev.to_json());
  write_text(dir / "report.json", outcome.primary().to_json());
  write_text(dir / "history.json", history.dump(2) + "\n");
  return outcome;
}

template <ad::Real T>
Model<T> load_model(const fs::path& dir, const json& meta) {
  Rng rng(0);
  Model<T> m;
  m.task = eval::task_from_string(meta.at("task").get<std::string>());
  m.precision = meta.at("precision").get<std::string>();
  m.pooling = emb::pooling_from_string(meta.at("pooling").get<std::string>());
  m.contextual = meta.at("contextual").get<bool>();
  const auto& decode = meta.at("decode");
  m.decode.arc_threshold = decode.at("arc_threshold").get<double>();
  m.decode.allow_orphans = decode.at("allow_orphans").get<bool>();
  m.decode.single_root = decode.at("single_root").get<bool>();
  const auto& vocab = meta.at("vocab");
  if (!meta.at("char_lm").is_null()) {
    const auto& lm = meta.at("char_lm");
    const auto emb_dim = lm.at("embedding_dim").get<std::size_t>();
    const auto hidden = lm.at("hidden").get<std::size_t>();
    auto forward = std::make_unique<emb::CharLmHalf<T>>(
        "charlm.forward", emb::LmDirection::kForward,
        vocab_from(lm.at("forward_chars"), true, data::VocabField::kChar), emb_dim, hidden, rng);
    auto backward = std::make_unique<emb::CharLmHalf<T>>(
        "charlm.backward", emb::LmDirection::kBackward,
        vocab_from(lm.at("backward_chars"), true, data::VocabField::kChar), emb_dim, hidden, rng);
    m.char_embedding_dim = emb_dim;
    m.char_lm = std::make_unique<emb::CharLm<T>>(std::move(forward), std::move(backward),
                                                 lm.at("separator").get<std::string>());
  }
  if (m.task == eval::Task::kPos) {
    auto config = tagger_config_from(meta.at("tagger"));
    auto words = config.use_static ? vocab_from(vocab.at("words"), true, data::VocabField::kForm)
                                   : data::Vocabulary(true, data::VocabField::kForm);
    m.tagger = std::make_unique<tagger::TaggerModel<T>>(
        config, std::move(words), vocab_from(vocab.at("tags"), false, data::VocabField::kPos),
        rng);
  } else {
    const auto field =
        m.task == eval::Task::kDep ? data::VocabField::kTreeLabel : data::VocabField::kGraphLabel;
    m.parser = std::make_unique<parser::BiaffineModel<T>>(
        parser_config_from(meta.at("parser")),
        vocab_from(vocab.at("lemmas"), true, data::VocabField::kLemma),
        vocab_from(vocab.at("pos"), true, data::VocabField::kPos),
        vocab_from(vocab.at("labels"), false, field), rng);
  }
  ad::load_parameters<T>(dir / "model.spck", m.stores());
  return m;
}

json read_model_metadata(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "model.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, (dir / "model.json").string() + ": " + e.what());
  }
  if (meta.value("format", "") != kModelFormat || meta.value("version", 0) != kModelVersion) {
    fail(ErrorCode::kCheckpoint, (dir / "model.json").string() + " is not a model description");
  }
  return meta;
}

// Runs `fn.template operator()<T>()` with T chosen by the precision string.
template <typename Fn>
auto with_precision(const std::string& precision, Fn&& fn) {
  if (precision == "f64") return fn.template operator()<double>();
  if (precision == "f32") return fn.template operator()<float>();
  fail(ErrorCode::kConfig, "unknown precision '" + precision + "' (f32|f64)");
}

}  // namespace

TrainOutcome train_experiment(const config::ExperimentConfig& config, const fs::path& out,
                              std::ostream& log) {
  config.validate();
  config.validate_paths();
  const auto format = format_for(config.task);
  Corpora d;
  d.train = data::read_corpus(config.paths.train, format);
  d.dev = data::read_corpus(config.paths.dev, format);
  if (!config.paths.test.empty()) d.test = data::read_corpus(config.paths.test, format);
  if (d.train.empty()) fail(ErrorCode::kInput, "training corpus " + config.paths.train.string() + " is empty");
  if (!config.paths.embeddings.empty() && (config.model.use_static || config.task != eval::Task::kPos)) {
    d.embeddings = emb::read_embedding_text(config.paths.embeddings);
  }

  fs::create_directories(out);
  write_text(out / "config.ini", config::to_ini(config));
  TrainOutcome outcome;
  std::vector<eval::RunReport> primaries;
  for (const auto seed : config.seeds) {
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    auto run = with_precision(config.precision, [&]<ad::Real T>() {
      return train_seed<T>(config, seed, d, dir, log);
    });
    log << run.primary().to_text();
    primaries.push_back(run.primary());
    outcome.runs.push_back(std::move(run));
  }
  if (primaries.size() >= 2) {
    outcome.aggregate = eval::aggregate_runs(primaries);
    write_text(out / "aggregate.json", outcome.aggregate->to_json());
    log << outcome.aggregate->to_text();
  }
  return outcome;
}

void predict_file(const fs::path& model_dir, const fs::path& input, const fs::path& output,
                  const fs::path& sidecar, const std::optional<std::string>& precision) {
  const auto meta = read_model_metadata(model_dir);
  const auto task = eval::task_from_string(meta.at("task").get<std::string>());
  const std::string p = precision.value_or(meta.at("precision").get<std::string>());
  const auto format = format_for(task);
  const auto corpus = data::read_corpus(input, format);
  with_precision(p, [&]<ad::Real T>() {
    const auto m = load_model<T>(model_dir, meta);
    const std::size_t dim = m.tagger ? m.tagger->config().contextual_dim
                                     : m.parser->config().contextual_dim;
    const auto in = model_inputs(m, corpus, sidecar, dim);
    data::write_corpus(output, predict_corpus(m, corpus, in), format);
  });
}

eval::RunReport evaluate_files(const fs::path& gold_path, const fs::path& pred_path,
                               const EvaluateOptions& options) {
  const auto format = format_for(options.task);
  const auto gold = data::read_corpus(gold_path, format);
  const auto pred = data::read_corpus(pred_path, format);
  eval::ReportOptions report_options;
  report_options.include_top = options.include_top;
  report_options.exclude_punctuation = options.exclude_punctuation;
  if (options.task == eval::Task::kPos) {
    if (!options.train.empty()) {
      const auto train = data::read_corpus(options.train, format);
      report_options.oov_mask =
          data::oov_mask(gold, data::build_vocab(train, data::VocabField::kForm));
    } else {
      std::size_t tokens = 0;
      for (const auto& s : gold) tokens += s.size();
      report_options.oov_mask.assign(tokens, false);
    }
  }
  return eval::build_report(options.task, options.dataset, 0, gold, pred, report_options);
}

AttentionSummary analyze_attention(const fs::path& model_dir, const fs::path& input,
                                   const fs::path& out, std::optional<std::size_t> length,
                                   const fs::path& sidecar) {
  const auto meta = read_model_metadata(model_dir);
  if (meta.at("task").get<std::string>() != "pos" || !meta.at("tagger").at("attention").get<bool>()) {
    fail(ErrorCode::kConfig, "analyze attention needs a tagger trained with model.attention = true");
  }
  const auto corpus = data::read_corpus(input, data::CorpusFormat::kTagged);
  std::vector<tagger::AttentionRecord> records;
  with_precision(meta.at("precision").get<std::string>(), [&]<ad::Real T>() {
    const auto m = load_model<T>(model_dir, meta);
    const auto in = model_inputs(m, corpus, sidecar, m.tagger->config().contextual_dim);
    predict_corpus(m, corpus, in, &records);
  });
  if (records.empty()) fail(ErrorCode::kInput, "analyze attention: no non-empty sentence in " + input.string());

  AttentionSummary summary;
  if (length) {
    summary.length = *length;
  } else {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& r : records) counts[r.length]++;
    std::size_t best = 0;
    for (const auto& [len, n] : counts) {
      if (n > best) {
        best = n;
        summary.length = len;
      }
    }
  }
  for (const auto& r : records) summary.sentences += r.length == summary.length;
  summary.weights = tagger::average_attention(records, summary.length);

  fs::create_directories(out);
  const std::string stem = "attention-" + std::to_string(summary.length);
  write_text(out / (stem + ".csv"), tagger::attention_csv(summary.weights, summary.length));
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= summary.length; ++i) labels.push_back(std::to_string(i));
  write_text(out / (stem + ".svg"), eval::attention_svg(summary.weights, summary.length, labels));
  return summary;
}

eval::RunReport read_report(const fs::path& path) {
  return eval::RunReport::from_json(read_text(path));
}

std::vector<eval::LengthBin> analyze_length(const std::vector<fs::path>& reports,
                                            const fs::path& out, std::size_t width,
                                            std::size_t max_len) {
  if (reports.empty()) fail(ErrorCode::kInput, "analyze length: no report given");
  std::vector<eval::RunReport> loaded;
  for (const auto& p : reports) loaded.push_back(read_report(p));
  const auto bins = eval::length_binned_f1(loaded, width, max_len);
  fs::create_directories(out);
  write_text(out / "length-bins.csv", eval::length_bins_csv(bins));
  write_text(out / "length-bins.svg", eval::length_bins_svg(bins, "F1 by sentence length"));
  return bins;
}

eval::LabelRanking analyze_labels(const fs::path& baseline, const fs::path& system,
                                  const fs::path& out, std::size_t top_k) {
  const auto ranking = eval::label_diff_ranking(read_report(baseline), read_report(system), top_k);
  fs::create_directories(out);
  write_text(out / "label-ranking.csv", eval::label_ranking_csv(ranking));
  write_text(out / "label-ranking.svg", eval::label_ranking_svg(ranking, "Per-label F1 difference"));
  return ranking;
}

}  // namespace structpred::cli
