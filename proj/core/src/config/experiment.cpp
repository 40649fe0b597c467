#include "structpred/config/experiment.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "structpred/error.hpp"

extern char** environ;

namespace structpred::config {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  fail(ErrorCode::kConfig, "key '" + key + "': invalid value '" + value + "' (expected " +
                               expected + ")");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  bad_value(key, v, "true|false");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "number");
  return out;
}

std::string show(bool v) { return v ? "true" : "false"; }
std::string show(std::size_t v) { return std::to_string(v); }
std::string show(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

template <typename Member>
Field bool_field(std::string key, Member member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            member(c) = parse_bool(key, v);
          },
          [member](const ExperimentConfig& c) { return show(member(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Member>
Field size_field(std::string key, Member member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            member(c) = parse_size(key, v);
          },
          [member](const ExperimentConfig& c) { return show(member(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Member>
Field double_field(std::string key, Member member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            member(c) = parse_double(key, v);
          },
          [member](const ExperimentConfig& c) { return show(member(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Member>
Field path_field(std::string key, Member member) {
  return {key, [member](ExperimentConfig& c, const std::string& v) { member(c) = v; },
          [member](const ExperimentConfig& c) {
            return member(const_cast<ExperimentConfig&>(c)).generic_string();
          }};
}

#define FIELD_REF(expr) [](ExperimentConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"task", [](ExperimentConfig& c, const std::string& v) { c.task = eval::task_from_string(v); },
                 [](const ExperimentConfig& c) { return eval::to_string(c.task); }});
    f.push_back({"dataset", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; },
                 [](const ExperimentConfig& c) { return c.dataset; }});
    f.push_back({"seeds",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.seeds.clear();
                   std::stringstream in(v);
                   std::string item;
                   while (std::getline(in, item, ',')) {
                     const auto b = item.find_first_not_of(' ');
                     const auto e = item.find_last_not_of(' ');
                     if (b == std::string::npos) bad_value("seeds", v, "comma-separated integers");
                     c.seeds.push_back(parse_size("seeds", item.substr(b, e - b + 1)));
                   }
                   if (c.seeds.empty()) bad_value("seeds", v, "at least one seed");
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                     if (i) out += ",";
                     out += std::to_string(c.seeds[i]);
                   }
                   return out;
                 }});
    f.push_back({"precision",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v != "f32" && v != "f64") bad_value("precision", v, "f32|f64");
                   c.precision = v;
                 },
                 [](const ExperimentConfig& c) { return c.precision; }});

    f.push_back(path_field("paths.train", FIELD_REF(paths.train)));
    f.push_back(path_field("paths.dev", FIELD_REF(paths.dev)));
    f.push_back(path_field("paths.test", FIELD_REF(paths.test)));
    f.push_back(path_field("paths.embeddings", FIELD_REF(paths.embeddings)));
    f.push_back(path_field("paths.sidecar_train", FIELD_REF(paths.sidecar_train)));
    f.push_back(path_field("paths.sidecar_dev", FIELD_REF(paths.sidecar_dev)));
    f.push_back(path_field("paths.sidecar_test", FIELD_REF(paths.sidecar_test)));
    f.push_back(path_field("paths.output", FIELD_REF(paths.output)));

    f.push_back(bool_field("model.static", FIELD_REF(model.use_static)));
    f.push_back(bool_field("model.char_lm", FIELD_REF(model.use_char_lm)));
    f.push_back(bool_field("model.contextual", FIELD_REF(model.use_contextual)));
    f.push_back(bool_field("model.attention", FIELD_REF(model.attention)));
    f.push_back(bool_field("model.lowercase_lookup", FIELD_REF(model.lowercase_lookup)));
    f.push_back({"model.static_trainable",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.model.static_trainable.reset();
                   } else {
                     c.model.static_trainable = parse_bool("model.static_trainable", v);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.model.static_trainable ? show(*c.model.static_trainable)
                                                   : std::string("auto");
                 }});
    f.push_back({"model.pooling",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.model.pooling = emb::pooling_from_string(v);
                 },
                 [](const ExperimentConfig& c) { return emb::to_string(c.model.pooling); }});
    f.push_back({"model.composition",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.model.composition = emb::composition_from_string(v);
                 },
                 [](const ExperimentConfig& c) { return emb::to_string(c.model.composition); }});
    f.push_back(size_field("model.composition_layer", FIELD_REF(model.composition_layer)));
    f.push_back(size_field("model.static_dim", FIELD_REF(model.static_dim)));
    f.push_back(size_field("model.lemma_dim", FIELD_REF(model.lemma_dim)));
    f.push_back(size_field("model.tag_dim", FIELD_REF(model.tag_dim)));
    f.push_back(size_field("model.bilstm_layers", FIELD_REF(model.bilstm_layers)));
    f.push_back(size_field("model.bilstm_hidden", FIELD_REF(model.bilstm_hidden)));
    f.push_back(size_field("model.bert_dim", FIELD_REF(model.bert_dim)));
    f.push_back(size_field("model.mlp_arc", FIELD_REF(model.mlp_arc)));
    f.push_back(size_field("model.mlp_label", FIELD_REF(model.mlp_label)));
    f.push_back(double_field("model.arc_loss_weight", FIELD_REF(model.arc_loss_weight)));
    f.push_back(double_field("model.label_loss_weight", FIELD_REF(model.label_loss_weight)));

    f.push_back(double_field("dropout.embeddings", FIELD_REF(dropout.embeddings)));
    f.push_back(double_field("dropout.word", FIELD_REF(dropout.word)));
    f.push_back(double_field("dropout.variational", FIELD_REF(dropout.variational)));
    f.push_back(double_field("dropout.mlp", FIELD_REF(dropout.mlp)));

    f.push_back({"optimizer.optimizer",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "sgd") c.optimizer.kind = ad::OptimizerKind::kSgd;
                   else if (v == "adam") c.optimizer.kind = ad::OptimizerKind::kAdam;
                   else bad_value("optimizer.optimizer", v, "sgd|adam");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.optimizer.kind == ad::OptimizerKind::kSgd ? "sgd" : "adam");
                 }});
    f.push_back(double_field("optimizer.learning_rate", FIELD_REF(optimizer.learning_rate)));
    f.push_back(double_field("optimizer.adam_beta1", FIELD_REF(optimizer.adam_beta1)));
    f.push_back(double_field("optimizer.adam_beta2", FIELD_REF(optimizer.adam_beta2)));
    f.push_back(double_field("optimizer.adam_epsilon", FIELD_REF(optimizer.adam_epsilon)));
    f.push_back(double_field("optimizer.anneal_factor", FIELD_REF(optimizer.anneal_factor)));
    // Setting one annealing trigger clears the other.
    f.push_back({"optimizer.anneal_every",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "none") {
                     c.optimizer.anneal_every_steps.reset();
                   } else {
                     c.optimizer.anneal_every_steps = parse_size("optimizer.anneal_every", v);
                     c.optimizer.anneal_patience_epochs.reset();
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.optimizer.anneal_every_steps ? show(*c.optimizer.anneal_every_steps)
                                                         : std::string("none");
                 }});
    f.push_back({"optimizer.anneal_patience",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "none") {
                     c.optimizer.anneal_patience_epochs.reset();
                   } else {
                     c.optimizer.anneal_patience_epochs =
                         parse_size("optimizer.anneal_patience", v);
                     c.optimizer.anneal_every_steps.reset();
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.optimizer.anneal_patience_epochs
                              ? show(*c.optimizer.anneal_patience_epochs)
                              : std::string("none");
                 }});
    f.push_back(size_field("optimizer.batch_size", FIELD_REF(optimizer.batch_size)));
    f.push_back(size_field("optimizer.max_epochs", FIELD_REF(optimizer.max_epochs)));
    f.push_back(size_field("optimizer.train_steps", FIELD_REF(optimizer.max_steps)));
    f.push_back(double_field("optimizer.clip_norm", FIELD_REF(optimizer.clip_norm)));

    f.push_back(size_field("training.eval_every", FIELD_REF(training.eval_every)));
    f.push_back({"training.stop_at_dev_score",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "none") {
                     c.training.stop_at_dev_score.reset();
                   } else {
                     c.training.stop_at_dev_score = parse_double("training.stop_at_dev_score", v);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.training.stop_at_dev_score ? show(*c.training.stop_at_dev_score)
                                                       : std::string("none");
                 }});

    f.push_back(double_field("decode.arc_threshold", FIELD_REF(decode.arc_threshold)));
    f.push_back(bool_field("decode.allow_orphans", FIELD_REF(decode.allow_orphans)));
    f.push_back(bool_field("decode.single_root", FIELD_REF(decode.single_root)));
    f.push_back(bool_field("decode.include_top", FIELD_REF(decode.include_top)));
    f.push_back(bool_field("decode.exclude_punct", FIELD_REF(decode.exclude_punct)));

    f.push_back(size_field("char_lm.embedding_dim", FIELD_REF(char_lm.embedding_dim)));
    f.push_back(size_field("char_lm.hidden", FIELD_REF(char_lm.hidden_dim)));
    f.push_back(size_field("char_lm.epochs", FIELD_REF(char_lm.epochs)));
    f.push_back(double_field("char_lm.learning_rate", FIELD_REF(char_lm.optimizer.learning_rate)));
    f.push_back({"char_lm.token_separator",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "space") c.char_lm.token_separator = " ";
                   else if (v == "none") c.char_lm.token_separator = "";
                   else bad_value("char_lm.token_separator", v, "space|none");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.char_lm.token_separator.empty() ? "none" : "space");
                 }});
    return f;
  }();
  return fields;
}

#undef FIELD_REF

const Field& lookup(const std::string& key) {
  for (const auto& f : schema())
    if (f.key == key) return f;
  fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

std::string qualified(const IniEntry& e) {
  return e.section.empty() ? e.key : e.section + "." + e.key;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(eval::Task task) {
  ExperimentConfig c;
  c.task = task;
  if (task == eval::Task::kPos) {
    c.optimizer = ad::OptimizerConfig::tagging_defaults();
    c.model.bilstm_layers = 1;
    c.model.bilstm_hidden = 256;
    c.dropout.embeddings = 0.5;
  } else {
    c.optimizer = ad::OptimizerConfig::parsing_defaults();
    c.model.bilstm_layers = 3;
    c.model.bilstm_hidden = 400;
    c.dropout.embeddings = 0.33;
  }
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  lookup(key).set(*this, value);
}

std::string ExperimentConfig::get(const std::string& key) const { return lookup(key).get(*this); }

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : schema()) out.push_back(f.key);
    return out;
  }();
  return names;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& f : schema()) out[f.key] = f.get(*this);
  return out;
}

void ExperimentConfig::validate() const {
  optimizer.validate();
  if (seeds.empty()) fail(ErrorCode::kConfig, "seeds: at least one seed required");
  auto rate = [](const std::string& key, double v) {
    if (v < 0.0 || v >= 1.0) fail(ErrorCode::kConfig, "key '" + key + "': dropout outside [0, 1)");
  };
  rate("dropout.embeddings", dropout.embeddings);
  rate("dropout.word", dropout.word);
  rate("dropout.variational", dropout.variational);
  rate("dropout.mlp", dropout.mlp);
  if (model.bilstm_layers == 0 || model.bilstm_hidden == 0) {
    fail(ErrorCode::kConfig, "key 'model.bilstm_layers': encoder sizes must be positive");
  }
  if (model.composition == emb::CompositionScheme::kHidden &&
      model.composition_layer > model.bilstm_layers) {
    fail(ErrorCode::kConfig, "key 'model.composition_layer': exceeds model.bilstm_layers");
  }
  if (training.eval_every == 0) fail(ErrorCode::kConfig, "key 'training.eval_every': must be positive");
  if (task != eval::Task::kPos) {
    if (model.use_char_lm) {
      fail(ErrorCode::kConfig, "key 'model.char_lm': only the tagger uses the character LM");
    }
    if (model.attention) {
      fail(ErrorCode::kConfig, "key 'model.attention': only the tagger has an attention block");
    }
  } else if (!model.use_static && !model.use_char_lm && !model.use_contextual) {
    fail(ErrorCode::kConfig, "key 'model.static': no embedding component enabled");
  }
}

void ExperimentConfig::validate_paths() const {
  auto need = [](const std::string& key, const std::filesystem::path& p) {
    if (p.empty()) fail(ErrorCode::kConfig, "key '" + key + "' is required");
    if (!std::filesystem::exists(p)) {
      fail(ErrorCode::kConfig, "key '" + key + "': file " + p.string() + " does not exist");
    }
  };
  auto optional = [](const std::string& key, const std::filesystem::path& p) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      fail(ErrorCode::kConfig, "key '" + key + "': file " + p.string() + " does not exist");
    }
  };
  need("paths.train", paths.train);
  need("paths.dev", paths.dev);
  optional("paths.test", paths.test);
  optional("paths.embeddings", paths.embeddings);
  if (model.use_contextual) {
    need("paths.sidecar_train", paths.sidecar_train);
    need("paths.sidecar_dev", paths.sidecar_dev);
    if (!paths.test.empty()) need("paths.sidecar_test", paths.sidecar_test);
  }
}

void resolve_paths(ExperimentConfig& config, const std::filesystem::path& base) {
  for (auto* p : {&config.paths.train, &config.paths.dev, &config.paths.test,
                  &config.paths.embeddings, &config.paths.sidecar_train, &config.paths.sidecar_dev,
                  &config.paths.sidecar_test, &config.paths.output}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
}

namespace {

std::string env_to_key(const std::string& name) {
  std::string rest = name.substr(std::string(kEnvPrefix).size());
  std::string key;
  const auto split = rest.find("__");
  if (split != std::string::npos) {
    key = rest.substr(0, split) + "." + rest.substr(split + 2);
  } else {
    key = rest;
  }
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return key;
}

}  // namespace

void apply_env_overrides(ExperimentConfig& config,
                         const std::map<std::string, std::string>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind(kEnvPrefix, 0) != 0) continue;
    const std::string key = env_to_key(name);
    if (key == "task") continue;
    try {
      config.set(key, value);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, "environment " + name + ": " + e.what());
    }
  }
}

ExperimentConfig config_from_entries(const std::vector<IniEntry>& entries,
                                     const std::map<std::string, std::string>& env) {
  std::optional<std::string> task;
  for (const auto& e : entries)
    if (qualified(e) == "task") task = e.value;
  const auto env_task = env.find(std::string(kEnvPrefix) + "TASK");
  if (env_task != env.end()) task = env_task->second;
  if (!task) fail(ErrorCode::kConfig, "key 'task' is required");

  auto config = ExperimentConfig::defaults(eval::task_from_string(*task));
  for (const auto& e : entries) {
    const std::string key = qualified(e);
    if (key == "task") continue;
    try {
      config.set(key, e.value);
    } catch (const Error& err) {
      fail(ErrorCode::kConfig, "line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  apply_env_overrides(config, env);
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& env) {
  auto config = config_from_entries(parse_ini(path), env);
  resolve_paths(config, path.parent_path());
  return config;
}

std::map<std::string, std::string> environment_with_prefix() {
  std::map<std::string, std::string> out;
  for (char** entry = environ; entry && *entry; ++entry) {
    const std::string item(*entry);
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = item.substr(0, eq);
    if (name.rfind(kEnvPrefix, 0) == 0) out[name] = item.substr(eq + 1);
  }
  return out;
}

std::string to_ini(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& key : ExperimentConfig::keys()) {
    const auto dot = key.find('.');
    const std::string s = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string k = dot == std::string::npos ? key : key.substr(dot + 1);
    if (s != section) {
      out += "\n[" + s + "]\n";
      section = s;
    }
    out += k + " = " + config.get(key) + "\n";
  }
  return out;
}

}  // namespace structpred::config
