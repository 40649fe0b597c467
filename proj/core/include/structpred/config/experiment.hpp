#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "structpred/autodiff/optim.hpp"
#include "structpred/config/ini.hpp"
#include "structpred/embeddings/char_lm.hpp"
#include "structpred/embeddings/compose.hpp"
#include "structpred/embeddings/pooling.hpp"
#include "structpred/eval/report.hpp"

namespace structpred::config {

inline constexpr const char* kEnvPrefix = "STRUCTPRED_";

struct PathsSection {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  std::filesystem::path embeddings;
  std::filesystem::path sidecar_train;
  std::filesystem::path sidecar_dev;
  std::filesystem::path sidecar_test;
  std::filesystem::path output = "runs";
};

struct ModelSection {
  bool use_static = true;
  bool use_char_lm = false;
  bool use_contextual = false;
  bool attention = false;
  bool lowercase_lookup = false;
  // Unset: frozen when read from a file, trainable when random (tagger) or
  // frozen (parser lemma table).
  std::optional<bool> static_trainable;
  emb::PoolingStrategy pooling = emb::PoolingStrategy::kAverage;
  emb::CompositionScheme composition = emb::CompositionScheme::kInput;
  std::size_t composition_layer = 1;
  std::size_t static_dim = 100;
  std::size_t lemma_dim = 100;
  std::size_t tag_dim = 100;
  std::size_t bilstm_layers = 1;
  std::size_t bilstm_hidden = 256;
  std::size_t bert_dim = 0;  // 0 takes the sidecar width
  std::size_t mlp_arc = 500;
  std::size_t mlp_label = 100;
  double arc_loss_weight = 1.0;
  double label_loss_weight = 1.0;
};

struct DropoutSection {
  double embeddings = 0.5;
  double word = 0.33;
  double variational = 0.33;
  double mlp = 0.33;
};

struct TrainingSection {
  std::size_t eval_every = 100;
  std::optional<double> stop_at_dev_score;
};

struct DecodeSection {
  double arc_threshold = 0.0;
  bool allow_orphans = true;
  bool single_root = true;
  bool include_top = true;
  bool exclude_punct = false;
};

struct ExperimentConfig {
  eval::Task task = eval::Task::kPos;
  std::string dataset = "default";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string precision = "f32";
  PathsSection paths;
  ModelSection model;
  DropoutSection dropout;
  ad::OptimizerConfig optimizer;
  TrainingSection training;
  DecodeSection decode;
  emb::CharLmConfig char_lm;

  // Tagging table for pos, parsing table for dep and sdp.
  static ExperimentConfig defaults(eval::Task task);

  // "section.key" (or "key" at top level). Unknown keys are a config error.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();
  std::map<std::string, std::string> to_map() const;

  void validate() const;
  // Inputs needed for training must exist.
  void validate_paths() const;
};

// Resolves relative paths against `base`.
void resolve_paths(ExperimentConfig& config, const std::filesystem::path& base);

// Applies STRUCTPRED_<SECTION>__<KEY> (or STRUCTPRED_<KEY>) overrides. Names
// with the prefix that match no key are rejected.
void apply_env_overrides(ExperimentConfig& config, const std::map<std::string, std::string>& env);

// Reads the task first so the matching defaults apply, then the remaining
// keys, then environment overrides.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& env = {});
ExperimentConfig config_from_entries(const std::vector<IniEntry>& entries,
                                     const std::map<std::string, std::string>& env = {});

std::map<std::string, std::string> environment_with_prefix();

// "key = value" lines grouped by section, parseable by load_config.
std::string to_ini(const ExperimentConfig& config);

}  // namespace structpred::config
