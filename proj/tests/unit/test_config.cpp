#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "structpred/config/experiment.hpp"
#include "structpred/config/ini.hpp"

using namespace structpred;
using structpred::testing::code_of;
using structpred::testing::fixture;

namespace {

std::vector<config::IniEntry> ini(const std::string& text) {
  std::istringstream in(text);
  return config::parse_ini(in);
}

config::ExperimentConfig from_text(const std::string& text,
                                   const std::map<std::string, std::string>& env = {}) {
  return config::config_from_entries(ini(text), env);
}

}  // namespace

TEST_CASE("ini parsing") {
  const auto entries =
      ini("# comment\ntask = dep\n; other\n\n[model]\n  static_dim=8  \n[paths]\ntrain = a b.conllu\n");
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].section.empty());
  CHECK(entries[0].key == "task");
  CHECK(entries[0].value == "dep");
  CHECK(entries[0].line == 2);
  CHECK(entries[1].section == "model");
  CHECK(entries[1].value == "8");
  CHECK(entries[2].value == "a b.conllu");

  CHECK(code_of([] { ini("[model]\nx = 1\nx = 2\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { ini("[model\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { ini("just words\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { ini(" = 3\n"); }) == ErrorCode::kConfig);
  // The same key in two sections is fine.
  CHECK(ini("[a]\nx = 1\n[b]\nx = 1\n").size() == 2);
  CHECK(code_of([] { config::parse_ini(std::filesystem::path("/nonexistent/x.ini")); }) ==
        ErrorCode::kIo);
}

TEST_CASE("tagging defaults") {
  const auto pos = from_text("task = pos\n");
  CHECK(pos.optimizer.kind == ad::OptimizerKind::kSgd);
  CHECK(pos.optimizer.learning_rate == 0.1);
  CHECK(pos.optimizer.anneal_factor == 0.5);
  CHECK(pos.optimizer.anneal_patience_epochs == std::optional<std::size_t>(2));
  CHECK_FALSE(pos.optimizer.anneal_every_steps.has_value());
  CHECK(pos.optimizer.batch_size == 32);
  CHECK(pos.optimizer.max_epochs == 150);
  CHECK(pos.model.bilstm_layers == 1);
  CHECK(pos.model.bilstm_hidden == 256);
  CHECK(pos.dropout.embeddings == 0.5);
  CHECK(pos.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(pos.precision == "f32");
}

TEST_CASE("parsing defaults") {
  for (const char* task : {"dep", "sdp"}) {
    const auto c = from_text(std::string("task = ") + task + "\n");
    CHECK(c.optimizer.kind == ad::OptimizerKind::kAdam);
    CHECK(c.optimizer.learning_rate == 1e-3);
    CHECK(c.optimizer.adam_beta1 == 0.9);
    CHECK(c.optimizer.adam_beta2 == 0.9);
    CHECK(c.optimizer.adam_epsilon == 1e-12);
    CHECK(c.optimizer.anneal_factor == 0.75);
    CHECK(c.optimizer.anneal_every_steps == std::optional<std::size_t>(5000));
    CHECK_FALSE(c.optimizer.anneal_patience_epochs.has_value());
    CHECK(c.optimizer.batch_size == 5000);
    CHECK(c.optimizer.max_steps == 50000);
    CHECK(c.model.bilstm_layers == 3);
    CHECK(c.model.bilstm_hidden == 400);
    CHECK(c.model.mlp_arc == 500);
    CHECK(c.model.mlp_label == 100);
    CHECK(c.dropout.embeddings == 0.33);
    CHECK(c.dropout.variational == 0.33);
  }
}

TEST_CASE("file values override the task defaults") {
  const auto c = from_text("task = dep\n[model]\nbilstm_hidden = 64\n[optimizer]\nlearning_rate = 0.5\n");
  CHECK(c.model.bilstm_hidden == 64);
  CHECK(c.optimizer.learning_rate == 0.5);
  CHECK(c.model.bilstm_layers == 3);

  // A task from the environment picks the defaults; file values still win.
  const auto switched = from_text("task = pos\n[model]\nbilstm_hidden = 64\n",
                                  {{"STRUCTPRED_TASK", "dep"}});
  CHECK(switched.task == eval::Task::kDep);
  CHECK(switched.model.bilstm_layers == 3);
  CHECK(switched.model.bilstm_hidden == 64);

  CHECK(code_of([] { from_text("[model]\nstatic_dim = 8\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = ner\n"); }) == ErrorCode::kConfig);
}

TEST_CASE("unknown keys and bad values") {
  CHECK(code_of([] { from_text("task = pos\n[model]\nstatic_dims = 8\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\ncolour = blue\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n[model]\nstatic_dim = eight\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n[model]\nstatic = maybe\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\nprecision = f16\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\nseeds = 1,,2\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n[optimizer]\noptimizer = rmsprop\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n[dropout]\nword = 1.0\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = dep\n[model]\nattention = true\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = sdp\n[model]\nchar_lm = true\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n[model]\nstatic = false\n"); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] {
          from_text("task = pos\n[model]\ncomposition = hidden\ncomposition_layer = 2\n");
        }) == ErrorCode::kConfig);

  try {
    from_text("task = pos\n\n[model]\nstatic_dims = 8\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("model.static_dims") != std::string::npos);
  }
}

TEST_CASE("seeds and options") {
  const auto c = from_text("task = pos\nseeds = 7, 8,9\nprecision = f64\n[model]\nstatic_trainable = auto\n");
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(c.precision == "f64");
  CHECK_FALSE(c.model.static_trainable.has_value());
  const auto t = from_text("task = pos\n[model]\nstatic_trainable = yes\n");
  CHECK(t.model.static_trainable == std::optional<bool>(true));
  const auto s = from_text("task = pos\n[char_lm]\ntoken_separator = none\n");
  CHECK(s.char_lm.token_separator.empty());
}

TEST_CASE("annealing triggers exclude each other") {
  const auto a = from_text("task = dep\n[optimizer]\nanneal_patience = 3\n");
  CHECK(a.optimizer.anneal_patience_epochs == std::optional<std::size_t>(3));
  CHECK_FALSE(a.optimizer.anneal_every_steps.has_value());

  const auto b = from_text("task = pos\n[optimizer]\nanneal_every = 100\n");
  CHECK(b.optimizer.anneal_every_steps == std::optional<std::size_t>(100));
  CHECK_FALSE(b.optimizer.anneal_patience_epochs.has_value());

  CHECK(code_of([] { from_text("task = pos\n[optimizer]\nanneal_patience = none\n"); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("environment overrides") {
  const std::map<std::string, std::string> env = {
      {"STRUCTPRED_MODEL__BILSTM_HIDDEN", "32"},
      {"STRUCTPRED_PRECISION", "f64"},
      {"OTHER_VARIABLE", "ignored"}};
  const auto c = from_text("task = pos\n[model]\nbilstm_hidden = 64\n", env);
  CHECK(c.model.bilstm_hidden == 32);
  CHECK(c.precision == "f64");

  CHECK(code_of([] { from_text("task = pos\n", {{"STRUCTPRED_MODEL__NOPE", "1"}}); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { from_text("task = pos\n", {{"STRUCTPRED_DROPOUT__MLP", "x"}}); }) ==
        ErrorCode::kConfig);

  auto d = config::ExperimentConfig::defaults(eval::Task::kPos);
  config::apply_env_overrides(d, {{"STRUCTPRED_OPTIMIZER__MAX_EPOCHS", "4"}});
  CHECK(d.optimizer.max_epochs == 4);
}

TEST_CASE("relative paths follow the config file") {
  const auto path = std::filesystem::path(fixture("configs/pos.ini"));
  const auto c = config::load_config(path);
  CHECK(c.task == eval::Task::kPos);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(c.paths.train == path.parent_path() / "../toy.tagged");
  CHECK(c.paths.output == path.parent_path() / "runs");
  CHECK(std::filesystem::exists(c.paths.train));
  c.validate_paths();

  auto abs = config::ExperimentConfig::defaults(eval::Task::kDep);
  abs.paths.train = "/data/train.conllu";
  abs.paths.dev = "dev.conllu";
  config::resolve_paths(abs, "/base");
  CHECK(abs.paths.train == "/data/train.conllu");
  CHECK(abs.paths.dev == "/base/dev.conllu");
  CHECK(abs.paths.test.empty());

  auto missing = c;
  missing.paths.dev = "/nonexistent/dev.tagged";
  CHECK(code_of([&] { missing.validate_paths(); }) == ErrorCode::kConfig);
  missing = c;
  missing.paths.train.clear();
  CHECK(code_of([&] { missing.validate_paths(); }) == ErrorCode::kConfig);
  missing = c;
  missing.model.use_contextual = true;
  CHECK(code_of([&] { missing.validate_paths(); }) == ErrorCode::kConfig);
}

TEST_CASE("to_ini round-trips") {
  for (const char* name : {"configs/pos.ini", "configs/dep.ini", "configs/sdp.ini"}) {
    const auto c = config::load_config(fixture(name));
    const auto text = config::to_ini(c);
    const auto back = from_text(text);
    CHECK(back.to_map() == c.to_map());
  }
  auto c = config::ExperimentConfig::defaults(eval::Task::kSdp);
  c.optimizer.learning_rate = 0.1 + 0.2;
  c.decode.arc_threshold = -0.25;
  c.training.stop_at_dev_score = 99.5;
  const auto back = from_text(config::to_ini(c));
  CHECK(back.optimizer.learning_rate == c.optimizer.learning_rate);
  CHECK(back.decode.arc_threshold == -0.25);
  CHECK(back.training.stop_at_dev_score == std::optional<double>(99.5));
  CHECK(back.to_map() == c.to_map());

  for (const auto& key : config::ExperimentConfig::keys()) {
    auto copy = c;
    copy.set(key, c.get(key));
    CHECK(copy.get(key) == c.get(key));
  }
  CHECK(code_of([&] { (void)c.get("model.nope"); }) == ErrorCode::kConfig);
}
