#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "structpred/cli/cli.hpp"
#include "structpred/embeddings/sidecar.hpp"
#include "structpred/error.hpp"

namespace structpred::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string precision;
  std::string out;
};

eval::Task parse_task(const std::string& name) { return eval::task_from_string(name); }

fs::path require_out(const GlobalFlags& g, const std::string& command) {
  if (g.out.empty()) fail(ErrorCode::kConfig, command + ": --out is required");
  return g.out;
}

void check_input(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, what + " " + path.string() + " does not exist");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequence tagging, dependency parsing and semantic graph parsing", "structpred"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment configuration file");
  app.add_option("--seed", g.seed, "Run a single seed instead of the configured list");
  app.add_option("--precision", g.precision, "Floating-point precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--out", g.out, "Output directory");

  auto* train = app.add_subcommand("train", "Train one model per seed and report scores");

  auto* predict = app.add_subcommand("predict", "Tag or parse a corpus with a trained model");
  std::string model_dir, input, output, sidecar;
  predict->add_option("--model", model_dir, "Run directory holding model.json and model.spck")
      ->required();
  predict->add_option("--input", input, "Corpus in the model's format")->required();
  predict->add_option("--output", output, "Prediction file")->required();
  predict->add_option("--sidecar", sidecar, "Contextual vectors for the input corpus");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold annotation");
  std::string task_name, gold, pred, train_corpus;
  bool no_top = false, exclude_punct = false;
  evaluate->add_option("--task", task_name, "pos | dep | sdp")->required();
  evaluate->add_option("--gold", gold, "Gold corpus")->required();
  evaluate->add_option("--pred", pred, "Predicted corpus")->required();
  evaluate->add_option("--train", train_corpus, "Training corpus for the OOV split (pos)");
  evaluate->add_flag("--no-top", no_top, "Leave root arcs out of graph scores");
  evaluate->add_flag("--exclude-punct", exclude_punct, "Skip punctuation in UAS/LAS");

  auto* analyze = app.add_subcommand("analyze", "Attention, length and label analyses");
  analyze->require_subcommand(1);
  auto* attention = analyze->add_subcommand("attention", "Average attention matrix by length");
  std::optional<std::size_t> length;
  attention->add_option("--model", model_dir, "Run directory of an attention tagger")->required();
  attention->add_option("--input", input, "Tagged corpus")->required();
  attention->add_option("--length", length, "Sentence length (default: most frequent)");
  attention->add_option("--sidecar", sidecar, "Contextual vectors for the input corpus");
  auto* by_length = analyze->add_subcommand("length", "F1 by sentence length");
  std::vector<std::string> reports;
  std::size_t width = 10, max_len = 50;
  by_length->add_option("--report", reports, "Run report(s) to pool")->required();
  by_length->add_option("--width", width, "Bin width")->check(CLI::PositiveNumber);
  by_length->add_option("--max-len", max_len, "Longest binned length")->check(CLI::PositiveNumber);
  auto* labels = analyze->add_subcommand("labels", "Rank labels by F1 difference");
  std::string baseline, system;
  std::size_t top_k = 5;
  labels->add_option("--baseline", baseline, "Report of the reference system")->required();
  labels->add_option("--system", system, "Report of the compared system")->required();
  labels->add_option("--top", top_k, "Entries per direction");

  auto* side = app.add_subcommand("sidecar", "Contextual vector sidecar files");
  side->require_subcommand(1);
  auto* convert = side->add_subcommand("convert", "Text vectors to the binary sidecar format");
  convert->add_option("--input", input, "Lines of: sent_idx tok_idx f1 ... fd")->required();
  convert->add_option("--output", output, "Binary sidecar")->required();
  auto* validate = side->add_subcommand("validate", "Check a sidecar against a corpus");
  std::string corpus, format;
  validate->add_option("--sidecar", sidecar, "Binary sidecar")->required();
  validate->add_option("--corpus", corpus, "Corpus the vectors belong to")->required();
  validate->add_option("--format", format, "conllu | sdp | tagged (default: from extension)")
      ->check(CLI::IsMember({"conllu", "sdp", "tagged"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) {
      if (g.config.empty()) fail(ErrorCode::kConfig, "train: --config is required");
      auto c = config::load_config(g.config, config::environment_with_prefix());
      if (g.seed) c.seeds = {*g.seed};
      if (!g.precision.empty()) c.precision = g.precision;
      if (!g.out.empty()) c.paths.output = g.out;
      train_experiment(c, c.paths.output, out);
    } else if (predict->parsed()) {
      check_input(input, "input");
      predict_file(model_dir, input, output, sidecar,
                   g.precision.empty() ? std::nullopt : std::optional<std::string>(g.precision));
      out << "wrote " << output << "\n";
    } else if (evaluate->parsed()) {
      EvaluateOptions options;
      options.task = parse_task(task_name);
      options.train = train_corpus;
      options.include_top = !no_top;
      options.exclude_punctuation = exclude_punct;
      check_input(gold, "gold corpus");
      check_input(pred, "predicted corpus");
      const auto report = evaluate_files(gold, pred, options);
      const std::string text = report.to_json();
      out << text;
      if (!g.out.empty()) {
        fs::create_directories(g.out);
        std::ofstream file(fs::path(g.out) / "evaluation.json", std::ios::binary);
        if (!file) fail(ErrorCode::kIo, "cannot write " + (fs::path(g.out) / "evaluation.json").string());
        file << text;
      }
    } else if (attention->parsed()) {
      check_input(input, "input");
      const auto summary =
          analyze_attention(model_dir, input, require_out(g, "analyze attention"), length, sidecar);
      out << "averaged " << summary.sentences << " sentence(s) of length " << summary.length
          << "\n";
    } else if (by_length->parsed()) {
      std::vector<fs::path> paths(reports.begin(), reports.end());
      for (const auto& p : paths) check_input(p, "report");
      const auto bins = analyze_length(paths, require_out(g, "analyze length"), width, max_len);
      out << "wrote " << bins.size() << " length bins\n";
    } else if (labels->parsed()) {
      check_input(baseline, "report");
      check_input(system, "report");
      const auto ranking = analyze_labels(baseline, system, require_out(g, "analyze labels"), top_k);
      out << "ranked " << ranking.all.size() << " labels\n";
    } else if (convert->parsed()) {
      std::ifstream in(input);
      if (!in) fail(ErrorCode::kIo, "cannot open " + input);
      const auto sc = emb::ContextualSidecar::from_text(in);
      sc.write(fs::path(output));
      out << "wrote " << sc.sentence_count() << " sentences of width " << sc.dim() << " to "
          << output << "\n";
    } else if (validate->parsed()) {
      const auto fmt = format.empty() ? format_from_path(corpus)
                       : format == "conllu" ? data::CorpusFormat::kConllu
                       : format == "sdp"    ? data::CorpusFormat::kSdp
                                            : data::CorpusFormat::kTagged;
      const auto sentences = data::read_corpus(corpus, fmt);
      const auto sc = emb::load_sidecar(sidecar, sentences);
      std::size_t tokens = 0;
      for (const auto& s : sentences) tokens += s.size();
      out << "ok: " << sc.sentence_count() << " sentences, " << tokens << " tokens, width "
          << sc.dim() << "\n";
    }
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace structpred::cli
