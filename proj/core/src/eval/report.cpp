#include "structpred/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "structpred/error.hpp"

namespace structpred::eval {

using nlohmann::ordered_json;

std::string to_string(Task task) {
  switch (task) {
    case Task::kPos: return "pos";
    case Task::kDep: return "dep";
    case Task::kSdp: return "sdp";
  }
  return "pos";
}

Task task_from_string(const std::string& name) {
  if (name == "pos") return Task::kPos;
  if (name == "dep") return Task::kDep;
  if (name == "sdp") return Task::kSdp;
  fail(ErrorCode::kConfig, "unknown task '" + name + "' (pos|dep|sdp)");
}

void RunReport::validate() const {
  for (const auto& [name, value] : metrics) {
    if (!(value >= 0.0 && value <= 100.0)) {
      fail(ErrorCode::kValidation, "metric " + name + " outside [0, 100]");
    }
  }
  for (const auto& [label, c] : labels) {
    if (c.correct > std::min(c.gold, c.predicted)) {
      fail(ErrorCode::kValidation, "label " + label + " has more correct than gold/predicted");
    }
  }
}

namespace {

ordered_json metrics_json(const std::map<std::string, double>& metrics) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : metrics) out[k] = v;
  return out;
}

std::string format_value(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::map<std::string, double> f1_metrics(const F1Scores& u, const F1Scores& l) {
  return {{"UP", u.precision}, {"UR", u.recall}, {"UF", u.f1},
          {"LP", l.precision}, {"LR", l.recall}, {"LF", l.f1}};
}

}  // namespace

std::string RunReport::to_json() const {
  ordered_json j;
  j["task"] = eval::to_string(task);
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["metrics"] = metrics_json(metrics);
  ordered_json sents = ordered_json::array();
  for (const auto& s : sentences) {
    sents.push_back({{"length", s.length},
                     {"gold", s.gold},
                     {"predicted", s.predicted},
                     {"unlabeled_correct", s.unlabeled_correct},
                     {"labeled_correct", s.labeled_correct}});
  }
  j["sentences"] = sents;
  ordered_json labs = ordered_json::object();
  for (const auto& [label, c] : labels) {
    labs[label] = {{"gold", c.gold}, {"predicted", c.predicted}, {"correct", c.correct}};
  }
  j["labels"] = labs;
  return j.dump(2) + "\n";
}

RunReport RunReport::from_json(const std::string& text) {
  RunReport r;
  try {
    const auto j = ordered_json::parse(text);
    r.task = task_from_string(j.at("task").get<std::string>());
    r.dataset = j.at("dataset").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
    for (const auto& s : j.at("sentences")) {
      r.sentences.push_back({s.at("length").get<std::size_t>(), s.at("gold").get<std::size_t>(),
                             s.at("predicted").get<std::size_t>(),
                             s.at("unlabeled_correct").get<std::size_t>(),
                             s.at("labeled_correct").get<std::size_t>()});
    }
    for (const auto& [k, v] : j.at("labels").items()) {
      r.labels[k] = {v.at("gold").get<std::size_t>(), v.at("predicted").get<std::size_t>(),
                     v.at("correct").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("run report: ") + e.what());
  }
  r.validate();
  return r;
}

std::string RunReport::to_text() const {
  std::string out = "task     " + eval::to_string(task) + "\n";
  out += "dataset  " + dataset + "\n";
  out += "seed     " + std::to_string(seed) + "\n";
  for (const auto& [name, value] : metrics) {
    std::string key = name;
    key.resize(std::max<std::size_t>(9, name.size() + 1), ' ');
    out += key + format_value(value) + "\n";
  }
  return out;
}

RunReport build_report(Task task, const std::string& dataset, std::uint64_t seed,
                       std::span<const data::Sentence> gold, std::span<const data::Sentence> pred,
                       const ReportOptions& options) {
  check_aligned(gold, pred);
  RunReport r;
  r.task = task;
  r.dataset = dataset;
  r.seed = seed;
  if (task == Task::kPos) {
    const auto scores = pos_accuracy(gold, pred, options.oov_mask);
    r.metrics = {{"ALL", scores.all}, {"OOV", scores.oov}};
    for (std::size_t k = 0; k < gold.size(); ++k) {
      SentenceRecord rec{gold[k].size(), gold[k].size(), gold[k].size(), 0, 0};
      for (std::size_t i = 0; i < gold[k].size(); ++i) {
        const auto& g = gold[k].tokens[i].pos;
        const auto& p = pred[k].tokens[i].pos;
        r.labels[g].gold++;
        r.labels[p].predicted++;
        if (g == p) {
          r.labels[g].correct++;
          rec.unlabeled_correct++;
          rec.labeled_correct++;
        }
      }
      r.sentences.push_back(rec);
    }
  } else if (task == Task::kDep) {
    AttachmentOptions opts{options.exclude_punctuation};
    const auto scores = uas_las(gold, pred, opts);
    r.metrics = {{"UAS", scores.uas}, {"LAS", scores.las}};
    for (std::size_t k = 0; k < gold.size(); ++k) {
      SentenceRecord rec{gold[k].size(), 0, 0, 0, 0};
      for (std::size_t i = 0; i < gold[k].size(); ++i) {
        const auto& g = gold[k].tokens[i];
        const auto& p = pred[k].tokens[i];
        if (opts.exclude_punctuation && is_punctuation(g)) continue;
        const std::string gl = g.tree_label.value_or("_");
        const std::string pl = p.tree_label.value_or("_");
        rec.gold++;
        rec.predicted++;
        r.labels[gl].gold++;
        r.labels[pl].predicted++;
        if (p.tree_head == g.tree_head) {
          rec.unlabeled_correct++;
          if (gl == pl) {
            rec.labeled_correct++;
            r.labels[gl].correct++;
          }
        }
      }
      r.sentences.push_back(rec);
    }
  } else {
    const GraphF1Options labeled{true, options.include_top};
    const GraphF1Options unlabeled{false, options.include_top};
    r.metrics = f1_metrics(graph_f1(gold, pred, unlabeled), graph_f1(gold, pred, labeled));
    for (std::size_t k = 0; k < gold.size(); ++k) {
      const auto gl = graph_arc_set(gold[k], labeled);
      const auto pl = graph_arc_set(pred[k], labeled);
      const auto gu = graph_arc_set(gold[k], unlabeled);
      const auto pu = graph_arc_set(pred[k], unlabeled);
      SentenceRecord rec{gold[k].size(), gl.size(), pl.size(), 0, 0};
      for (const auto& a : pu) rec.unlabeled_correct += gu.count(a);
      for (const auto& a : gl) r.labels[a.label].gold++;
      for (const auto& a : pl) {
        r.labels[a.label].predicted++;
        if (gl.count(a)) {
          rec.labeled_correct++;
          r.labels[a.label].correct++;
        }
      }
      r.sentences.push_back(rec);
    }
  }
  r.validate();
  return r;
}

std::string AggregateReport::to_json() const {
  ordered_json j;
  j["task"] = eval::to_string(task);
  j["dataset"] = dataset;
  j["seeds"] = seeds;
  ordered_json m = ordered_json::object();
  for (const auto& [name, s] : metrics) {
    m[name] = {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}};
  }
  j["metrics"] = m;
  return j.dump(2) + "\n";
}

std::string AggregateReport::to_text() const {
  std::string out = "task     " + eval::to_string(task) + "\n";
  out += "dataset  " + dataset + "\n";
  out += "runs     " + std::to_string(seeds.size()) + "\n";
  for (const auto& [name, s] : metrics) {
    std::string key = name;
    key.resize(std::max<std::size_t>(9, name.size() + 1), ' ');
    out += key + format_value(s.mean) + " ± " + format_value(s.stddev) + "\n";
  }
  return out;
}

AggregateReport aggregate_runs(std::span<const RunReport> reports) {
  if (reports.size() < 2) {
    fail(ErrorCode::kInput, "aggregate_runs: need at least two runs, got " +
                                std::to_string(reports.size()));
  }
  AggregateReport agg;
  agg.task = reports[0].task;
  agg.dataset = reports[0].dataset;
  for (const auto& r : reports) {
    if (r.task != agg.task || r.dataset != agg.dataset) {
      fail(ErrorCode::kValidation, "aggregate_runs: runs differ in task or dataset");
    }
    if (r.metrics.size() != reports[0].metrics.size() ||
        !std::equal(r.metrics.begin(), r.metrics.end(), reports[0].metrics.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      fail(ErrorCode::kValidation, "aggregate_runs: runs report different metrics");
    }
    agg.seeds.push_back(r.seed);
  }
  const double n = static_cast<double>(reports.size());
  for (const auto& [name, unused] : reports[0].metrics) {
    MetricSummary s;
    s.min = s.max = reports[0].metrics.at(name);
    double total = 0;
    for (const auto& r : reports) {
      const double v = r.metrics.at(name);
      total += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.mean = std::clamp(total / n, s.min, s.max);
    double squares = 0;
    for (const auto& r : reports) {
      const double d = r.metrics.at(name) - s.mean;
      squares += d * d;
    }
    s.stddev = std::sqrt(squares / (n - 1.0));
    agg.metrics[name] = s;
  }
  return agg;
}

}  // namespace structpred::eval
