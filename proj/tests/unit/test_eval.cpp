#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "structpred/data/io.hpp"
#include "structpred/data/vocab.hpp"
#include "structpred/eval/analysis.hpp"
#include "structpred/eval/metrics.hpp"
#include "structpred/eval/report.hpp"

using namespace structpred;
using structpred::testing::code_of;
using structpred::testing::fixture;

namespace {

std::vector<std::string> tags_of(const data::Corpus& corpus) {
  std::vector<std::string> tags;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) tags.push_back(t.pos);
  return tags;
}

eval::RunReport report_with(std::map<std::string, eval::LabelCounts> labels) {
  eval::RunReport r;
  r.task = eval::Task::kDep;
  r.dataset = "hand";
  r.labels = std::move(labels);
  return r;
}

}  // namespace

TEST_CASE("f1 from counts") {
  // {a,b,c} against {b,c,d}
  const auto s = eval::f1_from_counts(3, 3, 2);
  CHECK(s.precision == doctest::Approx(200.0 / 3));
  CHECK(s.recall == doctest::Approx(200.0 / 3));
  CHECK(s.f1 == doctest::Approx(200.0 / 3));

  const auto empty = eval::f1_from_counts(4, 0, 0);
  CHECK(empty.precision == 0);
  CHECK(empty.recall == 0);
  CHECK(empty.f1 == 0);
  CHECK(eval::f1_from_counts(0, 0, 0).f1 == 0);
}

TEST_CASE("attachment scores on the hand-scored trees") {
  const auto gold = data::read_conllu(fixture("eval/gold3.conllu"));
  const auto pred = data::read_conllu(fixture("eval/pred3.conllu"));
  const auto all = eval::uas_las(gold, pred);
  CHECK(all.total == 12);
  CHECK(all.head_correct == 9);
  CHECK(all.label_correct == 7);
  CHECK(all.uas == 100.0 * 9 / 12);
  CHECK(all.las == 100.0 * 7 / 12);

  const auto no_punct = eval::uas_las(gold, pred, {.exclude_punctuation = true});
  CHECK(no_punct.total == 10);
  CHECK(no_punct.uas == 90.0);
  CHECK(no_punct.las == 70.0);
  CHECK(no_punct.las <= no_punct.uas);

  const auto self = eval::uas_las(gold, gold);
  CHECK(self.uas == 100.0);
  CHECK(self.las == 100.0);
}

TEST_CASE("punctuation predicate") {
  data::Token t;
  t.upos = "PUNCT";
  CHECK(eval::is_punctuation(t));
  t.upos = "NOUN";
  for (const char* tag : {"``", "''", ",", ".", ":", "-LRB-", "-RRB-", "PU", "#", "$"}) {
    t.pos = tag;
    CHECK(eval::is_punctuation(t));
  }
  t.pos = "NN";
  CHECK_FALSE(eval::is_punctuation(t));
}

TEST_CASE("graph scores on the hand-scored graphs") {
  const auto gold = data::read_sdp(fixture("eval/gold2.sdp"));
  const auto pred = data::read_sdp(fixture("eval/pred2.sdp"));

  const auto lab = eval::graph_f1(gold, pred, {.labeled = true, .include_top = true});
  const auto unl = eval::graph_f1(gold, pred, {.labeled = false, .include_top = true});
  CHECK(lab.gold == 7);
  CHECK(lab.predicted == 7);
  CHECK(unl.correct == 5);
  CHECK(lab.correct == 3);
  CHECK(unl.f1 == doctest::Approx(100.0 * 5 / 7).epsilon(1e-12));
  CHECK(lab.f1 == doctest::Approx(100.0 * 3 / 7).epsilon(1e-12));
  CHECK(lab.precision == doctest::Approx(100.0 * 3 / 7).epsilon(1e-12));
  CHECK(lab.recall == doctest::Approx(100.0 * 3 / 7).epsilon(1e-12));

  const auto lab_nt = eval::graph_f1(gold, pred, {.labeled = true, .include_top = false});
  const auto unl_nt = eval::graph_f1(gold, pred, {.labeled = false, .include_top = false});
  CHECK(unl_nt.gold == 5);
  CHECK(unl_nt.f1 == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(lab_nt.f1 == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(lab.f1 <= unl.f1);

  const auto report = eval::build_report(eval::Task::kSdp, "eval", 0, gold, pred);
  CHECK(report.metrics.at("UF") == doctest::Approx(100.0 * 5 / 7));
  CHECK(report.metrics.at("LP") == doctest::Approx(100.0 * 3 / 7));
  CHECK(report.metrics.at("LR") == doctest::Approx(100.0 * 3 / 7));
  CHECK(report.labels.at("ARG2").gold == 1);
  CHECK(report.labels.at("ARG2").predicted == 1);
  CHECK(report.labels.at("ARG2").correct == 0);
}

TEST_CASE("tagging accuracy with an oov mask") {
  const auto train = data::read_tagged(fixture("toy.tagged"));
  const auto gold = data::read_tagged(fixture("eval/gold2.tagged"));
  const auto pred = data::read_tagged(fixture("eval/pred2.tagged"));
  const auto forms = data::build_vocab(train, data::VocabField::kForm);
  const auto mask = data::oov_mask(gold, forms);
  CHECK(mask == std::vector<bool>{false, false, true, false, true, true, false});

  const auto s = eval::pos_accuracy(gold, pred, mask);
  CHECK(s.total == 7);
  CHECK(s.all == 100.0 * 6 / 7);
  CHECK(s.oov_total == 3);
  CHECK(s.oov == 100.0 * 2 / 3);

  const std::vector<bool> everything(7, true);
  const auto full = eval::pos_accuracy(gold, pred, everything);
  CHECK(full.oov == full.all);

  const auto same = eval::pos_accuracy(gold, gold, mask);
  CHECK(same.all == 100.0);
  CHECK(same.oov == 100.0);

  const auto g = tags_of(gold), p = tags_of(pred);
  const auto flat = eval::pos_accuracy(std::span<const std::string>(g),
                                       std::span<const std::string>(p), mask);
  CHECK(flat.all == s.all);
  CHECK(flat.oov == s.oov);
  CHECK(eval::pos_accuracy(std::span<const std::string>(g), std::span<const std::string>(p),
                           std::vector<bool>(7, false))
            .oov == 0);
}

TEST_CASE("misaligned corpora are rejected") {
  const auto gold = data::read_conllu(fixture("eval/gold3.conllu"));
  auto pred = gold;
  pred.pop_back();
  CHECK(code_of([&] { eval::uas_las(gold, pred); }) == ErrorCode::kAlignment);
  pred = gold;
  pred[1].tokens.pop_back();
  CHECK(code_of([&] { eval::check_aligned(gold, pred); }) == ErrorCode::kAlignment);
}

TEST_CASE("run reports") {
  const auto gold = data::read_conllu(fixture("eval/gold3.conllu"));
  const auto pred = data::read_conllu(fixture("eval/pred3.conllu"));
  const auto r = eval::build_report(eval::Task::kDep, "eval", 3, gold, pred);
  CHECK(r.metrics.at("UAS") == 75.0);
  CHECK(r.metrics.at("LAS") == 100.0 * 7 / 12);
  REQUIRE(r.sentences.size() == 3);
  CHECK(r.sentences[0].length == 4);
  CHECK(r.sentences[0].unlabeled_correct == 3);
  CHECK(r.sentences[0].labeled_correct == 2);
  CHECK(r.labels.at("obj").predicted == 2);
  CHECK(r.labels.at("obj").gold == 1);
  CHECK(r.labels.at("amod").gold == 0);

  const auto back = eval::RunReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(back.task == eval::Task::kDep);
  CHECK(back.seed == 3);
  CHECK(back.metrics == r.metrics);
  CHECK(back.labels.size() == r.labels.size());

  CHECK(code_of([] { eval::RunReport::from_json("{\"task\": 1}"); }) == ErrorCode::kFormat);
  CHECK(code_of([] { eval::task_from_string("ner"); }) == ErrorCode::kConfig);
  CHECK(r.to_text().find("UAS") != std::string::npos);
}

TEST_CASE("aggregating runs") {
  std::vector<eval::RunReport> runs(3);
  for (std::size_t k = 0; k < 3; ++k) {
    runs[k].task = eval::Task::kPos;
    runs[k].dataset = "toy";
    runs[k].seed = k + 1;
    runs[k].metrics = {{"ALL", 1.0 + k}, {"OOV", 50.0}};
  }
  const auto agg = eval::aggregate_runs(runs);
  CHECK(agg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(agg.metrics.at("ALL").mean == doctest::Approx(2.0));
  CHECK(agg.metrics.at("ALL").stddev == doctest::Approx(1.0));
  CHECK(agg.metrics.at("ALL").min == 1.0);
  CHECK(agg.metrics.at("ALL").max == 3.0);
  CHECK(agg.metrics.at("OOV").stddev == 0.0);
  CHECK(agg.to_json().find("\"std\"") != std::string::npos);

  std::span<const eval::RunReport> one(runs.data(), 1);
  CHECK(code_of([&] { eval::aggregate_runs(one); }) == ErrorCode::kInput);
  auto mixed = runs;
  mixed[1].dataset = "other";
  CHECK(code_of([&] { eval::aggregate_runs(mixed); }) == ErrorCode::kValidation);
  mixed = runs;
  mixed[2].metrics.erase("OOV");
  CHECK(code_of([&] { eval::aggregate_runs(mixed); }) == ErrorCode::kValidation);
}

TEST_CASE("length bins recombine to the corpus totals") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    eval::RunReport r;
    r.task = eval::Task::kSdp;
    std::size_t gold = 0, predicted = 0, uc = 0, lc = 0;
    const int n = 1 + static_cast<int>(gen() % 40);
    for (int i = 0; i < n; ++i) {
      eval::SentenceRecord s;
      s.length = 1 + gen() % 70;
      s.gold = gen() % 20;
      s.predicted = gen() % 20;
      s.unlabeled_correct = std::min(s.gold, s.predicted) == 0
                                ? 0
                                : gen() % (std::min(s.gold, s.predicted) + 1);
      s.labeled_correct = s.unlabeled_correct == 0 ? 0 : gen() % (s.unlabeled_correct + 1);
      gold += s.gold;
      predicted += s.predicted;
      uc += s.unlabeled_correct;
      lc += s.labeled_correct;
      r.sentences.push_back(s);
    }
    const std::size_t width = 1 + gen() % 15;
    const auto bins = eval::length_binned_f1(std::span<const eval::RunReport>(&r, 1), width, 50);
    std::size_t bg = 0, bp = 0, bu = 0, bl = 0, bs = 0;
    for (const auto& b : bins) {
      bg += b.gold;
      bp += b.predicted;
      bu += b.unlabeled_correct;
      bl += b.labeled_correct;
      bs += b.sentences;
      CHECK(b.uf.has_value() == (b.sentences > 0));
    }
    CHECK(bs == static_cast<std::size_t>(n));
    CHECK(bg == gold);
    CHECK(bp == predicted);
    CHECK(bu == uc);
    CHECK(bl == lc);
    CHECK(std::abs(eval::f1_from_counts(bg, bp, bl).f1 -
                   eval::f1_from_counts(gold, predicted, lc).f1) < 1e-10);
  }
}

TEST_CASE("length bin layout") {
  eval::RunReport r;
  for (int i = 0; i < 4; ++i) r.sentences.push_back({10, 5, 5, 4, 3});
  const auto bins = eval::length_binned_f1(std::span<const eval::RunReport>(&r, 1), 10, 50);
  REQUIRE(bins.size() == 6);
  CHECK(bins[0].name() == "1-10");
  CHECK(bins[4].name() == "41-50");
  CHECK(bins[5].name() == "51+");
  CHECK_FALSE(bins[5].hi.has_value());
  CHECK(bins[0].sentences == 4);
  CHECK(*bins[0].lf == doctest::Approx(60.0));
  for (std::size_t k = 1; k < bins.size(); ++k) {
    CHECK(bins[k].sentences == 0);
    CHECK_FALSE(bins[k].uf.has_value());
    CHECK_FALSE(bins[k].lf.has_value());
  }

  // Two buckets by hand: lengths 3 and 12 with width 10.
  eval::RunReport two;
  two.sentences = {{3, 4, 4, 4, 2}, {12, 10, 6, 6, 3}, {60, 1, 1, 1, 1}};
  const auto b2 = eval::length_binned_f1(std::span<const eval::RunReport>(&two, 1), 10, 50);
  CHECK(*b2[0].uf == 100.0);
  CHECK(*b2[0].lf == 50.0);
  CHECK(*b2[1].uf == doctest::Approx(75.0));
  CHECK(*b2[1].lf == doctest::Approx(37.5));
  CHECK(b2[5].sentences == 1);
  CHECK(*b2[5].lf == 100.0);

  const auto csv = eval::length_bins_csv(b2);
  CHECK(csv.rfind("bin,lo,hi,sentences,gold,predicted,UF,LF\n", 0) == 0);
  CHECK(csv.find("1-10,1,10,1,4,4,100.0000,50.0000\n") != std::string::npos);
  CHECK(csv.find("21-30,21,30,0,0,0,,\n") != std::string::npos);
  CHECK(csv.find("51+,51,,1,1,1,100.0000,100.0000\n") != std::string::npos);

  const auto svg = eval::length_bins_svg(b2, "F1 by length");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  CHECK(code_of([&] { eval::length_binned_f1(std::span<const eval::RunReport>(&r, 1), 0); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("label ranking by hand") {
  const auto a = report_with({{"A", {10, 10, 5}},
                              {"B", {4, 4, 4}},
                              {"C", {2, 2, 1}},
                              {"D", {5, 5, 0}},
                              {"E", {3, 3, 3}}});
  const auto b = report_with({{"A", {10, 10, 8}},
                              {"B", {4, 4, 2}},
                              {"C", {2, 2, 1}},
                              {"D", {5, 5, 5}},
                              {"E", {3, 3, 2}},
                              {"F", {0, 0, 0}}});
  const auto rank = eval::label_diff_ranking(a, b);
  REQUIRE(rank.all.size() == 5);
  std::vector<std::string> order;
  for (const auto& d : rank.all) order.push_back(d.label);
  CHECK(order == std::vector<std::string>{"D", "A", "C", "E", "B"});
  CHECK(rank.all[0].diff == doctest::Approx(100.0));
  CHECK(rank.all[1].diff == doctest::Approx(30.0));
  CHECK(rank.all[2].diff == 0.0);
  CHECK(rank.all[3].diff == doctest::Approx(200.0 / 3 - 100.0));
  CHECK(rank.all[4].diff == doctest::Approx(-50.0));
  REQUIRE(rank.positive.size() == 2);
  CHECK(rank.positive[0].label == "D");
  CHECK(rank.positive[1].label == "A");
  REQUIRE(rank.negative.size() == 2);
  CHECK(rank.negative[0].label == "B");
  CHECK(rank.negative[1].label == "E");

  const auto top1 = eval::label_diff_ranking(a, b, 1);
  CHECK(top1.positive.size() == 1);
  CHECK(top1.negative.size() == 1);

  const auto csv = eval::label_ranking_csv(rank);
  CHECK(csv.rfind("list,rank,label,f1_a,f1_b,diff\n", 0) == 0);
  CHECK(eval::label_ranking_svg(rank).find("</svg>") != std::string::npos);
}

TEST_CASE("label ranking edge cases") {
  const auto a = report_with({{"x", {3, 3, 2}}, {"y", {2, 2, 1}}, {"w", {1, 1, 0}}});
  const auto same = eval::label_diff_ranking(a, a);
  std::vector<std::string> names;
  for (const auto& d : same.all) {
    names.push_back(d.label);
    CHECK(d.diff == 0.0);
  }
  CHECK(names == std::vector<std::string>{"w", "x", "y"});
  CHECK(same.positive.empty());
  CHECK(same.negative.empty());

  // A label that goes from 0 to 100 tops the positive list.
  const auto before = report_with({{"x", {3, 3, 2}}, {"z", {2, 2, 0}}});
  const auto after = report_with({{"x", {3, 3, 3}}, {"z", {2, 2, 2}}});
  const auto up = eval::label_diff_ranking(before, after);
  REQUIRE_FALSE(up.positive.empty());
  CHECK(up.positive[0].label == "z");
  CHECK(up.positive[0].diff == 100.0);

  const auto only_x = report_with({{"x", {1, 1, 1}}});
  const auto only_y = report_with({{"y", {1, 1, 1}}});
  CHECK(code_of([&] { eval::label_diff_ranking(only_x, only_y); }) == ErrorCode::kValidation);
  CHECK(eval::label_f1({4, 0, 0}) == 0.0);
}

TEST_CASE("label ranking from real reports") {
  const auto gold = data::read_conllu(fixture("eval/gold3.conllu"));
  const auto pred = data::read_conllu(fixture("eval/pred3.conllu"));
  const auto worse = eval::build_report(eval::Task::kDep, "eval", 0, gold, pred);
  const auto better = eval::build_report(eval::Task::kDep, "eval", 0, gold, gold);
  const auto rank = eval::label_diff_ranking(worse, better);
  for (const auto& d : rank.all) CHECK(d.diff >= 0.0);
  // det: gold 2, predicted 1, correct 1 in the worse run.
  auto det = std::find_if(rank.all.begin(), rank.all.end(),
                          [](const auto& d) { return d.label == "det"; });
  REQUIRE(det != rank.all.end());
  CHECK(det->f1_a == doctest::Approx(100.0 * 2 / 3));
  CHECK(det->f1_b == 100.0);
}

TEST_CASE("attention heat map") {
  const std::vector<double> w = {0.2, 0.8, 0.6, 0.4};
  const std::vector<std::string> labels = {"a<b", "c"};
  const auto svg = eval::attention_svg(w, 2, labels);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&lt;b") != std::string::npos);
}
