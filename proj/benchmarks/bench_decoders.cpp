#include <benchmark/benchmark.h>

#include <vector>

#include "structpred/autodiff/tensor.hpp"
#include "structpred/parser/graph.hpp"
#include "structpred/parser/mst.hpp"
#include "structpred/parser/tree.hpp"
#include "structpred/rng.hpp"
#include "structpred/tagger/crf.hpp"

using namespace structpred;

namespace {

std::vector<double> random_scores(std::size_t nodes, Rng& rng) {
  std::vector<double> s(nodes * nodes);
  for (auto& x : s) x = rng.uniform(-2, 2);
  return s;
}

parser::ScorePack random_pack(std::size_t n, std::size_t m, Rng& rng) {
  parser::ScorePack p;
  p.nodes = n + 1;
  p.labels = m;
  p.arc = random_scores(n + 1, rng);
  p.rel.resize(m * (n + 1) * (n + 1));
  for (auto& x : p.rel) x = rng.uniform(-2, 2);
  p.mask();
  return p;
}

}  // namespace

static void BM_ChuLiuEdmonds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto scores = random_scores(n + 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(parser::chu_liu_edmonds(scores, n + 1));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ChuLiuEdmonds)->RangeMultiplier(2)->Range(8, 128)->Complexity();

static void BM_DecodeTree(benchmark::State& state) {
  Rng rng(2);
  const auto pack = random_pack(static_cast<std::size_t>(state.range(0)), 40, rng);
  for (auto _ : state) benchmark::DoNotOptimize(parser::decode_tree(pack));
}
BENCHMARK(BM_DecodeTree)->Arg(25)->Arg(50);

static void BM_DecodeGraph(benchmark::State& state) {
  Rng rng(3);
  const auto pack = random_pack(static_cast<std::size_t>(state.range(0)), 40, rng);
  for (auto _ : state) benchmark::DoNotOptimize(parser::decode_graph(pack));
}
BENCHMARK(BM_DecodeGraph)->Arg(25)->Arg(50);

static void BM_CrfForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t t = 45;
  Rng rng(4);
  std::vector<double> em(n * t), tr((t + 2) * (t + 2));
  for (auto& x : em) x = rng.uniform(-2, 2);
  for (auto& x : tr) x = rng.uniform(-2, 2);
  const auto e = ad::Tensor<double>::from({n, t}, em);
  const auto m = ad::Tensor<double>::from({t + 2, t + 2}, tr);
  for (auto _ : state) benchmark::DoNotOptimize(tagger::crf_log_partition(e, m).item());
}
BENCHMARK(BM_CrfForward)->Arg(25)->Arg(50);

static void BM_Viterbi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t t = 45;
  Rng rng(5);
  std::vector<double> em(n * t), tr((t + 2) * (t + 2));
  for (auto& x : em) x = rng.uniform(-2, 2);
  for (auto& x : tr) x = rng.uniform(-2, 2);
  const auto e = ad::Tensor<double>::from({n, t}, em);
  const auto m = ad::Tensor<double>::from({t + 2, t + 2}, tr);
  for (auto _ : state) benchmark::DoNotOptimize(tagger::viterbi(e, m));
}
BENCHMARK(BM_Viterbi)->Arg(25)->Arg(50);
