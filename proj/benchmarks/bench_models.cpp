#include <benchmark/benchmark.h>

#include <vector>

#include "structpred/autodiff/nn.hpp"
#include "structpred/autodiff/ops.hpp"
#include "structpred/parser/biaffine.hpp"
#include "structpred/rng.hpp"

using namespace structpred;

namespace {

template <ad::Real T>
ad::Tensor<T> random_tensor(ad::Shape shape, Rng& rng, bool grad = false) {
  std::vector<T> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1, 1));
  return ad::Tensor<T>::from(std::move(shape), std::move(v), grad);
}

}  // namespace

template <ad::Real T>
static void BM_BiaffineArc(benchmark::State& state) {
  const auto nodes = static_cast<std::size_t>(state.range(0)) + 1;
  const std::size_t k = 500;
  Rng rng(1);
  const auto h = random_tensor<T>({nodes, k}, rng), d = random_tensor<T>({nodes, k}, rng);
  const auto u = random_tensor<T>({k, k + 1}, rng);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(parser::biaffine_arc_scores(h, d, u));
}
BENCHMARK(BM_BiaffineArc<float>)->Arg(25)->Arg(50);
BENCHMARK(BM_BiaffineArc<double>)->Arg(25);

template <ad::Real T>
static void BM_BiaffineRel(benchmark::State& state) {
  const auto nodes = static_cast<std::size_t>(state.range(0)) + 1;
  const std::size_t l = 100, m = 40;
  Rng rng(2);
  const auto h = random_tensor<T>({nodes, l}, rng), d = random_tensor<T>({nodes, l}, rng);
  const auto u = random_tensor<T>({m, l, l + 1}, rng);
  const auto v = random_tensor<T>({2 * l + 1, m}, rng);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(parser::biaffine_rel_scores(h, d, u, v));
}
BENCHMARK(BM_BiaffineRel<float>)->Arg(25);
BENCHMARK(BM_BiaffineRel<double>)->Arg(25);

template <ad::Real T>
static void BM_BiLstmForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t in = 200, hidden = 128;
  Rng rng(3);
  ad::ParameterStore<T> store;
  ad::StackedBiLstm<T> lstm(store, "bench", {in, 2 * hidden}, hidden, rng);
  const auto x = random_tensor<T>({n, in}, rng);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(lstm.forward(x, std::nullopt, {}, false, rng));
}
BENCHMARK(BM_BiLstmForward<float>)->Arg(25)->Arg(50);
BENCHMARK(BM_BiLstmForward<double>)->Arg(25);

template <ad::Real T>
static void BM_BiLstmBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t in = 200, hidden = 128;
  Rng rng(4);
  ad::ParameterStore<T> store;
  ad::StackedBiLstm<T> lstm(store, "bench", {in, 2 * hidden}, hidden, rng);
  const auto x = random_tensor<T>({n, in}, rng);
  for (auto _ : state) {
    auto loss = ad::sum(lstm.forward(x, std::nullopt, {}, false, rng));
    loss.backward();
    store.zero_grad();
  }
}
BENCHMARK(BM_BiLstmBackward<float>)->Arg(25);
BENCHMARK(BM_BiLstmBackward<double>)->Arg(25);
