// Microbenchmarks for the per-presentation hot path: single-sample forward
// and backward passes, the two-branch counterfactual decision at several
// store sizes, and the drift stream itself.

#include <benchmark/benchmark.h>

#include "homeostat/controller.hpp"
#include "homeostat/drift.hpp"
#include "homeostat/rng.hpp"

namespace hs = homeostat;

namespace {

hs::Vec random_image(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  hs::Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = unit(rng);
  return v;
}

void bm_forward_single(benchmark::State& state) {
  auto rng = hs::make_rng(1, 0);
  hs::Mlp net({784, 80, 60, 10}, rng);
  const hs::Vec img = random_image(784, rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(img));
}
BENCHMARK(bm_forward_single);

void bm_backward_single(benchmark::State& state) {
  auto rng = hs::make_rng(2, 0);
  hs::Mlp net({784, 80, 60, 10}, rng);
  hs::Batch one;
  one.images = random_image(784, rng);
  one.labels = {7};
  hs::Gradients grads = net.zero_gradients();
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.backward(one, grads));
  }
}
BENCHMARK(bm_backward_single);

void bm_sgd_step(benchmark::State& state) {
  auto rng = hs::make_rng(3, 0);
  hs::Mlp net({784, 80, 60, 10}, rng);
  hs::Batch one;
  one.images = random_image(784, rng);
  one.labels = {3};
  hs::Gradients grads = net.zero_gradients();
  net.backward(one, grads);
  for (auto _ : state) net.sgd_step(grads, 1e-9);
}
BENCHMARK(bm_sgd_step);

void bm_counterfactual_decide(benchmark::State& state) {
  auto rng = hs::make_rng(4, 0);
  hs::Mlp net({784, 80, 60, 10}, rng);
  const int store_n = static_cast<int>(state.range(0));
  auto hstate =
      hs::HomeostatState::make(hs::ControllerKind::Homeostatic, hs::LrPolicy{}, store_n, 1);
  std::uniform_int_distribution<int> cls(0, 9);
  for (int i = 0; i < store_n; ++i) hstate.store.push(random_image(784, rng), cls(rng));
  for (auto _ : state)
    benchmark::DoNotOptimize(hs::counterfactual_decide(net, hstate, 6));
}
BENCHMARK(bm_counterfactual_decide)->Arg(10)->Arg(50)->Arg(100);

void bm_drift_stream(benchmark::State& state) {
  auto data = hs::make_synthetic(1000, 5, 0.2);
  hs::DriftStream stream(data, hs::ShiftSchedule::constant(50, 1000), 9);
  for (auto _ : state) benchmark::DoNotOptimize(stream.next());
}
BENCHMARK(bm_drift_stream);

}  // namespace

BENCHMARK_MAIN();
