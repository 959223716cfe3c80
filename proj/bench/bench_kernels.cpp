// Reference (serial loops) vs parallel (Eigen GEMM + OpenMP) dense kernels,
// plus a full actor-sized forward/backward pass.

#include <random>

#include <benchmark/benchmark.h>

#include "pbrl/neural/mlp.hpp"

using namespace pbrl::neural;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

template <Backend B>
void dense_forward(benchmark::State& state) {
  const auto width = state.range(0), batch = state.range(1);
  const Matrix w = random_matrix(width, width, 1);
  const Vector b = random_matrix(width, 1, 2);
  const Matrix x = random_matrix(width, batch, 3);
  Matrix z, a;
  for (auto _ : state) {
    kernels::dense_forward(B, w, b, Activation::kRelu, x, z, a);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(state.iterations() * width * width * batch);
}

template <Backend B>
void dense_backward(benchmark::State& state) {
  const auto width = state.range(0), batch = state.range(1);
  const Matrix w = random_matrix(width, width, 1);
  const Vector b = random_matrix(width, 1, 2);
  const Matrix x = random_matrix(width, batch, 3);
  const Matrix da = random_matrix(width, batch, 4);
  Matrix z, a, dw, dx;
  Vector db;
  kernels::dense_forward(B, w, b, Activation::kRelu, x, z, a);
  for (auto _ : state) {
    kernels::dense_backward(B, w, Activation::kRelu, x, z, a, da, dw, db, &dx);
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * width * width * batch);
}

template <Backend B>
void actor_pass(benchmark::State& state) {
  const auto width = state.range(0);
  std::mt19937_64 rng(7);
  const LayerSpec layers[] = {{width, Activation::kRelu}, {width, Activation::kRelu}, {1, Activation::kTanh}};
  const auto net = Mlp::create(10, layers, rng);
  const Matrix x = random_matrix(10, 64, 5);
  const Matrix dy = random_matrix(1, 64, 6);
  ForwardCache cache;
  MlpGrads grads;
  for (auto _ : state) {
    forward(net, x, cache, B);
    backward(net, cache, dy, grads, nullptr, B);
    benchmark::DoNotOptimize(grads.weights.front().data());
  }
}

}  // namespace

BENCHMARK(dense_forward<Backend::kReference>)->Args({64, 64})->Args({256, 64})->Args({256, 1024});
BENCHMARK(dense_forward<Backend::kParallel>)->Args({64, 64})->Args({256, 64})->Args({256, 1024});
BENCHMARK(dense_backward<Backend::kReference>)->Args({64, 64})->Args({256, 64})->Args({256, 1024});
BENCHMARK(dense_backward<Backend::kParallel>)->Args({64, 64})->Args({256, 64})->Args({256, 1024});
BENCHMARK(actor_pass<Backend::kReference>)->Arg(64)->Arg(256);
BENCHMARK(actor_pass<Backend::kParallel>)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
