#include <benchmark/benchmark.h>

#include <random>

#include "repu/derivative_compiler.hpp"
#include "repu/estimators.hpp"
#include "repu/multipoly.hpp"
#include "repu/poly_compiler.hpp"
#include "repu/simbench.hpp"
#include "repu/training.hpp"

using namespace repu;

namespace {

MixedRepuNetwork bench_net(int d, int width, int depth, int p, int outputs = 1) {
  ArchSpec a;
  a.widths.assign(static_cast<size_t>(depth), width);
  a.p = p;
  return init_network(a, d, outputs, 1);
}

Eigen::MatrixXd uniform_rows(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  return Eigen::MatrixXd::NullaryExpr(n, d, [&] { return u(rng); });
}

void bm_forward(benchmark::State& st) {
  auto net = bench_net(2, static_cast<int>(st.range(0)), 3, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(forward(net, x));
}
BENCHMARK(bm_forward)->Arg(8)->Arg(32)->Arg(128);

void bm_forward_batch(benchmark::State& st) {
  auto net = bench_net(2, 32, 3, 2);
  Eigen::MatrixXd X = uniform_rows(256, 2, 2).transpose();
  for (auto _ : st) benchmark::DoNotOptimize(forward_batch(net, X));
  st.SetItemsProcessed(st.iterations() * 256);
}
BENCHMARK(bm_forward_batch);

void bm_backprop(benchmark::State& st) {
  auto net = bench_net(2, static_cast<int>(st.range(0)), 3, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(backprop(net, x));
}
BENCHMARK(bm_backprop)->Arg(8)->Arg(32)->Arg(128);

void bm_grad_loss_pdir(benchmark::State& st) {
  auto net = bench_net(2, 32, 3, 2);
  Dataset data;
  data.X = uniform_rows(static_cast<int>(st.range(0)), 2, 3);
  data.y = data.X.rowwise().sum();
  TrainConfig cfg;
  cfg.lambda = {5.5, 5.5};
  for (auto _ : st) benchmark::DoNotOptimize(grad_loss(LossKind::pdir, net, data, cfg));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(bm_grad_loss_pdir)->Arg(64)->Arg(256);

void bm_grad_loss_dsme(benchmark::State& st) {
  auto net = bench_net(2, 8, 1, 2, 2);
  Dataset data;
  data.X = uniform_rows(2000, 2, 4);
  TrainConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(grad_loss(LossKind::dsme, net, data, cfg));
}
BENCHMARK(bm_grad_loss_dsme);

void bm_compile_horner(benchmark::State& st) {
  std::mt19937_64 rng(5);
  auto poly = MultiPoly::random_dense(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), rng);
  CompileOptions opts;
  opts.verify_points = 0;
  for (auto _ : st) benchmark::DoNotOptimize(compile_horner(poly, 2, opts));
}
BENCHMARK(bm_compile_horner)->Args({1, 5})->Args({3, 5});

void bm_compile_mhaskar(benchmark::State& st) {
  std::mt19937_64 rng(6);
  auto poly = MultiPoly::random_dense(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), rng);
  CompileOptions opts;
  opts.verify_points = 0;
  for (auto _ : st) benchmark::DoNotOptimize(compile_mhaskar(poly, 2, opts));
}
BENCHMARK(bm_compile_mhaskar)->Args({1, 5})->Args({3, 5});

void bm_compile_partial(benchmark::State& st) {
  auto net = bench_net(3, static_cast<int>(st.range(0)), 3, 2);
  for (auto _ : st) benchmark::DoNotOptimize(compile_partial(net, 0));
}
BENCHMARK(bm_compile_partial)->Arg(8)->Arg(32);

void bm_block_build(benchmark::State& st) {
  auto data = generate(model_by_name("B-Polynomial"), static_cast<int>(st.range(0)), 7);
  for (auto _ : st) benchmark::DoNotOptimize(BlockEstimator(data));
}
BENCHMARK(bm_block_build)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_block_predict(benchmark::State& st) {
  auto data = generate(model_by_name("B-Polynomial"), 256, 7);
  BlockEstimator be(data);
  std::vector<double> x{0.43, 0.61};
  for (auto _ : st) benchmark::DoNotOptimize(be.predict(x));
}
BENCHMARK(bm_block_predict);

void bm_pava(benchmark::State& st) {
  auto data = generate(model_by_name("U-Wave"), static_cast<int>(st.range(0)), 8);
  std::vector<double> x(data.X.data(), data.X.data() + data.n()), y(data.y.data(), data.y.data() + data.n());
  for (auto _ : st) benchmark::DoNotOptimize(pava_fitted(x, y));
}
BENCHMARK(bm_pava)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
