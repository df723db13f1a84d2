#include <benchmark/benchmark.h>

#include "fas/control.hpp"
#include "fas/dynamics.hpp"
#include "fas/measures.hpp"
#include "fas/spectral.hpp"

using namespace fas;

static void BM_DstRoundTrip(benchmark::State& state) {
  int K = static_cast<int>(state.range(0));
  SineBasis basis(K);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(K, 2);
  for (auto _ : state) {
    Eigen::MatrixXd y = basis.idst(basis.dst(x));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * K * 2);
}
BENCHMARK(BM_DstRoundTrip)->Arg(32)->Arg(100)->Arg(1000);

static void BM_ControlForward(benchmark::State& state) {
  int K = 100;
  int B = static_cast<int>(state.range(0));
  Grid grid(K);
  ControlArch arch;
  arch.channels = 2;
  arch.n_layers = 2;
  arch.n_modes = 8;
  arch.width = 32;
  arch.embed_dim = 128;
  ControlParams params = ControlNet::init(arch, 1);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(K, 2 * B);
  std::vector<double> ts(B, 0.5);
  for (auto _ : state) {
    Eigen::MatrixXd u = ControlNet::forward(params, X, B, grid, ts);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * B);
}
BENCHMARK(BM_ControlForward)->Arg(1)->Arg(64)->Arg(256);

static void BM_Simulate(benchmark::State& state) {
  int K = 100;
  EigenSystem eig = EigenSystem::build(K, 1.0, 1e-2, 1.0);
  NoiseSchedule sched = NoiseSchedule::geometric(0.1, 10.0, 0.1);
  Grid grid(K);
  Eigen::VectorXd A(2), B(2);
  A << -0.558, 1.442;
  B << 0.624, 0.028;
  ReferencePath x0 = reference_path(A, B, grid);
  ControlArch arch;
  arch.channels = 2;
  arch.n_layers = 2;
  arch.n_modes = 8;
  arch.width = 32;
  arch.embed_dim = 128;
  ControlParams params = ControlNet::init(arch, 1);
  SimOptions so;
  so.n_steps = 100;
  so.batch = static_cast<int>(state.range(0));
  so.seed = 5;
  for (auto _ : state) {
    SimResult r = simulate(params, sched, eig, x0, so);
    benchmark::DoNotOptimize(r.terminal_modes.data());
  }
  state.SetItemsProcessed(state.iterations() * so.batch);
}
BENCHMARK(BM_Simulate)->Arg(16)->Arg(64);

static void BM_LogRnd(benchmark::State& state) {
  int K = static_cast<int>(state.range(0));
  EigenSystem eig = EigenSystem::build(K, 1.0, 1e-2, 1.0);
  NoiseSchedule sched = NoiseSchedule::geometric(0.1, 10.0, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(K, 2);
  for (auto _ : state) {
    double v = measures::log_rnd(r, sched, eig, 1.0);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_LogRnd)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
