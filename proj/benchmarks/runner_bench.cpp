#include <benchmark/benchmark.h>

#include "earlystop/dsgd.hpp"
#include "earlystop/sgd.hpp"
#include "earlystop/svrg.hpp"

using namespace earlystop;

namespace {

EmpiricalMeasure cluster_dataset(std::size_t n, Eigen::Index dim, double spread,
                                 std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<Eigen::VectorXd> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) points.push_back(spread * rng.gaussian_vector(dim));
  return EmpiricalMeasure::uniform(std::move(points));
}

void BM_run_sgd(benchmark::State& state) {
  const EmpiricalMeasure data = cluster_dataset(32, 4, 0.05, 7);
  const LossFunction loss = quadratic_problem();
  const SgdConfig config{0.05, 5, 1e-3, 1'000'000};
  const Eigen::VectorXd x1 = Eigen::VectorXd::Ones(4);
  std::uint64_t trial = 0;
  for (auto _ : state) {
    const RunRecord r = run_sgd(FiniteSumObjective(loss, data), FiniteSumObjective(loss, data), x1,
                                config, BiasSpec{}, TrialRng(3, trial++));
    benchmark::DoNotOptimize(r.tau);
  }
}

void BM_run_dsgd_ring4(benchmark::State& state) {
  const EmpiricalMeasure data = cluster_dataset(32, 4, 0.05, 7);
  const LossFunction loss = quadratic_problem();
  const ConnectivityMatrix conn = make_topology(Topology::ring, 4, 0.5);
  const SgdConfig config{0.05, 5, 1e-3, 1'000'000};
  const Eigen::VectorXd x1 = Eigen::VectorXd::Ones(4);
  std::uint64_t trial = 0;
  for (auto _ : state) {
    const RunRecord r = run_dsgd(FiniteSumObjective(loss, data), FiniteSumObjective(loss, data),
                                 x1, conn, config, TrialRng(3, trial++));
    benchmark::DoNotOptimize(r.tau);
  }
}

void BM_run_svrg(benchmark::State& state) {
  const EmpiricalMeasure data = cluster_dataset(64, 4, 0.05, 7);
  const LossFunction loss = quadratic_problem();
  const SvrgHyperparams h = svrg_hyperparams(64, loss.smoothness_l);
  const SvrgConfig config{h.eta, h.m, 1e-4, 100'000, 0};
  const Eigen::VectorXd x1 = Eigen::VectorXd::Ones(4);
  std::uint64_t trial = 0;
  for (auto _ : state) {
    const RunRecord r = run_svrg(FiniteSumObjective(loss, data), x1, config, TrialRng(3, trial++));
    benchmark::DoNotOptimize(r.tau);
  }
}

}  // namespace

BENCHMARK(BM_run_sgd)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_run_dsgd_ring4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_run_svrg)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
