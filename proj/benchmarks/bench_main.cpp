#include <benchmark/benchmark.h>

#include "mipnn/data.hpp"
#include "mipnn/mip.hpp"
#include "mipnn/network.hpp"
#include "mipnn/oracle.hpp"
#include "mipnn/rng.hpp"
#include "mipnn/solve.hpp"

namespace {

mipnn::IntegerNetwork random_net(const std::vector<int>& arch, int p,
                                 uint64_t seed) {
  mipnn::Rng rng = mipnn::Rng::stream(seed, 0xbe);
  std::vector<std::vector<std::vector<int>>> w;
  std::vector<std::vector<int>> b;
  for (size_t l = 1; l < arch.size(); ++l) {
    std::vector<std::vector<int>> wl(arch[l - 1], std::vector<int>(arch[l]));
    std::vector<int> bl(arch[l]);
    for (auto& row : wl) {
      for (int& v : row) v = static_cast<int>(rng.below(2 * p + 1)) - p;
    }
    for (int& v : bl) v = static_cast<int>(rng.below(2 * p + 1)) - p;
    w.push_back(std::move(wl));
    b.push_back(std::move(bl));
  }
  return mipnn::IntegerNetwork(arch, p, std::move(w), std::move(b));
}

void BM_forward(benchmark::State& state) {
  const std::vector<int> arch = {107, 16, 2};
  mipnn::IntegerNetwork net = random_net(arch, 1, 3);
  mipnn::Rng rng = mipnn::Rng::stream(4, 0);
  std::vector<double> x(107);
  for (double& v : x) v = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mipnn::forward(net, x));
  }
}
BENCHMARK(BM_forward);

void BM_build_base(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  mipnn::EncodedDataset data = mipnn::make_random_grid_dataset(n, 16, 2, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mipnn::build_base(data, {16, 16, 2}, 1));
  }
}
BENCHMARK(BM_build_base)->Arg(20)->Arg(80);

void BM_solve_tiny_sat_margin(benchmark::State& state) {
  mipnn::EncodedDataset data = mipnn::make_random_grid_dataset(3, 2, 2, 11);
  for (auto _ : state) {
    mipnn::BuildResult built = mipnn::build_base(data, {2, 2, 2}, 1);
    mipnn::attach_sat_margin(built.model, built.varmap, data.labels, 0.5);
    mipnn::SolveParams params;
    params.time_limit_s = 60.0;
    benchmark::DoNotOptimize(mipnn::solve_builtin(built.model, params));
  }
}
BENCHMARK(BM_solve_tiny_sat_margin);

void BM_oracle_tiny(benchmark::State& state) {
  mipnn::EncodedDataset data = mipnn::make_random_grid_dataset(3, 2, 2, 11);
  mipnn::OracleProblem problem;
  problem.arch = {2, 2, 2};
  problem.objective = mipnn::ObjectiveKind::SatMargin;
  problem.pwl = mipnn::PwlSpec::uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mipnn::enumerate_optimum(problem, data));
  }
}
BENCHMARK(BM_oracle_tiny);

void BM_pwl_evaluate(benchmark::State& state) {
  mipnn::PwlSpec pwl = mipnn::PwlSpec::uniform();
  double z = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pwl.evaluate(z));
    z += 0.001;
    if (z > 2.0) z = -2.0;
  }
}
BENCHMARK(BM_pwl_evaluate);

}  // namespace

BENCHMARK_MAIN();
