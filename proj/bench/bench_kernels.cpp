#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "tcv/bench.hpp"
#include "tcv/dgp.hpp"
#include "tcv/estimators.hpp"
#include "tcv/parallel.hpp"

using namespace tcv;

namespace {

struct Line {
  std::vector<double> x, y, h;
};

Line nw_input(Index n) {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Line d;
  for (Index i = 0; i < n; ++i) {
    d.x.push_back(u(eng));
    d.y.push_back(100.0 * d.x.back() + z(eng));
  }
  d.h = bandwidth_grid(silverman_bandwidth(d.x), 30, 0.05, 20.0);
  return d;
}

void BM_nw_loo_serial(benchmark::State& state) {
  const Line d = nw_input(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nw_loo_scores_serial(d.x, d.y, d.h));
  state.SetComplexityN(state.range(0));
}

void BM_nw_loo_omp(benchmark::State& state) {
  const Line d = nw_input(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nw_loo_scores_omp(d.x, d.y, d.h));
  state.SetComplexityN(state.range(0));
}

RngSpec seed(std::uint64_t s) {
  RngSpec r;
  r.master_seed = s;
  return r;
}

void forest_fit(benchmark::State& state, Exec exec) {
  Sim3Config cfg;
  cfg.p = 1000;
  const Dataset d = make_sim3(cfg)->sample(100, seed(3));
  IndexList rows(static_cast<std::size_t>(d.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  ForestConfig fc;
  fc.n_trees = 200;
  fc.mtry = 32;
  fc.exec = exec;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(fc, d, rows, seed(4)));
}

void BM_forest_serial(benchmark::State& state) { forest_fit(state, Exec::serial); }
void BM_forest_omp(benchmark::State& state) { forest_fit(state, Exec::parallel); }

ExperimentSpec small_sim2() {
  ExperimentSpec spec;
  spec.name = "sim2";
  spec.dgp = make_sim2({});
  spec.n = 200;
  NwConfig nw;
  nw.column = 0;
  OlsConfig ols;
  ols.design = bind_terms(parse_terms({"1", "X"}), {"X"});
  spec.roster = {CandidateProcedure{0, "NW", nw, std::nullopt, 10},
                 CandidateProcedure{1, "Linear", ols, std::nullopt, 10}};
  const Region local = Region::where("X", 0, Region::Op::lt, 0.1);
  spec.selectors = {{"TCV_1", WeightFunction::piecewise(local, 1.0, 0.0)}};
  spec.plan.n1 = 100;
  spec.plan.K = 20;
  spec.eval.eval_n = 2000;
  spec.eval_region = local;
  spec.replications = 4;
  spec.rng = seed(5);
  return spec;
}

void BM_replications_serial(benchmark::State& state) {
  const ExperimentSpec spec = small_sim2();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec));
}

void BM_replications_omp(benchmark::State& state) {
  ExperimentSpec spec = small_sim2();
  spec.exec = Exec::parallel;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec));
}

}  // namespace

BENCHMARK(BM_nw_loo_serial)->RangeMultiplier(2)->Range(100, 800)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_nw_loo_omp)->RangeMultiplier(2)->Range(100, 800)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_forest_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forest_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_replications_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_replications_omp)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  set_thread_count(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
