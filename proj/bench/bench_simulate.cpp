#include <benchmark/benchmark.h>

#include "mflq/control.hpp"
#include "mflq/simulator.hpp"

namespace {

using namespace mflq;

struct Setup {
  ProblemData p;
  ControlLaw law;
};

// Scalar benchmark problem under the stationary decentralized law.
const Setup& setup() {
  static const Setup s = [] {
    ProblemConfig c;
    auto m = [](double v) { return Matrix::Constant(1, 1, v); };
    auto v = [](double x) { return Signal::constant(Vector::Constant(1, x)); };
    c.A = m(0.8);
    c.B = m(1);
    c.G = m(-0.2);
    c.Q = m(-0.1);
    c.R = m(1);
    c.Gamma = m(0.2);
    c.rho = 0.6;
    c.f = v(1);
    c.sigma = v(0.2);
    c.eta = v(5);
    c.init_mean = Vector::Constant(1, 5);
    c.init_cov = m(0.3);
    Setup out{build_problem(c), {}};
    const auto P = solve_are_P(out.p);
    const auto Pi = solve_are_Pi(out.p);
    const auto mf = solve_mean_field_path(out.p, Pi, solve_offset_infinite(out.p, Pi), 20.0, 2000);
    out.law = decentralized_law_infinite(out.p, P, Pi, mf);
    return out;
  }();
  return s;
}

SimulationConfig config(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.N = static_cast<std::size_t>(state.range(0));
  cfg.T = 20.0;
  cfg.M = 2000;
  cfg.replications = 32;
  cfg.seed = 1;
  return cfg;
}

void BM_SimulateSerial(benchmark::State& state) {
  const Setup& s = setup();
  const SimulationConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(s.p, s.law, cfg).j_soc_mean);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.N * cfg.M * cfg.replications));
}

void BM_SimulateParallel(benchmark::State& state) {
  const Setup& s = setup();
  const SimulationConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(s.p, s.law, cfg).j_soc_mean);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.N * cfg.M * cfg.replications));
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(10)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SimulateParallel)->Arg(10)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
