// Microbenchmarks for the hot paths: Hamiltonian assembly/diagonalization,
// kinetic propagation, the batched plan simulator, the fit residual, and the
// ESEEM FFT.
#include <cmath>
#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "odmr/echo_analysis.hpp"
#include "odmr/global_fit.hpp"
#include "odmr/presets.hpp"
#include "odmr/spin_hamiltonian.hpp"

using namespace odmr;

namespace {

SpinSystem dap_system() {
  SpinSystem sys;
  sys.zfs.d_mhz = 1390.5;
  sys.zfs.e_mhz = -84.9;
  NucleusSpec nuc;
  nuc.hyperfine = {-0.79, -0.99, 23.0};
  nuc.quadrupole = {0.99, -2.2, 1.2};
  sys.nuclei = {nuc, nuc};
  return sys;
}

struct PlanFixture {
  fit::FitParameterSet truth;
  kinetics::OpticalParams op;
  pulse::SequenceTimings timings;
  std::vector<pulse::MeasurementSpec> specs;

  explicit PlanFixture(int n_points) {
    truth.kinetic = presets::by_name("DAP-fig4c").kinetic;
    op.pump_rate = 2e6;
    timings.laser_s = 1e-4;
    std::vector<double> grid(n_points);
    for (int i = 0; i < n_points; ++i)
      grid[i] = 1e-7 * std::pow(5e-4 / 1e-7, double(i) / (n_points - 1));
    specs = pulse::generate_plan(grid, timings.readout_delay_s);
  }
};

}  // namespace

static void BM_BuildDiagonalize27(benchmark::State& state) {
  const SpinSystem sys = dap_system();
  for (auto _ : state) {
    const auto sol = spinham::diagonalize(spinham::build_hamiltonian(sys));
    benchmark::DoNotOptimize(sol.energies);
  }
}
BENCHMARK(BM_BuildDiagonalize27);

static void BM_TransitionLines27(benchmark::State& state) {
  const SpinSystem sys = dap_system();
  const auto sol = spinham::diagonalize(spinham::build_hamiltonian(sys));
  for (auto _ : state) {
    const auto lines = spinham::transition_lines(sol, sys);
    benchmark::DoNotOptimize(lines.size());
  }
}
BENCHMARK(BM_TransitionLines27);

static void BM_Evolve(benchmark::State& state) {
  const auto kp = presets::by_name("DAP-fig4c").kinetic;
  kinetics::OpticalParams op;
  op.pump_rate = 5e5;
  const auto r = kinetics::rate_matrix(kp, op, true);
  auto sv = kinetics::StateVector::ground(op.mode);
  for (auto _ : state) {
    const auto evolved = kinetics::evolve(sv, r, 1e-5);
    benchmark::DoNotOptimize(evolved.p);
  }
}
BENCHMARK(BM_Evolve);

static void BM_PlanSimulator22(benchmark::State& state) {
  const PlanFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const pulse::PlanSimulator sim(f.truth.kinetic, f.op, f.timings);
    double acc = 0.0;
    for (const auto& spec : f.specs)
      for (double v : sim.simulate(spec)) acc += v;
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_PlanSimulator22)->Arg(100)->Arg(1500);

static void BM_ResidualEval(benchmark::State& state) {
  const PlanFixture f(200);
  const auto data =
      fit::synthesize_curves(f.truth, f.specs, f.op, f.timings, 0.01, 1);
  for (auto _ : state) {
    const Eigen::VectorXd r = fit::residuals(f.truth, data, f.op, f.timings);
    benchmark::DoNotOptimize(r.sum());
  }
}
BENCHMARK(BM_ResidualEval);

static void BM_FftSpectrum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> tau(n), x(n);
  for (int i = 0; i < n; ++i) {
    tau[i] = 15.625e-9 * (i + 1);
    x[i] = std::cos(2.0 * std::numbers::pi * 3.19e6 * 2.0 * tau[i]);
  }
  for (auto _ : state) {
    const auto spec = echo::fft_spectrum(x, tau);
    benchmark::DoNotOptimize(spec.magnitude.data());
  }
}
BENCHMARK(BM_FftSpectrum)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
