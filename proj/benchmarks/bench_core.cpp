#include <benchmark/benchmark.h>

#include <vector>

#include "secsim/fit.hpp"
#include "secsim/powder.hpp"
#include "secsim/sec.hpp"
#include "secsim/spin.hpp"

using namespace secsim;

namespace {

const double mw_mhz = 9700.0;
const double b0_z = 335.197;

std::vector<double> time_grid(int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = 4.0 * i / (n - 1);
  return t;
}

void bm_eigenlevels(benchmark::State& state) {
  const spin_system sys;
  double theta = 0.0;
  for (auto _ : state) {
    theta += 1e-4;
    benchmark::DoNotOptimize(eigenlevels(build_hamiltonian(sys, 340.0, theta)));
  }
}
BENCHMARK(bm_eigenlevels);

void bm_transition_lines(benchmark::State& state) {
  const spin_system sys;
  double theta = 0.0;
  for (auto _ : state) {
    theta += 1e-4;
    benchmark::DoNotOptimize(transition_lines(sys, 340.0, theta));
  }
}
BENCHMARK(bm_transition_lines);

void bm_resonance_fields(benchmark::State& state) {
  const spin_system sys;
  for (auto _ : state)
    benchmark::DoNotOptimize(resonance_fields(sys, mw_mhz, 0.7));
}
BENCHMARK(bm_resonance_fields);

void bm_orientation_distribution(benchmark::State& state) {
  const spin_system sys;
  const int theta_points = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        compute_orientation_distribution(sys, mw_mhz, b0_z, 30.0, theta_points, 21));
  state.SetComplexityN(theta_points);
}
BENCHMARK(bm_orientation_distribution)->Arg(181)->Arg(361)->Arg(721)->Complexity();

void bm_echo_modulation(benchmark::State& state) {
  const spin_system sys;
  const auto dist = compute_orientation_distribution(sys, mw_mhz, b0_z, 30.0);
  const auto t = time_grid(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(echo_modulation(sys, sec_params{}, dist, 1.5e6, 2.0, t,
                                             field_geometry::perpendicular, b0_z));
}
BENCHMARK(bm_echo_modulation)->Arg(81)->Arg(201);

void bm_synthesizer_evaluate(benchmark::State& state) {
  const spin_system sys;
  const auto dist = compute_orientation_distribution(sys, mw_mhz, b0_z, 30.0);
  const echo_synthesizer synth(sys, dist, 1.5e6, field_geometry::perpendicular, b0_z);
  const auto t = time_grid(81);
  const sec_params sec;
  for (auto _ : state) benchmark::DoNotOptimize(synth.evaluate(sec, 2.0, t));
}
BENCHMARK(bm_synthesizer_evaluate);

void bm_objective_evaluation(benchmark::State& state) {
  const run_config cfg;
  const model_context ctx = make_model_context(cfg);
  const auto dist = compute_orientation_distribution(cfg.spin, mw_mhz, b0_z, 30.0);
  experimental_curve curve;
  curve.position_label = "Z";
  curve.geometry = field_geometry::parallel;
  curve.e_v_per_m = 1.5e6;
  curve.tau_us = 2.0;
  curve.t_e_us = time_grid(81);
  curve.echo = echo_modulation(cfg.spin, cfg.sec, dist, 1.5e6, 2.0, curve.t_e_us,
                               field_geometry::parallel, b0_z)
                   .in_phase;
  const curve_set_objective obj({curve}, ctx);
  sec_params probe;
  for (auto _ : state) {
    probe.kappa_hz_per_v_per_m = 0.5 + 1e-6 * state.iterations();
    benchmark::DoNotOptimize(obj(probe));
  }
}
BENCHMARK(bm_objective_evaluation);

void bm_edfs_spectrum(benchmark::State& state) {
  const spin_system sys;
  std::vector<double> grid(301);
  for (int i = 0; i < 301; ++i) grid[i] = 320.0 + 55.0 * i / 300.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(edfs_spectrum(sys, mw_mhz, grid, 5.0, 181, 9));
}
BENCHMARK(bm_edfs_spectrum);

}  // namespace

BENCHMARK_MAIN();
