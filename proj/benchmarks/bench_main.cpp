// Microbenchmarks for the per-tick costs that drive controller selection:
// flow integration workloads (plain, with sensitivity, with push-forwards),
// full controller evaluations on both plants, and the two solver kernels
// (dense active-set projection vs. the closed-form interpolation weight).

#include "safectrl/controllers.hpp"
#include "safectrl/integrate.hpp"
#include "safectrl/models.hpp"
#include "safectrl/qp.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace safectrl;

const ModelBundle& di() {
  static const ModelBundle bundle = make_double_integrator();
  return bundle;
}

const ModelBundle& aircraft() {
  static const ModelBundle bundle = make_aircraft();
  return bundle;
}

StateVec di_state() {
  StateVec x(2);
  x << -1.0, 0.5;  // approaching the boundary with the filters engaged
  return x;
}

StateVec aircraft_state_mid() {
  StateVec x(8);
  // Mid-approach: rolled toward the boundary, 4 km out, at the hold altitude.
  x << 0.3, 0.0, 0.2, 8000.0, 500.0, 10000.0, 0.0, 1.1;
  return x;
}

// ---------------------------------------------------------------------------
// Flow integration workloads over the default horizon (aircraft: 20 s, 40
// nodes). The three variants integrate n, n + n^2, and 3n scalar ODEs.
// ---------------------------------------------------------------------------

void BM_AircraftFlow(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        integrate_flow(aircraft().model, aircraft().backup, x,
                       aircraft().default_grid));
  }
}
BENCHMARK(BM_AircraftFlow);

void BM_AircraftFlowWithSensitivity(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        integrate_sensitivity(aircraft().model, aircraft().backup, x,
                              aircraft().default_grid));
  }
}
BENCHMARK(BM_AircraftFlowWithSensitivity);

void BM_AircraftFlowWithPushForward(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        integrate_push_forward(aircraft().model, aircraft().backup,
                               aircraft().primary, x,
                               aircraft().default_grid));
  }
}
BENCHMARK(BM_AircraftFlowWithPushForward);

// ---------------------------------------------------------------------------
// Full controller evaluations (one control tick).
// ---------------------------------------------------------------------------

void BM_OiStepDoubleIntegrator(benchmark::State& state) {
  const StateVec x = di_state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(oi_controller(di().safety, di().model,
                                           di().primary, di().backup,
                                           di().default_grid, x));
  }
}
BENCHMARK(BM_OiStepDoubleIntegrator);

void BM_BcbfQpStepDoubleIntegrator(benchmark::State& state) {
  const StateVec x = di_state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bcbf_qp_controller(di().safety, di().model,
                                                di().primary, di().backup,
                                                di().default_grid, x));
  }
}
BENCHMARK(BM_BcbfQpStepDoubleIntegrator);

void BM_OiStepAircraft(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        oi_controller(aircraft().safety, aircraft().model, aircraft().primary,
                      aircraft().backup, aircraft().default_grid, x));
  }
}
BENCHMARK(BM_OiStepAircraft);

void BM_BcbfQpStepAircraft(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bcbf_qp_controller(aircraft().safety, aircraft().model,
                           aircraft().primary, aircraft().backup,
                           aircraft().default_grid, x));
  }
}
BENCHMARK(BM_BcbfQpStepAircraft);

void BM_BlendedStepAircraft(benchmark::State& state) {
  const StateVec x = aircraft_state_mid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        blended_controller(aircraft().safety, aircraft().model,
                           aircraft().primary, aircraft().backup,
                           aircraft().default_grid, 50.0, x));
  }
}
BENCHMARK(BM_BlendedStepAircraft);

// ---------------------------------------------------------------------------
// Solver kernels in isolation, on rows representative of the aircraft
// horizon (41 flow rows + terminal row; inputs in R^2).
// ---------------------------------------------------------------------------

void BM_ClosedFormWeight(benchmark::State& state) {
  const FlowBundle flow =
      integrate_push_forward(aircraft().model, aircraft().backup,
                             aircraft().primary, aircraft_state_mid(),
                             aircraft().default_grid);
  const ConstraintCoeffs coeffs = oi_coefficients(aircraft().safety, flow);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oi_mu_star(coeffs));
  }
}
BENCHMARK(BM_ClosedFormWeight);

void BM_ActiveSetProjection(benchmark::State& state) {
  const FlowBundle flow =
      integrate_sensitivity(aircraft().model, aircraft().backup,
                            aircraft_state_mid(), aircraft().default_grid);
  const LinearConstraintSet rows =
      bcbf_constraint_rows(aircraft().safety, aircraft().model, flow);
  const ControlVec target = aircraft().primary(aircraft_state_mid());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_box_qp(rows, aircraft().model.input_box, target));
  }
}
BENCHMARK(BM_ActiveSetProjection);

}  // namespace

BENCHMARK_MAIN();
