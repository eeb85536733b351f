#pragma once

#include "safectrl/controllers.hpp"
#include "safectrl/models.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace safectrl {

// Which control law drives the closed loop.
enum class ControllerKind {
  Nominal,    // primary law, no safety filtering
  Backup,     // backup law everywhere
  CbfFilter,  // closed-form filter on h alone
  BcbfQp,     // projection onto the flow-row system
  Blended,    // exponential mix driven by the flow margin
  Oi,         // closed-form interpolation along the segment
};

const char* to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

// Closed-loop run description: zero-order hold at dt_ctrl, plant integrated
// with RK4 substeps of dt_plant, flow horizon `grid` for the safe laws.
struct SimConfig {
  ControllerKind controller = ControllerKind::Oi;
  double t_final = 10.0;
  double dt_ctrl = 0.005;
  double dt_plant = 0.005;
  double eta = 1.0;  // blending decay rate (Blended only)
  StateVec x0;
  HorizonGrid grid;
};

// Throws ValidationError on inconsistent timing, dimensions, or parameters.
void validate_sim_config(const ModelBundle& bundle, const SimConfig& config);

// One control tick: the state seen by the controller, the held input, and
// the controller's own diagnostics. `wall_us` times the controller call.
struct LogRow {
  double t = 0.0;
  StateVec x;
  ControlVec u;
  std::optional<double> mu;
  double h = 0.0;
  double h_b = 0.0;
  ControllerOutput::Diagnostics diagnostics;
  double wall_us = 0.0;
};

struct TrajectoryLog {
  int state_dim = 0;
  int input_dim = 0;
  std::vector<LogRow> rows;
  bool aborted = false;        // numerical failure cut the run short
  std::string abort_reason;    // empty unless aborted
};

// Runs the closed loop. Rows cover t = 0, dt_ctrl, ..., t_final (the final
// row records a controller evaluation that is never applied). A numerical
// failure aborts with the partial log instead of throwing.
TrajectoryLog simulate(const ModelBundle& bundle, const SimConfig& config);

struct Metrics {
  double min_h = 0.0;
  double min_h_b_terminal = 0.0;  // NaN when no row carries the flow margin
  int input_violations = 0;       // rows with u outside the box, zero tolerance
  std::vector<int> u_sign_reversals;  // per input channel
  int mu_switch_count = 0;            // mu crossings of 0.5
  double mean_step_wall_us = 0.0;
  double max_step_wall_us = 0.0;
  int ode_scalars_per_step = 0;  // largest per-tick integration workload
  int kkt_failures = 0;          // ticks whose optimality certificate failed
  int out_of_domain_steps = 0;   // ticks flagged outside the feasible domain
};

// Throws ValidationError on an empty log.
Metrics compute_metrics(const TrajectoryLog& log, const InputBox& box);

// Side-by-side runs of several controllers from one initial condition.
struct NamedConfig {
  std::string name;
  SimConfig config;
};

struct ComparisonReport {
  std::vector<std::string> names;
  std::vector<TrajectoryLog> logs;
  std::vector<Metrics> metrics;
  Matrix pairwise_deviation;  // max-norm state gap per run pair
  double max_deviation = 0.0;
};

// Requires matching x0, t_final, and dt_ctrl across the configs so rows align.
ComparisonReport compare_controllers(const ModelBundle& bundle,
                                     const std::vector<NamedConfig>& configs);

// Writes `t,x0..x{n-1},u0..u{m-1},mu,h,h_b,h_I,binding_index,status,
// step_wall_us` with 17 significant digits, C locale, atomically
// (temp file + rename). Missing reals print as nan, missing indices as -1.
void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryLog& log);

}  // namespace safectrl
