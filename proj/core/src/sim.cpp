#include "safectrl/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <system_error>

namespace safectrl {

namespace {

// Relative slack when checking that one period is an integer multiple of
// another; absorbs decimal values that are not exactly representable.
constexpr double kDivisibilityTol = 1e-6;

long long checked_step_count(double total, double step, const char* what) {
  const long long count = std::llround(total / step);
  if (count < 0 ||
      std::abs(static_cast<double>(count) * step - total) >
          kDivisibilityTol * std::max(1.0, std::abs(total))) {
    throw ValidationError(std::string("sim config: ") + what);
  }
  return count;
}

bool needs_flow_horizon(ControllerKind kind) {
  return kind == ControllerKind::BcbfQp || kind == ControllerKind::Blended ||
         kind == ControllerKind::Oi;
}

ControllerOutput eval_controller(const ModelBundle& bundle,
                                 const SimConfig& config, const StateVec& x) {
  switch (config.controller) {
    case ControllerKind::Nominal: {
      ControllerOutput out;
      out.u = box_project(bundle.model.input_box, bundle.primary(x));
      return out;
    }
    case ControllerKind::Backup: {
      ControllerOutput out;
      out.u = box_project(bundle.model.input_box, bundle.backup(x));
      return out;
    }
    case ControllerKind::CbfFilter:
      return cbf_filter_closed_form(bundle.safety, bundle.model,
                                    bundle.primary, x);
    case ControllerKind::BcbfQp:
      return bcbf_qp_controller(bundle.safety, bundle.model, bundle.primary,
                                bundle.backup, config.grid, x);
    case ControllerKind::Blended:
      return blended_controller(bundle.safety, bundle.model, bundle.primary,
                                bundle.backup, config.grid, config.eta, x);
    case ControllerKind::Oi:
      return oi_controller(bundle.safety, bundle.model, bundle.primary,
                           bundle.backup, config.grid, x);
  }
  throw ValidationError("sim config: unknown controller kind");
}

// Advances the plant by dt_ctrl under a frozen input, reusing the flow
// integrator (and its divergence checks) with a constant control law.
StateVec hold_and_integrate(const ControlAffineModel& model, const StateVec& x,
                            const ControlVec& u, double dt_ctrl,
                            double dt_plant) {
  const ControllerFn held{[&u](const StateVec&) { return u; }, "held"};
  const HorizonGrid hold_grid{dt_ctrl, 1, dt_plant};
  return integrate_flow(model, held, x, hold_grid).phi.back();
}

void append_real(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Nominal: return "nominal";
    case ControllerKind::Backup: return "backup";
    case ControllerKind::CbfFilter: return "cbf";
    case ControllerKind::BcbfQp: return "bcbf_qp";
    case ControllerKind::Blended: return "blended";
    case ControllerKind::Oi: return "oi";
  }
  return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& name) {
  if (name == "nominal") return ControllerKind::Nominal;
  if (name == "backup") return ControllerKind::Backup;
  if (name == "cbf") return ControllerKind::CbfFilter;
  if (name == "bcbf_qp") return ControllerKind::BcbfQp;
  if (name == "blended") return ControllerKind::Blended;
  if (name == "oi") return ControllerKind::Oi;
  throw ValidationError("unknown controller '" + name + "'");
}

void validate_sim_config(const ModelBundle& bundle, const SimConfig& config) {
  if (!(config.t_final >= 0.0) || !std::isfinite(config.t_final)) {
    throw ValidationError("sim config: t_final must be nonnegative");
  }
  if (!(config.dt_ctrl > 0.0) || !(config.dt_plant > 0.0)) {
    throw ValidationError("sim config: time steps must be positive");
  }
  if (config.dt_plant > config.dt_ctrl) {
    throw ValidationError("sim config: dt_plant must not exceed dt_ctrl");
  }
  checked_step_count(config.dt_ctrl, config.dt_plant,
                     "dt_plant must divide dt_ctrl");
  checked_step_count(config.t_final, config.dt_ctrl,
                     "dt_ctrl must divide t_final");
  if (config.x0.size() != bundle.model.n) {
    throw ValidationError("sim config: x0 dimension mismatch");
  }
  if (!config.x0.allFinite()) {
    throw ValidationError("sim config: x0 must be finite");
  }
  if (config.controller == ControllerKind::Blended && !(config.eta > 0.0)) {
    throw ValidationError("sim config: blending eta must be positive");
  }
  if (needs_flow_horizon(config.controller)) {
    if (!(config.grid.T > 0.0) || config.grid.N <= 0 ||
        !(config.grid.dt_int > 0.0)) {
      throw ValidationError("sim config: flow horizon must be positive");
    }
  }
}

TrajectoryLog simulate(const ModelBundle& bundle, const SimConfig& config) {
  validate_sim_config(bundle, config);
  const long long steps =
      checked_step_count(config.t_final, config.dt_ctrl, "step count");

  TrajectoryLog log;
  log.state_dim = bundle.model.n;
  log.input_dim = bundle.model.m;
  log.rows.reserve(static_cast<size_t>(steps) + 1);

  StateVec x = config.x0;
  for (long long k = 0; k <= steps; ++k) {
    LogRow row;
    row.t = static_cast<double>(k) * config.dt_ctrl;
    row.x = x;
    row.h = bundle.safety.h(x);
    row.h_b = bundle.safety.h_b(x);

    const auto started = std::chrono::steady_clock::now();
    try {
      ControllerOutput out = eval_controller(bundle, config, x);
      row.wall_us = std::chrono::duration<double, std::micro>(
                        std::chrono::steady_clock::now() - started)
                        .count();
      row.u = std::move(out.u);
      row.mu = out.mu;
      row.diagnostics = std::move(out.diagnostics);
    } catch (const NumericalError& err) {
      row.wall_us = std::chrono::duration<double, std::micro>(
                        std::chrono::steady_clock::now() - started)
                        .count();
      row.u = ControlVec::Constant(bundle.model.m,
                                   std::numeric_limits<double>::quiet_NaN());
      log.rows.push_back(std::move(row));
      log.aborted = true;
      log.abort_reason = err.what();
      return log;
    }
    log.rows.push_back(std::move(row));
    if (k == steps) break;

    try {
      x = hold_and_integrate(bundle.model, x, log.rows.back().u,
                             config.dt_ctrl, config.dt_plant);
    } catch (const NumericalError& err) {
      log.aborted = true;
      log.abort_reason = err.what();
      return log;
    }
  }
  return log;
}

Metrics compute_metrics(const TrajectoryLog& log, const InputBox& box) {
  if (log.rows.empty()) {
    throw ValidationError("compute_metrics: empty log");
  }
  Metrics m;
  m.min_h = std::numeric_limits<double>::infinity();
  m.min_h_b_terminal = std::numeric_limits<double>::quiet_NaN();
  m.u_sign_reversals.assign(static_cast<size_t>(log.input_dim), 0);

  std::vector<int> last_sign(static_cast<size_t>(log.input_dim), 0);
  int mu_side = -1;  // -1 unknown, 0 below 0.5, 1 at or above
  double wall_sum = 0.0;

  for (const LogRow& row : log.rows) {
    m.min_h = std::min(m.min_h, row.h);
    if (row.diagnostics.h_b_terminal) {
      const double v = *row.diagnostics.h_b_terminal;
      m.min_h_b_terminal =
          std::isnan(m.min_h_b_terminal) ? v : std::min(m.min_h_b_terminal, v);
    }
    if (row.u.allFinite()) {
      if (!box.contains(row.u, 0.0)) ++m.input_violations;
      for (int j = 0; j < log.input_dim; ++j) {
        if (std::abs(row.u[j]) > 1e-3) {
          const int sign = row.u[j] > 0.0 ? 1 : -1;
          if (last_sign[static_cast<size_t>(j)] != 0 &&
              sign != last_sign[static_cast<size_t>(j)]) {
            ++m.u_sign_reversals[static_cast<size_t>(j)];
          }
          last_sign[static_cast<size_t>(j)] = sign;
        }
      }
    }
    if (row.mu) {
      const int side = *row.mu >= 0.5 ? 1 : 0;
      if (mu_side >= 0 && side != mu_side) ++m.mu_switch_count;
      mu_side = side;
    }
    wall_sum += row.wall_us;
    m.max_step_wall_us = std::max(m.max_step_wall_us, row.wall_us);
    m.ode_scalars_per_step =
        std::max(m.ode_scalars_per_step, row.diagnostics.ode_scalar_count);
    if (row.diagnostics.kkt && !row.diagnostics.kkt->pass) ++m.kkt_failures;
    if (row.diagnostics.out_of_domain) ++m.out_of_domain_steps;
  }
  m.mean_step_wall_us = wall_sum / static_cast<double>(log.rows.size());
  return m;
}

ComparisonReport compare_controllers(const ModelBundle& bundle,
                                     const std::vector<NamedConfig>& configs) {
  if (configs.empty()) {
    throw ValidationError("compare_controllers: no runs requested");
  }
  const SimConfig& first = configs.front().config;
  for (const NamedConfig& named : configs) {
    const SimConfig& c = named.config;
    if (c.x0.size() != first.x0.size() || c.x0 != first.x0 ||
        c.t_final != first.t_final || c.dt_ctrl != first.dt_ctrl) {
      throw ValidationError(
          "compare_controllers: runs must share x0, t_final, and dt_ctrl");
    }
  }

  ComparisonReport report;
  for (const NamedConfig& named : configs) {
    report.names.push_back(named.name);
    report.logs.push_back(simulate(bundle, named.config));
    report.metrics.push_back(
        compute_metrics(report.logs.back(), bundle.model.input_box));
  }

  const int n_runs = static_cast<int>(configs.size());
  report.pairwise_deviation = Matrix::Zero(n_runs, n_runs);
  for (int i = 0; i < n_runs; ++i) {
    for (int j = i + 1; j < n_runs; ++j) {
      const auto& rows_i = report.logs[static_cast<size_t>(i)].rows;
      const auto& rows_j = report.logs[static_cast<size_t>(j)].rows;
      const size_t common = std::min(rows_i.size(), rows_j.size());
      double dev = 0.0;
      for (size_t k = 0; k < common; ++k) {
        dev = std::max(dev,
                       (rows_i[k].x - rows_j[k].x).cwiseAbs().maxCoeff());
      }
      report.pairwise_deviation(i, j) = dev;
      report.pairwise_deviation(j, i) = dev;
      report.max_deviation = std::max(report.max_deviation, dev);
    }
  }
  return report;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TrajectoryLog& log) {
  std::string body = "t";
  for (int i = 0; i < log.state_dim; ++i) body += ",x" + std::to_string(i);
  for (int i = 0; i < log.input_dim; ++i) body += ",u" + std::to_string(i);
  body += ",mu,h,h_b,h_I,binding_index,status,step_wall_us\n";

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const LogRow& row : log.rows) {
    append_real(body, row.t);
    for (int i = 0; i < log.state_dim; ++i) {
      body += ',';
      append_real(body, row.x[i]);
    }
    for (int i = 0; i < log.input_dim; ++i) {
      body += ',';
      append_real(body, i < row.u.size() ? row.u[i] : nan);
    }
    body += ',';
    append_real(body, row.mu.value_or(nan));
    body += ',';
    append_real(body, row.h);
    body += ',';
    append_real(body, row.h_b);
    body += ',';
    append_real(body, row.diagnostics.h_I.value_or(nan));
    body += ',' + std::to_string(row.diagnostics.binding_index.value_or(-1));
    body += ',';
    body += to_string(row.diagnostics.solver_status);
    body += ',';
    append_real(body, row.wall_us);
    body += '\n';
  }

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ValidationError("cannot open output file " + tmp.string());
    }
    out << body;
    if (!out.flush()) {
      throw ValidationError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace safectrl
