#include "safectrl/verify.hpp"

#include "safectrl/controllers.hpp"
#include "safectrl/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace safectrl {

namespace {

std::string format_detail(const char* fmt, double value) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

// ---------------------------------------------------------------------------
// Randomized row systems with a known optimum: every row gets a margin
// bounded away from zero at mu_true (so a 1e-6 grid can resolve the feasible
// interval), and one row is made binding there with positive slope.
// ---------------------------------------------------------------------------

ConstraintCoeffs random_instance(std::mt19937_64& rng, int n_flow,
                                 double mu_true) {
  std::uniform_real_distribution<double> slope(-2.0, 2.0);
  std::uniform_real_distribution<double> margin(0.05, 1.5);
  ConstraintCoeffs coeffs;
  coeffs.a = Eigen::VectorXd(n_flow + 3);
  coeffs.b = Eigen::VectorXd(n_flow + 3);
  for (int i = 0; i <= n_flow; ++i) {  // flow rows plus the backup-set row
    const double b = slope(rng);
    coeffs.a[i] = margin(rng) - b * mu_true;
    coeffs.b[i] = b;
  }
  if (mu_true > 0.0) {
    std::uniform_real_distribution<double> pos(0.5, 2.0);
    const double b = pos(rng);
    const int hit = static_cast<int>(rng() % static_cast<unsigned>(n_flow));
    coeffs.a[hit] = -b * mu_true;
    coeffs.b[hit] = b;
  }
  coeffs.a[n_flow + 1] = 0.0;
  coeffs.b[n_flow + 1] = 1.0;
  coeffs.a[n_flow + 2] = 1.0;
  coeffs.b[n_flow + 2] = -1.0;
  return coeffs;
}

bool feasible_at(const ConstraintCoeffs& coeffs, double mu) {
  for (int i = 0; i < coeffs.size(); ++i) {
    if (coeffs.a[i] + coeffs.b[i] * mu <
        -1e-12 * (1.0 + std::abs(coeffs.a[i]))) {
      return false;
    }
  }
  return true;
}

// Exhaustive scan of [0, 1]: coarse sweep to bracket the smallest feasible
// weight, then a fine sweep of that bracket at the acceptance resolution.
double grid_search_mu(const ConstraintCoeffs& coeffs, bool* found) {
  constexpr double kCoarse = 1e-3;
  constexpr double kFine = 1e-6;
  *found = false;
  for (int k = 0; k <= 1000; ++k) {
    const double mu_c = std::min(1.0, k * kCoarse);
    if (!feasible_at(coeffs, mu_c)) continue;
    const double lo = std::max(0.0, mu_c - kCoarse);
    const int fine_steps = static_cast<int>(std::lround((mu_c - lo) / kFine));
    for (int j = 0; j <= fine_steps; ++j) {
      const double mu_f = lo + j * kFine;
      if (feasible_at(coeffs, mu_f)) {
        *found = true;
        return mu_f;
      }
    }
    *found = true;
    return mu_c;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Suite bodies
// ---------------------------------------------------------------------------

void kkt_suite(std::mt19937_64& rng, std::vector<VerifyCheck>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_gap = 0.0;
  double worst_primal = 0.0;
  double worst_dual = 0.0;
  int failures = 0;
  int domain_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu_true = (trial % 5 == 0) ? 0.0 : unit(rng);
    const ConstraintCoeffs coeffs = random_instance(rng, 20, mu_true);
    const MuStarResult res = oi_mu_star(coeffs);
    worst_gap = std::max(worst_gap, std::abs(res.mu - mu_true));
    if (res.mu < 0.0 || res.mu > 1.0 || res.out_of_domain) ++domain_violations;
    const KktReport report = kkt_check(coeffs, res.mu_raw, res.binding_index);
    if (!report.pass) ++failures;
    worst_primal = std::min(worst_primal, report.primal_min);
    worst_dual = std::min(worst_dual, report.dual);
  }
  out.push_back({"kkt: 1000 randomized certificates pass",
                 failures == 0 && worst_primal >= -1e-9 && worst_dual >= -1e-12,
                 format_detail("worst primal slack %.3g", worst_primal)});
  out.push_back({"kkt: weights recover the constructed optimum",
                 worst_gap <= 1e-9,
                 format_detail("max |mu - mu_true| = %.3g", worst_gap)});
  out.push_back({"kkt: weights stay in [0, 1] with no domain flags",
                 domain_violations == 0,
                 format_detail("violations = %.0f",
                               static_cast<double>(domain_violations))});
}

void oracle_suite(std::mt19937_64& rng, std::vector<VerifyCheck>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int unresolved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double mu_true = (trial % 4 == 0) ? 0.0 : unit(rng);
    const ConstraintCoeffs coeffs = random_instance(rng, 20, mu_true);
    const MuStarResult res = oi_mu_star(coeffs);
    bool found = false;
    const double mu_grid = grid_search_mu(coeffs, &found);
    if (!found) {
      ++unresolved;
      continue;
    }
    worst = std::max(worst, std::abs(res.mu - mu_grid));
  }
  out.push_back({"oracle: closed form matches grid search to 2e-6",
                 worst <= 2e-6 && unresolved == 0,
                 format_detail("max deviation = %.3g", worst)});
}

void sensitivity_model_check(const ModelBundle& bundle, std::mt19937_64& rng,
                             std::vector<VerifyCheck>& out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HorizonGrid grid = bundle.default_grid;
  grid.N = std::min(grid.N, 20);
  grid.T = grid.N * bundle.default_grid.delta();

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    StateVec x(bundle.model.n);
    for (int i = 0; i < bundle.model.n; ++i) {
      x[i] = bundle.sample_lo[i] +
             unit(rng) * (bundle.sample_hi[i] - bundle.sample_lo[i]);
    }
    const FlowBundle push =
        integrate_push_forward(bundle.model, bundle.backup, bundle.primary, x,
                               grid);
    const FlowBundle sens =
        integrate_sensitivity(bundle.model, bundle.backup, x, grid);
    const StateVec f_p =
        bundle.model.f(x) + bundle.model.g(x) * bundle.primary(x);
    for (int i = 0; i <= grid.N; ++i) {
      const double gap = (push.q_p[static_cast<size_t>(i)] -
                          sens.Phi[static_cast<size_t>(i)] * f_p)
                             .norm();
      const double scale =
          1.0 + push.q_p[static_cast<size_t>(i)].norm();
      worst = std::max(worst, gap / scale);
    }
  }
  out.push_back({"sensitivity: push-forward matches propagation (" +
                     bundle.name + ")",
                 worst <= 1e-6, format_detail("max residual = %.3g", worst)});
}

void sensitivity_suite(std::mt19937_64& rng, std::vector<VerifyCheck>& out) {
  const ModelBundle di = make_double_integrator();
  const ModelBundle aircraft = make_aircraft();
  sensitivity_model_check(di, rng, out);
  sensitivity_model_check(aircraft, rng, out);

  const StateVec x0 = [] {
    StateVec x(8);
    x << 0.0, 0.0, 0.0, 0.0, 0.0, 10000.0, 0.0, 1.0;
    return x;
  }();
  HorizonGrid grid = aircraft.default_grid;
  const int sens_count =
      integrate_sensitivity(aircraft.model, aircraft.backup, x0, grid)
          .ode_scalar_count;
  const int push_count =
      integrate_push_forward(aircraft.model, aircraft.backup,
                             aircraft.primary, x0, grid)
          .ode_scalar_count;
  out.push_back({"sensitivity: workload is n+n^2 vs 3n scalars",
                 sens_count == 72 && push_count == 24,
                 format_detail("sensitivity %.0f",
                               static_cast<double>(sens_count)) +
                     format_detail(", push-forward %.0f",
                                   static_cast<double>(push_count))});
}

void invariance_suite(std::mt19937_64& rng, std::vector<VerifyCheck>& out) {
  const AircraftParams params;
  const ModelBundle bundle = make_aircraft(params);
  std::uniform_real_distribution<double> heading(-3.14159265358979323846,
                                                 3.14159265358979323846);
  std::uniform_real_distribution<double> offset(-2000.0, 2000.0);

  const double period = params.turn_period();
  const HorizonGrid grid{period, 128, period / 128.0 / 32.0};

  double worst_drift = 0.0;
  double worst_band = std::numeric_limits<double>::infinity();
  double worst_position = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    StateVec x(8);
    x[aircraft_state::roll] = params.phi_star;
    x[aircraft_state::pitch] = 0.0;
    x[aircraft_state::yaw] = heading(rng);
    x[aircraft_state::north] = offset(rng);
    x[aircraft_state::east] = offset(rng);
    x[aircraft_state::alt] = params.alt_star;
    x[aircraft_state::roll_rate] = 0.0;
    x[aircraft_state::load] = params.load_star();

    const double clearance0 = aircraft_hold_clearance(params, x);
    const FlowBundle flow =
        integrate_flow(bundle.model, bundle.backup, x, grid);
    for (int i = 0; i <= grid.N; ++i) {
      const StateVec& node = flow.phi[static_cast<size_t>(i)];
      worst_drift = std::max(
          worst_drift,
          std::abs(aircraft_hold_clearance(params, node) - clearance0));
      const Eigen::VectorXd comps = aircraft_backup_components(params, node);
      worst_band = std::min(worst_band, comps.head(5).minCoeff());

      const Eigen::Vector2d predicted =
          aircraft_turn_position(params, x, grid.delta() * i);
      const Eigen::Vector2d actual(node[aircraft_state::north],
                                   node[aircraft_state::east]);
      worst_position =
          std::max(worst_position, (predicted - actual).norm());
    }
  }
  out.push_back({"invariance: hold-circle clearance constant to 1e-6",
                 worst_drift <= 1e-6,
                 format_detail("max drift = %.3g", worst_drift)});
  out.push_back({"invariance: trim bands nonnegative along the hold",
                 worst_band >= -1e-9,
                 format_detail("min band margin = %.3g", worst_band)});
  out.push_back({"invariance: closed-form turn position matches the flow",
                 worst_position <= 1e-6,
                 format_detail("max gap = %.3g m", worst_position)});
}

}  // namespace

VerifyReport run_verify_suite(const std::string& suite, std::uint64_t seed) {
  const bool all = suite == "all";
  if (!all && suite != "kkt" && suite != "oracle" && suite != "sensitivity" &&
      suite != "invariance") {
    throw ValidationError("verify: unknown suite '" + suite + "'");
  }
  VerifyReport report;
  report.suite = suite;
  std::mt19937_64 rng(seed);
  if (all || suite == "kkt") kkt_suite(rng, report.checks);
  if (all || suite == "oracle") oracle_suite(rng, report.checks);
  if (all || suite == "sensitivity") sensitivity_suite(rng, report.checks);
  if (all || suite == "invariance") invariance_suite(rng, report.checks);
  return report;
}

void print_verify_report(const VerifyReport& report, std::ostream& out) {
  size_t width = 0;
  for (const VerifyCheck& check : report.checks) {
    width = std::max(width, check.name.size());
  }
  int passed = 0;
  for (const VerifyCheck& check : report.checks) {
    if (check.pass) ++passed;
    out << (check.pass ? "[PASS] " : "[FAIL] ") << check.name
        << std::string(width - check.name.size() + 2, ' ') << check.detail
        << '\n';
  }
  out << passed << '/' << report.checks.size() << " checks passed ("
      << report.suite << ")\n";
}

}  // namespace safectrl
