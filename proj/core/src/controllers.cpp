#include "safectrl/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safectrl {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-12;

ControlVec blend_inputs(const ControlVec& u_p, const ControlVec& u_b,
                        double mu) {
  return u_p + mu * (u_b - u_p);
}

// Inputs produced by blending or by an active-set solve sit exactly on a box
// face in exact arithmetic but can land a few ulp outside of it. Snap those
// back onto the face; leave anything beyond the guard untouched so genuine
// violations stay observable downstream.
ControlVec snap_into_box(const InputBox& box, ControlVec u) {
  constexpr double kSnapTol = 1e-9;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double span = box.hi[i] - box.lo[i];
    const double guard = kSnapTol * (1.0 + std::abs(span));
    if (u[i] < box.lo[i] && u[i] >= box.lo[i] - guard) u[i] = box.lo[i];
    if (u[i] > box.hi[i] && u[i] <= box.hi[i] + guard) u[i] = box.hi[i];
  }
  return u;
}

}  // namespace

ControllerOutput cbf_filter_closed_form(const SafetySpec& spec,
                                        const ControlAffineModel& model,
                                        const ControllerFn& k_p,
                                        const StateVec& x) {
  const ControlVec u_p = k_p(x);
  const StateVec grad = spec.grad_h(x);
  const Matrix g = model.g(x);
  const Eigen::RowVectorXd row = grad.transpose() * g;
  const double b_hat = row.squaredNorm();
  const double a_hat = grad.dot(model.f(x) + g * u_p) +
                       alpha_eval(spec.alpha_gain, spec.h(x));
  const double mu_hat = lambda_relu(a_hat, b_hat);

  ControllerOutput out;
  const ControlVec u_raw = u_p + mu_hat * row.transpose();
  out.u = box_project(model.input_box, u_raw);
  out.diagnostics.solver_status = SolverStatus::ClosedForm;
  out.diagnostics.mu_hat = mu_hat;
  out.diagnostics.box_projected =
      (out.u - u_raw).cwiseAbs().maxCoeff() > 0.0;
  if (out.diagnostics.box_projected) {
    out.diagnostics.u_raw = u_raw;
  }
  if (!out.u.allFinite()) {
    throw NumericalError("cbf_filter_closed_form: non-finite input produced");
  }
  return out;
}

LinearConstraintSet bcbf_constraint_rows(const SafetySpec& spec,
                                         const ControlAffineModel& model,
                                         const FlowBundle& bundle) {
  if (bundle.Phi.empty()) {
    throw ValidationError("bcbf_constraint_rows: bundle lacks sensitivities");
  }
  const int n_nodes = static_cast<int>(bundle.phi.size());
  const StateVec& x = bundle.phi.front();
  const StateVec f_x = model.f(x);
  const Matrix g_x = model.g(x);

  LinearConstraintSet rows;
  rows.c = Matrix(n_nodes + 1, model.m);
  rows.d = Eigen::VectorXd(n_nodes + 1);
  for (int i = 0; i < n_nodes; ++i) {
    const Eigen::RowVectorXd through =
        spec.grad_h(bundle.phi[i]).transpose() * bundle.Phi[i];
    rows.c.row(i) = through * g_x;
    rows.d[i] = through.dot(f_x) +
                alpha_eval(spec.alpha_gain, spec.h(bundle.phi[i]));
  }
  const Eigen::RowVectorXd through_b =
      spec.grad_h_b(bundle.phi.back()).transpose() * bundle.Phi.back();
  rows.c.row(n_nodes) = through_b * g_x;
  rows.d[n_nodes] = through_b.dot(f_x) +
                    alpha_eval(spec.alpha_b_gain, spec.h_b(bundle.phi.back()));
  if (!rows.c.allFinite() || !rows.d.allFinite()) {
    throw NumericalError("bcbf_constraint_rows: non-finite row produced");
  }
  return rows;
}

ControllerOutput bcbf_qp_controller(const SafetySpec& spec,
                                    const ControlAffineModel& model,
                                    const ControllerFn& k_p,
                                    const ControllerFn& k_b,
                                    const HorizonGrid& grid,
                                    const StateVec& x) {
  const FlowBundle bundle = integrate_sensitivity(model, k_b, x, grid);
  const LinearConstraintSet rows = bcbf_constraint_rows(spec, model, bundle);
  const QpSolution sol = solve_box_qp(rows, model.input_box, k_p(x));

  ControllerOutput out;
  out.diagnostics.solver_status = sol.status;
  out.diagnostics.h_I = eval_flow_margin(spec, bundle);
  out.diagnostics.h_b_terminal = spec.h_b(bundle.phi.back());
  out.diagnostics.ode_scalar_count = bundle.ode_scalar_count;
  if (sol.status == SolverStatus::Optimal) {
    out.u = snap_into_box(model.input_box, sol.u);
    int binding = -1;
    double largest = 1e-12;
    for (int i = 0; i < rows.rows(); ++i) {
      if (sol.multipliers[i] > largest) {
        largest = sol.multipliers[i];
        binding = i;
      }
    }
    if (binding >= 0) {
      out.diagnostics.binding_index = binding;
    }
  } else {
    // No certified optimum: engage the backup law, which keeps the implicit
    // invariant set invariant regardless of the row system.
    out.u = box_project(model.input_box, k_b(x));
  }
  return out;
}

double eval_flow_margin(const SafetySpec& spec, const FlowBundle& bundle) {
  double margin = std::numeric_limits<double>::infinity();
  for (const StateVec& phi : bundle.phi) {
    margin = std::min(margin, spec.h(phi));
  }
  return std::min(margin, spec.h_b(bundle.phi.back()));
}

ControllerOutput blended_controller(const SafetySpec& spec,
                                    const ControlAffineModel& model,
                                    const ControllerFn& k_p,
                                    const ControllerFn& k_b,
                                    const HorizonGrid& grid, double eta,
                                    const StateVec& x) {
  if (eta <= 0.0) {
    throw ValidationError("blended_controller: eta must be positive");
  }
  const FlowBundle bundle = integrate_flow(model, k_b, x, grid);
  const double margin = eval_flow_margin(spec, bundle);
  const double mu = std::exp(-eta * std::max(margin, 0.0));

  ControllerOutput out;
  out.u = snap_into_box(model.input_box, blend_inputs(k_p(x), k_b(x), mu));
  out.mu = mu;
  out.diagnostics.solver_status = SolverStatus::ClosedForm;
  out.diagnostics.h_I = margin;
  out.diagnostics.h_b_terminal = spec.h_b(bundle.phi.back());
  out.diagnostics.ode_scalar_count = bundle.ode_scalar_count;
  return out;
}

ConstraintCoeffs oi_coefficients(const SafetySpec& spec,
                                 const FlowBundle& bundle) {
  if (bundle.q_p.empty() || bundle.q_b.empty()) {
    throw ValidationError("oi_coefficients: bundle lacks push-forward states");
  }
  const int n_nodes = static_cast<int>(bundle.phi.size());  // N + 1
  ConstraintCoeffs coeffs;
  coeffs.a = Eigen::VectorXd(n_nodes + 3);
  coeffs.b = Eigen::VectorXd(n_nodes + 3);
  for (int i = 0; i < n_nodes; ++i) {
    const StateVec grad = spec.grad_h(bundle.phi[i]);
    coeffs.a[i] = grad.dot(bundle.q_p[i]) +
                  alpha_eval(spec.alpha_gain, spec.h(bundle.phi[i]));
    coeffs.b[i] = grad.dot(bundle.q_b[i] - bundle.q_p[i]);
  }
  const StateVec grad_b = spec.grad_h_b(bundle.phi.back());
  coeffs.a[n_nodes] = grad_b.dot(bundle.q_p.back()) +
                      alpha_eval(spec.alpha_b_gain, spec.h_b(bundle.phi.back()));
  coeffs.b[n_nodes] = grad_b.dot(bundle.q_b.back() - bundle.q_p.back());
  coeffs.a[n_nodes + 1] = 0.0;  // mu >= 0
  coeffs.b[n_nodes + 1] = 1.0;
  coeffs.a[n_nodes + 2] = 1.0;  // mu <= 1
  coeffs.b[n_nodes + 2] = -1.0;
  if (!coeffs.a.allFinite() || !coeffs.b.allFinite()) {
    throw NumericalError("oi_coefficients: non-finite coefficient");
  }
  return coeffs;
}

MuStarResult oi_mu_star(const ConstraintCoeffs& coeffs) {
  MuStarResult res;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < coeffs.size(); ++i) {
    const double a = coeffs.a[i];
    const double b = coeffs.b[i];
    if (b > 1e-12 * (1.0 + std::abs(a))) {
      const double ratio = -a / b;
      if (ratio > best) {
        best = ratio;
        res.binding_index = i;
      }
    } else if (a < -kPrimalTol) {
      // Nonpositive slope with a negative offset: no mu >= 0 satisfies it.
      ++res.infeasible_rows;
    }
  }
  res.mu_raw = best;  // the mu >= 0 row guarantees best >= 0
  // The domain flag reports only an interpolation demand beyond the backup
  // endpoint. Zero-slope rows cannot be influenced by mu at all, so they are
  // tallied separately instead of invalidating the interpolant.
  res.out_of_domain = res.mu_raw > 1.0 + kPrimalTol;
  res.mu = std::clamp(res.mu_raw, 0.0, 1.0);
  return res;
}

KktReport kkt_check(const ConstraintCoeffs& coeffs, double mu,
                    int binding_index) {
  KktReport report;
  report.primal_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < coeffs.size(); ++i) {
    // The certificate covers the program actually solved over mu; rows with
    // (numerically) zero slope are constants in that program and are screened
    // separately as infeasible_rows.
    if (std::abs(coeffs.b[i]) <= 1e-12 * (1.0 + std::abs(coeffs.a[i]))) {
      continue;
    }
    report.primal_min =
        std::min(report.primal_min, coeffs.a[i] + coeffs.b[i] * mu);
  }
  if (binding_index < 0 || binding_index >= coeffs.size() ||
      coeffs.b[binding_index] == 0.0) {
    report.pass = false;
    return report;
  }
  const double a_j = coeffs.a[binding_index];
  const double b_j = coeffs.b[binding_index];
  const double lambda_j = -a_j / (b_j * b_j);
  report.dual = lambda_j;
  report.complementary = std::abs(a_j + b_j * mu);
  report.stationarity = std::abs(mu - lambda_j * b_j);
  report.pass = report.primal_min >= -kPrimalTol && lambda_j >= -kDualTol &&
                report.complementary <= kPrimalTol &&
                report.stationarity <= kPrimalTol;
  return report;
}

ControllerOutput oi_controller(const SafetySpec& spec,
                               const ControlAffineModel& model,
                               const ControllerFn& k_p, const ControllerFn& k_b,
                               const HorizonGrid& grid, const StateVec& x) {
  const FlowBundle bundle = integrate_push_forward(model, k_b, k_p, x, grid);
  const ConstraintCoeffs coeffs = oi_coefficients(spec, bundle);
  const MuStarResult res = oi_mu_star(coeffs);

  ControllerOutput out;
  out.u = snap_into_box(model.input_box, blend_inputs(k_p(x), k_b(x), res.mu));
  out.mu = res.mu;
  out.diagnostics.solver_status = SolverStatus::ClosedForm;
  out.diagnostics.binding_index = res.binding_index;
  out.diagnostics.h_I = eval_flow_margin(spec, bundle);
  out.diagnostics.h_b_terminal = spec.h_b(bundle.phi.back());
  out.diagnostics.mu_raw = res.mu_raw;
  out.diagnostics.out_of_domain = res.out_of_domain;
  out.diagnostics.infeasible_rows = res.infeasible_rows;
  out.diagnostics.ode_scalar_count = bundle.ode_scalar_count;
  out.diagnostics.kkt = kkt_check(coeffs, res.mu_raw, res.binding_index);
  return out;
}

}  // namespace safectrl
