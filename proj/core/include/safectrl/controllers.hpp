// Safety controllers built on the backup-flow machinery:
//  - a closed-form CBF safety filter (single constraint, unbounded inputs),
//  - a backup-CBF QP filter over the discretized flow constraints,
//  - heuristic blending between primary and backup laws, and
//  - optimal interpolation with a closed-form blending weight.
#pragma once

#include "safectrl/integrate.hpp"
#include "safectrl/qp.hpp"
#include "safectrl/types.hpp"

namespace safectrl {

// Linear-in-mu constraint coefficients a[i] + b[i]*mu >= 0. Indices 0..N are
// flow samples, N+1 the backup-set row at the horizon end, N+2 and N+3 the
// domain rows mu >= 0 and mu <= 1.
struct ConstraintCoeffs {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  int size() const { return static_cast<int>(a.size()); }
  int horizon_index() const { return size() - 4; }  // N
};

struct MuStarResult {
  double mu = 0.0;       // clamped to [0,1], the value applied to the plant
  double mu_raw = 0.0;   // closed-form maximizer before clamping
  int binding_index = -1;
  bool out_of_domain = false;
  int infeasible_rows = 0;
};

// Single-constraint safety filter with the closed-form multiplier
// u = k_p(x) + mu_hat * (grad_h . g)^T. Derived for unbounded inputs: the
// raw value is reported alongside its projection onto the input box.
ControllerOutput cbf_filter_closed_form(const SafetySpec& spec,
                                        const ControlAffineModel& model,
                                        const ControllerFn& k_p,
                                        const StateVec& x);

// One halfspace in u per flow sample: grad_h(phi_i)^T Phi_i (f(x) + g(x) u)
// >= -alpha(h(phi_i)), plus the backup-set row at the horizon end. Requires a
// bundle carrying sensitivity matrices; the initial state is bundle.phi[0].
LinearConstraintSet bcbf_constraint_rows(const SafetySpec& spec,
                                         const ControlAffineModel& model,
                                         const FlowBundle& bundle);

// Projects k_p(x) onto the flow constraints and the input box. Falls back to
// the backup law whenever the QP does not return a certified optimum.
ControllerOutput bcbf_qp_controller(const SafetySpec& spec,
                                    const ControlAffineModel& model,
                                    const ControllerFn& k_p,
                                    const ControllerFn& k_b,
                                    const HorizonGrid& grid, const StateVec& x);

// Worst safety margin along the backup flow: min over grid nodes of h, and
// the backup-set value at the horizon end.
double eval_flow_margin(const SafetySpec& spec, const FlowBundle& bundle);

// Heuristic blend u = k_p + mu (k_b - k_p) with mu = exp(-eta max(margin, 0)).
ControllerOutput blended_controller(const SafetySpec& spec,
                                    const ControlAffineModel& model,
                                    const ControllerFn& k_p,
                                    const ControllerFn& k_b,
                                    const HorizonGrid& grid, double eta,
                                    const StateVec& x);

// Flow constraints reduced to scalar inequalities in the blending weight,
// using the push-forward co-states: a[i] = grad_h(phi_i).q_p[i] + alpha(h),
// b[i] = grad_h(phi_i).(q_b[i] - q_p[i]).
ConstraintCoeffs oi_coefficients(const SafetySpec& spec,
                                 const FlowBundle& bundle);

// Closed-form minimal blending weight: the largest ratio -a_i/b_i over rows
// with meaningfully positive slope. Rows that no nonnegative weight can
// satisfy are tallied in infeasible_rows; the out-of-domain flag reports
// only a raw weight beyond 1, i.e. a demand past the backup endpoint.
MuStarResult oi_mu_star(const ConstraintCoeffs& coeffs);

// First-order optimality certificate for mu under the row constraints:
// primal feasibility everywhere, dual feasibility / complementary slackness /
// stationarity at the binding row. Reports residuals; never throws.
KktReport kkt_check(const ConstraintCoeffs& coeffs, double mu,
                    int binding_index);

// Optimal interpolation: integrates the push-forward bundle (3n scalar ODEs),
// computes the closed-form weight, and blends the two laws. The KKT
// certificate for the raw weight is attached to the diagnostics.
ControllerOutput oi_controller(const SafetySpec& spec,
                               const ControlAffineModel& model,
                               const ControllerFn& k_p, const ControllerFn& k_b,
                               const HorizonGrid& grid, const StateVec& x);

}  // namespace safectrl
