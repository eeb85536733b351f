#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace safectrl {

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A non-finite value surfaced from dynamics, integration, or a solver.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flow integration produced a non-finite state.
struct DivergedFlow : NumericalError {
  using NumericalError::NumericalError;
};

// Attitude kinematics evaluated too close to the vertical (|cos(theta)| ~ 0).
struct GimbalSingularity : NumericalError {
  using NumericalError::NumericalError;
};

// Bad user-supplied configuration (dimensions, ranges, unknown keys).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned input bounds lo <= u <= hi (elementwise).
struct InputBox {
  ControlVec lo;
  ControlVec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const ControlVec& u, double tol = 0.0) const {
    for (int i = 0; i < u.size(); ++i) {
      if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
    }
    return true;
  }
};

inline void validate_box(const InputBox& box) {
  if (box.lo.size() != box.hi.size() || box.lo.size() == 0) {
    throw ValidationError("input box: lo/hi dimension mismatch");
  }
  for (int i = 0; i < box.lo.size(); ++i) {
    if (!(box.lo[i] < box.hi[i])) {
      throw ValidationError("input box: lo must be strictly below hi");
    }
  }
}

// Elementwise clamp of u onto the box. Idempotent; identity on interior points.
inline ControlVec box_project(const InputBox& box, const ControlVec& u) {
  return u.cwiseMax(box.lo).cwiseMin(box.hi);
}

// Linear class-K scaling alpha(r) = gain * r, gain > 0.
inline double alpha_eval(double gain, double r) { return gain * r; }

// State feedback law with a human-readable label for logs.
struct ControllerFn {
  std::function<ControlVec(const StateVec&)> k;
  std::string label;

  ControlVec operator()(const StateVec& x) const { return k(x); }
};

// Control-affine plant xdot = f(x) + g(x) u, together with the Jacobian of
// the backup-closed-loop field f(x) + g(x) k_b(x) used by flow sensitivities.
struct ControlAffineModel {
  int n = 0;
  int m = 0;
  std::function<StateVec(const StateVec&)> f;
  std::function<Matrix(const StateVec&)> g;
  InputBox input_box;
  std::function<Matrix(const StateVec&)> jac_f_cl;
};

// Safety data: constraint function h (safe set {h >= 0}), backup-set function
// h_b ({h_b >= 0}), their analytic gradients, and linear class-K gains.
struct SafetySpec {
  std::function<double(const StateVec&)> h;
  std::function<StateVec(const StateVec&)> grad_h;
  std::function<double(const StateVec&)> h_b;
  std::function<StateVec(const StateVec&)> grad_h_b;
  double alpha_gain = 1.0;    // gain for the h rows
  double alpha_b_gain = 1.0;  // gain for the terminal h_b row
};

// Closed-loop field f(x) + g(x) k(x).
inline StateVec eval_closed_loop(const ControlAffineModel& model,
                                 const ControllerFn& k, const StateVec& x) {
  StateVec v = model.f(x) + model.g(x) * k(x);
  if (!v.allFinite()) throw NumericalError("closed-loop field is non-finite");
  return v;
}

enum class SolverStatus {
  ClosedForm,     // value produced by an explicit formula, no iteration
  Optimal,        // QP solved to stated tolerances
  Infeasible,     // constraints proven inconsistent
  MaxIterations,  // iteration cap hit before convergence
};

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::ClosedForm: return "closed_form";
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

// Residual report for the interpolation-QP optimality conditions.
struct KktReport {
  double primal_min = 0.0;   // min_i (a_i + b_i mu), >= -tol required
  double dual = 0.0;         // multiplier at the binding row, >= -tol required
  double complementary = 0.0;  // |a_j + b_j mu| at the binding row
  double stationarity = 0.0;   // |mu - lambda_j b_j|
  bool pass = false;
};

// One controller evaluation: the applied input plus solver diagnostics.
struct ControllerOutput {
  ControlVec u;
  std::optional<double> mu;

  struct Diagnostics {
    SolverStatus solver_status = SolverStatus::ClosedForm;
    std::optional<int> binding_index;
    std::optional<double> h_I;
    std::optional<double> h_b_terminal;  // h_b at the flow horizon end
    std::optional<double> mu_hat;     // unclamped filter multiplier (>= 0)
    std::optional<double> mu_raw;     // interpolation weight before clamping
    std::optional<ControlVec> u_raw;  // pre-projection input, when it differs
    bool box_projected = false;
    bool out_of_domain = false;  // no mu in [0,1] satisfies every row
    int infeasible_rows = 0;     // rows no mu >= 0 can satisfy
    int ode_scalar_count = 0;    // scalar ODEs integrated for this output
    std::optional<KktReport> kkt;
  } diagnostics;
};

}  // namespace safectrl
