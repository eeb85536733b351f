#pragma once

#include <vector>

#include "safectrl/types.hpp"

namespace safectrl {

// Scalar multiplier for a single affine inequality a + b*mu >= 0 minimizing
// mu^2: zero when the slope cannot help (b <= 0) or the row already holds,
// else the smallest nonnegative mu activating the row.
inline double lambda_relu(double a, double b) {
  if (b <= 0.0) return 0.0;
  const double r = -a / b;
  return r > 0.0 ? r : 0.0;
}

// Rows c_i . u + d_i >= 0.
struct LinearConstraintSet {
  Matrix c;        // one row per constraint
  Eigen::VectorXd d;

  int rows() const { return static_cast<int>(c.rows()); }
};

struct QpSolution {
  ControlVec u;
  Eigen::VectorXd multipliers;  // one per row of the constraint set + 2m box rows
  SolverStatus status = SolverStatus::Optimal;
  int iterations = 0;
  double primal_residual = 0.0;        // most negative constraint value
  double stationarity_residual = 0.0;  // || u - target - A^T lambda ||_inf
};

// Projects `target` onto { u : rows hold, lo <= u <= hi } (identity Hessian).
// Dual active-set method: starts from the unconstrained optimum and adds the
// most violated constraint until feasible, dropping rows whose multiplier
// would go negative. Exact for these small dense problems; infeasibility is
// certified when a violated row is linearly dependent on the active set and
// no multiplier exchange can help.
QpSolution solve_box_qp(const LinearConstraintSet& rows, const InputBox& box,
                        const ControlVec& target);

}  // namespace safectrl
