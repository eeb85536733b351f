#include "safectrl/qp.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <vector>

namespace safectrl {

namespace {

constexpr double kFeasTol = 1e-11;     // row slack considered satisfied
constexpr double kZeroNormal = 1e-13;  // row treated as u-independent
constexpr double kDualTol = 1e-12;

}  // namespace

QpSolution solve_box_qp(const LinearConstraintSet& rows, const InputBox& box,
                        const ControlVec& target) {
  validate_box(box);
  const int m = box.dim();
  if (target.size() != m) {
    throw ValidationError("solve_box_qp: target dimension mismatch");
  }
  if (rows.rows() > 0 && rows.c.cols() != m) {
    throw ValidationError("solve_box_qp: row width mismatch");
  }
  if (!target.allFinite() || (rows.rows() > 0 && (!rows.c.allFinite() ||
                                                  !rows.d.allFinite()))) {
    throw NumericalError("solve_box_qp: non-finite input");
  }

  const int n_rows = rows.rows();
  const int n_all = n_rows + 2 * m;

  QpSolution sol;
  sol.multipliers = Eigen::VectorXd::Zero(n_all);

  // Stack user rows and box faces as n.u >= b with unit normals. Rows whose
  // normal is (numerically) zero cannot be influenced by u: they are dropped
  // when already satisfied and certify infeasibility otherwise.
  Matrix normals(n_all, m);
  Eigen::VectorXd rhs(n_all);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n_all);
  std::vector<bool> ignored(n_all, false);
  for (int i = 0; i < n_rows; ++i) {
    const double nrm = rows.c.row(i).norm();
    if (nrm <= kZeroNormal) {
      normals.row(i).setZero();
      rhs[i] = 0.0;
      if (rows.d[i] < -kFeasTol * (1.0 + std::abs(rows.d[i]))) {
        sol.u = box_project(box, target);
        sol.status = SolverStatus::Infeasible;
        sol.primal_residual = rows.d[i];
        return sol;
      }
      ignored[i] = true;
      continue;
    }
    scale[i] = nrm;
    normals.row(i) = rows.c.row(i) / nrm;
    rhs[i] = -rows.d[i] / nrm;  // c.u + d >= 0  ->  (c/|c|).u >= -d/|c|
  }
  for (int j = 0; j < m; ++j) {
    normals.row(n_rows + j) = Eigen::RowVectorXd::Unit(m, j);
    rhs[n_rows + j] = box.lo[j];
    normals.row(n_rows + m + j) = -Eigen::RowVectorXd::Unit(m, j);
    rhs[n_rows + m + j] = -box.hi[j];
  }

  ControlVec u = target;
  std::vector<int> active;
  std::vector<double> lam;
  const int max_iters = 100 * m + 10 * n_all;

  auto slack = [&](int i) { return normals.row(i).dot(u) - rhs[i]; };
  auto finish = [&](SolverStatus status, int iters) {
    sol.u = u;
    sol.status = status;
    sol.iterations = iters;
    for (size_t a = 0; a < active.size(); ++a) {
      sol.multipliers[active[a]] = lam[a] / scale[active[a]];
    }
    double worst = 0.0;
    for (int i = 0; i < n_all; ++i) {
      if (!ignored[i]) worst = std::min(worst, slack(i) * scale[i]);
    }
    sol.primal_residual = worst;
    ControlVec grad = u - target;
    for (size_t a = 0; a < active.size(); ++a) {
      grad -= lam[a] * normals.row(active[a]).transpose();
    }
    sol.stationarity_residual = grad.cwiseAbs().maxCoeff();
    return sol;
  };

  int iters = 0;
  while (true) {
    if (++iters > max_iters) return finish(SolverStatus::MaxIterations, iters);

    // Most violated inactive row (violation measured relative to row scale).
    int p = -1;
    double worst = -kFeasTol;
    for (int i = 0; i < n_all; ++i) {
      if (ignored[i]) continue;
      bool is_active = false;
      for (int a : active) {
        if (a == i) {
          is_active = true;
          break;
        }
      }
      if (is_active) continue;
      const double s = slack(i) / (1.0 + std::abs(rhs[i]));
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) return finish(SolverStatus::Optimal, iters);

    // Drive row p to zero slack, dropping dual blockers along the way. Its
    // multiplier accumulates in lam_p and only enters the active set on the
    // full step.
    double lam_p = 0.0;
    while (true) {
      if (++iters > max_iters) return finish(SolverStatus::MaxIterations, iters);
      const int k = static_cast<int>(active.size());
      Eigen::VectorXd r(k);
      Eigen::VectorXd z = normals.row(p).transpose();
      if (k > 0) {
        Matrix nact(m, k);
        for (int a = 0; a < k; ++a) {
          nact.col(a) = normals.row(active[a]).transpose();
        }
        r = nact.colPivHouseholderQr().solve(normals.row(p).transpose());
        z -= nact * r;
      }

      double t1 = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (int a = 0; a < k; ++a) {
        if (r[a] > kDualTol && lam[a] / r[a] < t1) {
          t1 = lam[a] / r[a];
          blocker = a;
        }
      }

      const double z2 = z.squaredNorm();
      if (z2 <= 1e-24) {
        if (blocker < 0) {
          // Row p lies in the span of the active normals with no multiplier
          // exchange available: the constraint system is inconsistent.
          u = box_project(box, u);
          return finish(SolverStatus::Infeasible, iters);
        }
        for (int a = 0; a < k; ++a) lam[a] -= t1 * r[a];
        lam_p += t1;
        active.erase(active.begin() + blocker);
        lam.erase(lam.begin() + blocker);
        continue;
      }

      const double t2 = -slack(p) / z2;
      const double t = std::min(t1, t2);
      u += t * z;
      for (int a = 0; a < k; ++a) lam[a] -= t * r[a];
      lam_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        lam.push_back(lam_p);
        break;
      }
      active.erase(active.begin() + blocker);
      lam.erase(lam.begin() + blocker);
    }
  }
}

}  // namespace safectrl
