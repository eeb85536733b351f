#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "safectrl/types.hpp"

namespace safectrl {

// Prediction horizon [0, T] sampled at tau_i = i*Delta, Delta = T/N, with a
// fixed internal integration step dt_int that divides Delta exactly.
struct HorizonGrid {
  double T = 1.0;
  int N = 10;
  double dt_int = 0.1;

  double delta() const { return T / N; }
  int substeps() const { return static_cast<int>(std::llround(delta() / dt_int)); }
};

void validate_grid(const HorizonGrid& grid);

// Backup-flow data on the horizon grid. phi[i] is the flow at tau_i. When
// requested, Phi[i] holds the state-transition (sensitivity) matrix and
// q_p/q_b hold push-forward vectors Phi(tau_i) * f_p(x) and Phi(tau_i) * f_cl(x).
struct FlowBundle {
  HorizonGrid grid;
  std::vector<StateVec> phi;
  std::vector<Matrix> Phi;
  std::vector<StateVec> q_p;
  std::vector<StateVec> q_b;
  int ode_scalar_count = 0;  // scalars co-integrated per flow step
};

// Classical fixed-step RK4 on the backup-closed-loop field. n scalar ODEs.
FlowBundle integrate_flow(const ControlAffineModel& model,
                          const ControllerFn& backup, const StateVec& x0,
                          const HorizonGrid& grid);

// Flow plus sensitivity: d(Phi)/dtau = F_cl(phi) Phi, Phi(0) = I.
// n + n^2 scalar ODEs.
FlowBundle integrate_sensitivity(const ControlAffineModel& model,
                                 const ControllerFn& backup, const StateVec& x0,
                                 const HorizonGrid& grid);

// Flow plus the two push-forward vectors qdot = F_cl(phi) q with
// q_p(0) = f(x0) + g(x0) k_p(x0) and q_b(0) = f(x0) + g(x0) k_b(x0).
// 3n scalar ODEs; avoids forming the full sensitivity matrix.
FlowBundle integrate_push_forward(const ControlAffineModel& model,
                                  const ControllerFn& backup,
                                  const ControllerFn& primary,
                                  const StateVec& x0, const HorizonGrid& grid);

// Scalar ODE budget for each bundle kind, used in accounting checks.
inline int ode_count_flow(int n) { return n; }
inline int ode_count_sensitivity(int n) { return n + n * n; }
inline int ode_count_push_forward(int n) { return 3 * n; }

}  // namespace safectrl
