#include "safectrl/integrate.hpp"

#include <cmath>

namespace safectrl {

void validate_grid(const HorizonGrid& grid) {
  if (!(grid.T > 0.0)) throw ValidationError("horizon: T must be positive");
  if (grid.N < 1) throw ValidationError("horizon: N must be at least 1");
  if (!(grid.dt_int > 0.0)) {
    throw ValidationError("horizon: dt_int must be positive");
  }
  const double ratio = grid.delta() / grid.dt_int;
  const double rounded = static_cast<double>(std::llround(ratio));
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-12 * (1.0 + ratio)) {
    throw ValidationError("horizon: dt_int must divide Delta = T/N exactly");
  }
}

namespace {

enum class Mode { Flow, Sensitivity, PushForward };

// Augmented RK4 state: flow plus optional sensitivity matrix or push-forward
// vectors. Co-states share the flow stages, so every consumer sees the same
// discrete flow map.
struct Aug {
  StateVec x;
  Matrix Phi;
  StateVec q_p;
  StateVec q_b;
};

class Rk4 {
 public:
  Rk4(const ControlAffineModel& model, const ControllerFn& backup, Mode mode)
      : model_(model), backup_(backup), mode_(mode) {}

  Aug deriv(const Aug& s) const {
    Aug d;
    d.x = model_.f(s.x) + model_.g(s.x) * backup_(s.x);
    if (mode_ != Mode::Flow) {
      const Matrix F = model_.jac_f_cl(s.x);
      if (mode_ == Mode::Sensitivity) {
        d.Phi = F * s.Phi;
      } else {
        d.q_p = F * s.q_p;
        d.q_b = F * s.q_b;
      }
    }
    return d;
  }

  void step(Aug& s, double dt) const {
    const Aug k1 = deriv(s);
    const Aug k2 = deriv(blend(s, k1, 0.5 * dt));
    const Aug k3 = deriv(blend(s, k2, 0.5 * dt));
    const Aug k4 = deriv(blend(s, k3, dt));
    const double w = dt / 6.0;
    s.x += w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    if (mode_ == Mode::Sensitivity) {
      s.Phi += w * (k1.Phi + 2.0 * k2.Phi + 2.0 * k3.Phi + k4.Phi);
    } else if (mode_ == Mode::PushForward) {
      s.q_p += w * (k1.q_p + 2.0 * k2.q_p + 2.0 * k3.q_p + k4.q_p);
      s.q_b += w * (k1.q_b + 2.0 * k2.q_b + 2.0 * k3.q_b + k4.q_b);
    }
    if (!s.x.allFinite()) throw DivergedFlow("backup flow diverged");
  }

 private:
  static Aug blend(const Aug& s, const Aug& d, double h) {
    Aug out;
    out.x = s.x + h * d.x;
    if (d.Phi.size() > 0) out.Phi = s.Phi + h * d.Phi;
    if (d.q_p.size() > 0) out.q_p = s.q_p + h * d.q_p;
    if (d.q_b.size() > 0) out.q_b = s.q_b + h * d.q_b;
    return out;
  }

  const ControlAffineModel& model_;
  const ControllerFn& backup_;
  Mode mode_;
};

FlowBundle run(const ControlAffineModel& model, const ControllerFn& backup,
               const ControllerFn* primary, const StateVec& x0,
               const HorizonGrid& grid, Mode mode) {
  validate_grid(grid);
  if (x0.size() != model.n) {
    throw ValidationError("integrate: state dimension mismatch");
  }
  if (!x0.allFinite()) throw NumericalError("integrate: non-finite x0");

  FlowBundle bundle;
  bundle.grid = grid;
  bundle.phi.reserve(grid.N + 1);

  Aug s;
  s.x = x0;
  switch (mode) {
    case Mode::Flow:
      bundle.ode_scalar_count = ode_count_flow(model.n);
      break;
    case Mode::Sensitivity:
      s.Phi = Matrix::Identity(model.n, model.n);
      bundle.Phi.reserve(grid.N + 1);
      bundle.ode_scalar_count = ode_count_sensitivity(model.n);
      break;
    case Mode::PushForward:
      s.q_p = model.f(x0) + model.g(x0) * (*primary)(x0);
      s.q_b = model.f(x0) + model.g(x0) * backup(x0);
      bundle.q_p.reserve(grid.N + 1);
      bundle.q_b.reserve(grid.N + 1);
      bundle.ode_scalar_count = ode_count_push_forward(model.n);
      break;
  }

  const Rk4 rk4(model, backup, mode);
  const int substeps = grid.substeps();
  const double dt = grid.delta() / substeps;

  auto record = [&]() {
    bundle.phi.push_back(s.x);
    if (mode == Mode::Sensitivity) bundle.Phi.push_back(s.Phi);
    if (mode == Mode::PushForward) {
      bundle.q_p.push_back(s.q_p);
      bundle.q_b.push_back(s.q_b);
    }
  };

  record();
  for (int i = 0; i < grid.N; ++i) {
    for (int k = 0; k < substeps; ++k) rk4.step(s, dt);
    record();
  }
  return bundle;
}

}  // namespace

FlowBundle integrate_flow(const ControlAffineModel& model,
                          const ControllerFn& backup, const StateVec& x0,
                          const HorizonGrid& grid) {
  return run(model, backup, nullptr, x0, grid, Mode::Flow);
}

FlowBundle integrate_sensitivity(const ControlAffineModel& model,
                                 const ControllerFn& backup, const StateVec& x0,
                                 const HorizonGrid& grid) {
  return run(model, backup, nullptr, x0, grid, Mode::Sensitivity);
}

FlowBundle integrate_push_forward(const ControlAffineModel& model,
                                  const ControllerFn& backup,
                                  const ControllerFn& primary,
                                  const StateVec& x0, const HorizonGrid& grid) {
  return run(model, backup, &primary, x0, grid, Mode::PushForward);
}

}  // namespace safectrl
