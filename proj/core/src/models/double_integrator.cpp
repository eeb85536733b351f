#include "safectrl/models.hpp"

#include <cmath>

namespace safectrl {

namespace {

// Stable softmax weights of the minimum of (v1, v2) at sharpness kappa.
void min_weights(double v1, double v2, double kappa, double& w1, double& w2) {
  const double mn = std::min(v1, v2);
  const double e1 = std::exp(-kappa * (v1 - mn));
  const double e2 = std::exp(-kappa * (v2 - mn));
  const double sum = e1 + e2;
  w1 = e1 / sum;
  w2 = e2 / sum;
}

}  // namespace

double smooth_min(const Eigen::VectorXd& values, double kappa,
                  Eigen::VectorXd* weights) {
  const double mn = values.minCoeff();
  const Eigen::VectorXd shifted = (-kappa * (values.array() - mn)).exp();
  const double sum = shifted.sum();
  if (weights != nullptr) {
    *weights = shifted / sum;
  }
  return mn - std::log(sum) / kappa;
}

ModelBundle make_double_integrator(const DoubleIntegratorParams& params) {
  ModelBundle bundle;
  bundle.name = "double_integrator";

  ControlAffineModel& model = bundle.model;
  model.n = 2;
  model.m = 1;
  model.f = [](const StateVec& x) {
    StateVec dx(2);
    dx << x[1], 0.0;
    return dx;
  };
  model.g = [](const StateVec&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  model.input_box.lo = ControlVec::Constant(1, -params.u_max);
  model.input_box.hi = ControlVec::Constant(1, params.u_max);
  // Backup law is constant, so the closed-loop Jacobian is the drift's.
  model.jac_f_cl = [](const StateVec&) {
    Matrix jac(2, 2);
    jac << 0.0, 1.0, 0.0, 0.0;
    return jac;
  };

  const double u_max = params.u_max;
  bundle.primary = ControllerFn{
      [u_max](const StateVec&) { return ControlVec::Constant(1, u_max); },
      "push"};
  bundle.backup = ControllerFn{
      [u_max](const StateVec&) { return ControlVec::Constant(1, -u_max); },
      "brake"};

  const double kappa = params.kappa;
  bundle.safety.h = [](const StateVec& x) { return -x[0]; };
  bundle.safety.grad_h = [](const StateVec&) {
    StateVec grad(2);
    grad << -1.0, 0.0;
    return grad;
  };
  // Smooth under-approximation of min(-x1, -x2).
  bundle.safety.h_b = [kappa](const StateVec& x) {
    Eigen::VectorXd vals(2);
    vals << -x[0], -x[1];
    return smooth_min(vals, kappa);
  };
  bundle.safety.grad_h_b = [kappa](const StateVec& x) {
    double w1 = 0.0, w2 = 0.0;
    min_weights(-x[0], -x[1], kappa, w1, w2);
    StateVec grad(2);
    grad << -w1, -w2;
    return grad;
  };
  bundle.safety.alpha_gain = params.alpha_gain;
  bundle.safety.alpha_b_gain = params.alpha_b_gain;

  bundle.default_grid = params.grid;
  bundle.sample_lo = StateVec(2);
  bundle.sample_lo << -3.0, -3.0;
  bundle.sample_hi = StateVec(2);
  bundle.sample_hi << 3.0, 3.0;
  return bundle;
}

}  // namespace safectrl
