#include "safectrl/models.hpp"

#include <cmath>

namespace safectrl {

namespace {

namespace st = aircraft_state;

constexpr double kPi = 3.14159265358979323846;

double scaled_softplus(double z, double beta) {
  // max(z, 0) + log1p(exp(-beta*|z|)) / beta, stable for large |z|.
  return std::max(z, 0.0) + std::log1p(std::exp(-beta * std::abs(z))) / beta;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double cos_pitch_checked(double theta) {
  const double c = std::cos(theta);
  if (std::abs(c) < 1e-6) {
    throw GimbalSingularity("aircraft model: pitch within 1e-6 of +/-90 deg");
  }
  return c;
}

// Pre-saturation feedback commands shared by the backup and pursuit laws.
double roll_rate_cmd(const AircraftParams& p, const StateVec& x,
                     double roll_target) {
  return x[st::roll_rate] +
         p.tau_p * (p.k_phi * (roll_target - x[st::roll]) -
                    p.k_p * x[st::roll_rate]);
}

double load_cmd(const AircraftParams& p, const StateVec& x,
                double load_target) {
  return x[st::load] +
         p.tau_z * (p.k_n * (load_target - x[st::load]) +
                    p.k_h * (p.alt_star - x[st::alt]) -
                    p.k_theta * x[st::pitch]);
}

ControlVec saturated_command(const AircraftParams& p, double v1, double v2) {
  ControlVec u(2);
  u[0] = smooth_saturate(v1, p.u1_min, p.u1_max, p.beta);
  u[1] = smooth_saturate(v2, p.u2_min, p.u2_max, p.beta);
  return u;
}

void validate_params(const AircraftParams& p) {
  if (std::abs(p.n_g.norm() - 1.0) > 1e-9) {
    throw ValidationError("aircraft params: geofence normal must be unit length");
  }
  if (std::abs(p.phi_star) < 1e-6 || std::abs(p.phi_star) >= 0.5 * kPi) {
    throw ValidationError("aircraft params: hold bank angle must be nonzero and below 90 deg");
  }
  if (p.v_t <= 0.0 || p.g_d <= 0.0 || p.tau_p <= 0.0 || p.tau_z <= 0.0) {
    throw ValidationError("aircraft params: physical constants must be positive");
  }
  if (p.c1 <= 0.0 || p.c2 <= 0.0 || p.c3 <= 0.0 || p.c4 <= 0.0 ||
      p.c5 <= 0.0 || p.c6 <= 0.0 || p.kappa <= 0.0 || p.beta <= 0.0) {
    throw ValidationError("aircraft params: band widths and sharpness must be positive");
  }
}

}  // namespace

double smooth_saturate(double v, double lo, double hi, double beta) {
  return lo + scaled_softplus(v - lo, beta) - scaled_softplus(v - hi, beta);
}

double smooth_saturate_deriv(double v, double lo, double hi, double beta) {
  return sigmoid(beta * (v - lo)) - sigmoid(beta * (v - hi));
}

double aircraft_hold_clearance(const AircraftParams& p, const StateVec& x) {
  const double h = p.n_g[0] * (x[st::north] - p.p_g[0]) +
                   p.n_g[1] * (x[st::east] - p.p_g[1]);
  const double psi = x[st::yaw];
  const Eigen::Vector2d left_normal(-std::sin(psi), std::cos(psi));
  return h + p.signed_radius() * p.n_g.dot(left_normal) - p.turn_radius() -
         p.c6;
}

Eigen::VectorXd aircraft_backup_components(const AircraftParams& p,
                                           const StateVec& x) {
  Eigen::VectorXd v(6);
  const double roll_err = p.phi_star - x[st::roll];
  const double alt_err = p.alt_star - x[st::alt];
  const double load_err = p.load_star() - x[st::load];
  v[0] = p.c1 * p.c1 - roll_err * roll_err;
  v[1] = p.c2 * p.c2 - x[st::pitch] * x[st::pitch];
  v[2] = p.c3 * p.c3 - alt_err * alt_err;
  v[3] = p.c4 * p.c4 - x[st::roll_rate] * x[st::roll_rate];
  v[4] = p.c5 * p.c5 - load_err * load_err;
  v[5] = aircraft_hold_clearance(p, x);
  return v;
}

Eigen::Vector2d aircraft_turn_position(const AircraftParams& p,
                                       const StateVec& x, double tau) {
  const double rho_s = p.signed_radius();
  const double psi = x[st::yaw];
  const double psi_b = psi + (p.v_t / rho_s) * tau;
  const Eigen::Vector2d n_now(-std::sin(psi), std::cos(psi));
  const Eigen::Vector2d n_then(-std::sin(psi_b), std::cos(psi_b));
  return Eigen::Vector2d(x[st::north], x[st::east]) + rho_s * (n_now - n_then);
}

ModelBundle make_aircraft(const AircraftParams& params) {
  validate_params(params);
  const AircraftParams p = params;

  ModelBundle bundle;
  bundle.name = "aircraft";

  ControlAffineModel& model = bundle.model;
  model.n = st::count;
  model.m = 2;
  model.f = [p](const StateVec& x) {
    const double phi = x[st::roll];
    const double theta = x[st::pitch];
    const double psi = x[st::yaw];
    const double rate = x[st::roll_rate];
    const double load = x[st::load];
    const double c_t = cos_pitch_checked(theta);
    const double gv = p.g_d / p.v_t;
    StateVec dx(st::count);
    dx[st::roll] = rate + load * gv * std::sin(phi) * std::tan(theta);
    dx[st::pitch] = gv * (load * std::cos(phi) - c_t);
    dx[st::yaw] = gv * load * std::sin(phi) / c_t;
    dx[st::north] = p.v_t * c_t * std::cos(psi);
    dx[st::east] = p.v_t * c_t * std::sin(psi);
    dx[st::alt] = p.v_t * std::sin(theta);
    dx[st::roll_rate] = -rate / p.tau_p;
    dx[st::load] = -load / p.tau_z;
    return dx;
  };
  model.g = [p](const StateVec&) {
    Matrix g = Matrix::Zero(st::count, 2);
    g(st::roll_rate, 0) = 1.0 / p.tau_p;
    g(st::load, 1) = 1.0 / p.tau_z;
    return g;
  };
  model.input_box.lo = ControlVec(2);
  model.input_box.lo << p.u1_min, p.u2_min;
  model.input_box.hi = ControlVec(2);
  model.input_box.hi << p.u1_max, p.u2_max;

  // Jacobian of the backup closed loop f + g * k_b, including the feedback
  // paths through the smooth saturation.
  model.jac_f_cl = [p](const StateVec& x) {
    const double phi = x[st::roll];
    const double theta = x[st::pitch];
    const double psi = x[st::yaw];
    const double rate = x[st::roll_rate];
    const double load = x[st::load];
    const double c_t = cos_pitch_checked(theta);
    const double s_t = std::sin(theta);
    const double t_t = s_t / c_t;
    const double sec2 = 1.0 / (c_t * c_t);
    const double gv = p.g_d / p.v_t;
    const double s_phi = std::sin(phi);
    const double c_phi = std::cos(phi);

    Matrix jac = Matrix::Zero(st::count, st::count);
    jac(st::roll, st::roll) = load * gv * c_phi * t_t;
    jac(st::roll, st::pitch) = load * gv * s_phi * sec2;
    jac(st::roll, st::roll_rate) = 1.0;
    jac(st::roll, st::load) = gv * s_phi * t_t;

    jac(st::pitch, st::roll) = -gv * load * s_phi;
    jac(st::pitch, st::pitch) = gv * s_t;
    jac(st::pitch, st::load) = gv * c_phi;

    jac(st::yaw, st::roll) = gv * load * c_phi / c_t;
    jac(st::yaw, st::pitch) = gv * load * s_phi * s_t * sec2;
    jac(st::yaw, st::load) = gv * s_phi / c_t;

    jac(st::north, st::pitch) = -p.v_t * s_t * std::cos(psi);
    jac(st::north, st::yaw) = -p.v_t * c_t * std::sin(psi);
    jac(st::east, st::pitch) = -p.v_t * s_t * std::sin(psi);
    jac(st::east, st::yaw) = p.v_t * c_t * std::cos(psi);
    jac(st::alt, st::pitch) = p.v_t * c_t;

    const double v1 = roll_rate_cmd(p, x, p.phi_star);
    const double d1 = smooth_saturate_deriv(v1, p.u1_min, p.u1_max, p.beta);
    jac(st::roll_rate, st::roll) = d1 * (-p.k_phi);
    jac(st::roll_rate, st::roll_rate) =
        (-1.0 + d1 * (1.0 - p.tau_p * p.k_p)) / p.tau_p;

    const double v2 = load_cmd(p, x, p.load_star());
    const double d2 = smooth_saturate_deriv(v2, p.u2_min, p.u2_max, p.beta);
    jac(st::load, st::pitch) = d2 * (-p.k_theta);
    jac(st::load, st::alt) = d2 * (-p.k_h);
    jac(st::load, st::load) = (-1.0 + d2 * (1.0 - p.tau_z * p.k_n)) / p.tau_z;
    return jac;
  };

  bundle.backup = ControllerFn{
      [p](const StateVec& x) {
        return saturated_command(p, roll_rate_cmd(p, x, p.phi_star),
                                 load_cmd(p, x, p.load_star()));
      },
      "hold_turn"};

  bundle.primary = ControllerFn{
      [p](const StateVec& x) {
        const double dn = p.p_target[0] - x[st::north];
        const double de = p.p_target[1] - x[st::east];
        const double yaw_target = std::atan2(de, dn);
        const double yaw_err =
            std::remainder(yaw_target - x[st::yaw], 2.0 * kPi);
        const double bank_limit = 0.25 * kPi;
        const double roll_target = smooth_saturate(
            p.k_psi * yaw_err * p.v_t / p.g_d, -bank_limit, bank_limit, p.beta);
        const double load_target = 1.0 / std::cos(roll_target);
        return saturated_command(p, roll_rate_cmd(p, x, roll_target),
                                 load_cmd(p, x, load_target));
      },
      "pursuit"};

  bundle.safety.h = [p](const StateVec& x) {
    return p.n_g[0] * (x[st::north] - p.p_g[0]) +
           p.n_g[1] * (x[st::east] - p.p_g[1]);
  };
  bundle.safety.grad_h = [p](const StateVec&) {
    StateVec grad = StateVec::Zero(st::count);
    grad[st::north] = p.n_g[0];
    grad[st::east] = p.n_g[1];
    return grad;
  };
  bundle.safety.h_b = [p](const StateVec& x) {
    return smooth_min(aircraft_backup_components(p, x), p.kappa);
  };
  bundle.safety.grad_h_b = [p](const StateVec& x) {
    Eigen::VectorXd w;
    smooth_min(aircraft_backup_components(p, x), p.kappa, &w);
    StateVec grad = StateVec::Zero(st::count);
    grad[st::roll] = w[0] * 2.0 * (p.phi_star - x[st::roll]);
    grad[st::pitch] = w[1] * (-2.0 * x[st::pitch]);
    grad[st::alt] = w[2] * 2.0 * (p.alt_star - x[st::alt]);
    grad[st::roll_rate] = w[3] * (-2.0 * x[st::roll_rate]);
    grad[st::load] = w[4] * 2.0 * (p.load_star() - x[st::load]);
    grad[st::north] = w[5] * p.n_g[0];
    grad[st::east] = w[5] * p.n_g[1];
    const double psi = x[st::yaw];
    grad[st::yaw] = w[5] * p.signed_radius() *
                    (p.n_g[0] * (-std::cos(psi)) + p.n_g[1] * (-std::sin(psi)));
    return grad;
  };
  bundle.safety.alpha_gain = p.alpha_gain;
  bundle.safety.alpha_b_gain = p.alpha_b_gain;

  bundle.default_grid = p.grid;
  bundle.sample_lo = StateVec(st::count);
  bundle.sample_lo << -0.8, -0.4, -kPi, 0.0, -4000.0, 9600.0, -0.5, 0.0;
  bundle.sample_hi = StateVec(st::count);
  bundle.sample_hi << 0.8, 0.4, kPi, 11000.0, 4000.0, 10400.0, 0.5, 2.0;
  return bundle;
}

}  // namespace safectrl
