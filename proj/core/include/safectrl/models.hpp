// Concrete plants with their safe sets, backup sets, and controllers:
// a planar double integrator and a fixed-wing aircraft geofencing scenario.
#pragma once

#include "safectrl/integrate.hpp"
#include "safectrl/types.hpp"

#include <Eigen/Core>

#include <string>

namespace safectrl {

// A plant bundled with everything the safety filters need: the control-affine
// model, primary and backup laws, safety functions, and a default backup
// horizon. A sampling box bounds the states used by randomized checks.
struct ModelBundle {
  std::string name;
  ControlAffineModel model;
  ControllerFn primary;
  ControllerFn backup;
  SafetySpec safety;
  HorizonGrid default_grid;
  StateVec sample_lo;
  StateVec sample_hi;
};

// Smooth two-sided saturation onto (lo, hi): lo + sp(v-lo) - sp(v-hi) with
// sp the scaled softplus. Strictly inside the interval, monotone, C-infinity.
double smooth_saturate(double v, double lo, double hi, double beta);
// d/dv of smooth_saturate: sigmoid(beta*(v-lo)) - sigmoid(beta*(v-hi)).
double smooth_saturate_deriv(double v, double lo, double hi, double beta);

// Smooth under-approximation of min(values): -(1/kappa) * ln sum exp(-kappa v).
// weights, when given, receives the softmax weights of the minimum.
double smooth_min(const Eigen::VectorXd& values, double kappa,
                  Eigen::VectorXd* weights = nullptr);

// ---------------------------------------------------------------------------
// Double integrator: states (x1, x2), dynamics x1' = x2, x2' = u, |u| <= 1.
// Safety h = -x1 keeps the position nonpositive; the backup law brakes at
// full authority toward the quadrant {x1 <= 0, x2 <= 0}, whose smooth
// under-approximation serves as the backup set.
// ---------------------------------------------------------------------------

struct DoubleIntegratorParams {
  double u_max = 1.0;
  double kappa = 10.0;        // smooth-min sharpness of the backup set
  double alpha_gain = 0.3;    // class-K slope for the safety constraint
  double alpha_b_gain = 0.3;  // class-K slope for the backup-set constraint
  HorizonGrid grid{2.0, 100, 0.01};
};

ModelBundle make_double_integrator(const DoubleIntegratorParams& params = {});

// ---------------------------------------------------------------------------
// Fixed-wing aircraft, reduced-order coordinated-flight model.
// States: (roll, pitch, yaw, north, east, altitude, roll_rate, load_factor).
// Inputs: commanded roll rate and commanded load factor, each through a
// first-order lag. The safe set is the half-plane behind a geofence; the
// backup law banks into a level circular hold at the trim altitude.
// ---------------------------------------------------------------------------

namespace aircraft_state {
inline constexpr int roll = 0;
inline constexpr int pitch = 1;
inline constexpr int yaw = 2;
inline constexpr int north = 3;
inline constexpr int east = 4;
inline constexpr int alt = 5;
inline constexpr int roll_rate = 6;
inline constexpr int load = 7;
inline constexpr int count = 8;
}  // namespace aircraft_state

struct AircraftParams {
  double v_t = 200.0;    // true airspeed, m/s
  double g_d = 9.81;     // gravitational acceleration, m/s^2
  double tau_p = 1.0;    // roll-rate lag, s
  double tau_z = 1.0;    // load-factor lag, s
  double phi_star = -0.25 * 3.14159265358979323846;  // hold bank angle, rad
  double alt_star = 10000.0;                         // hold altitude, m

  // Input box: commanded roll rate and commanded load factor.
  double u1_min = -1.5707963267948966;
  double u1_max = 1.5707963267948966;
  double u2_min = -1.0;
  double u2_max = 4.0;

  // Feedback gains shared by the backup and pursuit laws.
  double k_phi = 4.0;
  double k_p = 2.0;
  double k_n = 1.0;
  double k_h = 0.01;
  double k_theta = 8.0;
  double k_psi = 1.0;

  // Backup-set band half-widths around the circular hold, and the geofence
  // clearance of the hold circle's center.
  double c1 = 0.2;     // roll band, rad
  double c2 = 0.2;     // pitch band, rad
  double c3 = 100.0;   // altitude band, m
  double c4 = 0.2;     // roll-rate band, rad/s
  double c5 = 0.5;     // load-factor band
  double c6 = 200.0;   // extra clearance of the hold center, m

  double kappa = 100.0;  // smooth-min sharpness of the backup set
  double beta = 20.0;    // softplus saturation sharpness

  // Geofence: half-plane { n_g . (p - p_g) >= 0 } in (north, east).
  Eigen::Vector2d p_g{12000.0, 0.0};
  Eigen::Vector2d n_g{-1.0, 0.0};
  // Pursuit setpoint, deliberately beyond the geofence.
  Eigen::Vector2d p_target{20000.0, 0.0};

  double alpha_gain = 0.5;
  double alpha_b_gain = 0.5;
  HorizonGrid grid{20.0, 40, 0.05};

  double load_star() const { return 1.0 / std::cos(phi_star); }
  // Positive turn radius of the hold circle and the direction of travel
  // around it (+1 turns toward positive yaw rate).
  double turn_radius() const {
    return std::abs(v_t * v_t / (g_d * std::tan(phi_star)));
  }
  double turn_sign() const { return phi_star >= 0.0 ? 1.0 : -1.0; }
  double signed_radius() const { return turn_sign() * turn_radius(); }
  double turn_period() const {
    return 2.0 * 3.14159265358979323846 * turn_radius() / v_t;
  }
};

ModelBundle make_aircraft(const AircraftParams& params = {});

// Distance-to-geofence component functions of the backup set: five quadratic
// bands around the hold trim plus the hold-circle clearance term. Returned in
// that order; the smooth minimum of the six is the backup-set function.
Eigen::VectorXd aircraft_backup_components(const AircraftParams& params,
                                           const StateVec& x);

// Clearance of the hold circle traced from state x: stays constant along the
// backup flow and never exceeds the geofence distance.
double aircraft_hold_clearance(const AircraftParams& params, const StateVec& x);

// Closed-form position along the backup hold circle after time tau, valid
// when the turn states already sit at their hold values.
Eigen::Vector2d aircraft_turn_position(const AircraftParams& params,
                                       const StateVec& x, double tau);

}  // namespace safectrl
