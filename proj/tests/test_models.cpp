#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <safectrl/integrate.hpp>
#include <safectrl/models.hpp>

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace safectrl;
namespace st = aircraft_state;

namespace {

StateVec random_state(std::mt19937_64& rng, const StateVec& lo,
                      const StateVec& hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StateVec x(lo.size());
  for (int i = 0; i < lo.size(); ++i) {
    x[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
  }
  return x;
}

// A state on the aircraft hold trim: turn states pinned, yaw/position free.
StateVec hold_state(const AircraftParams& p, double yaw, double north,
                    double east) {
  StateVec x = StateVec::Zero(st::count);
  x[st::roll] = p.phi_star;
  x[st::pitch] = 0.0;
  x[st::yaw] = yaw;
  x[st::north] = north;
  x[st::east] = east;
  x[st::alt] = p.alt_star;
  x[st::roll_rate] = 0.0;
  x[st::load] = p.load_star();
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Double integrator
// ---------------------------------------------------------------------------

TEST_CASE("double integrator dynamics and controllers") {
  const auto bundle = make_double_integrator();
  StateVec x(2);
  x << 0.7, -1.3;
  const StateVec dx = bundle.model.f(x);
  CHECK(dx[0] == -1.3);
  CHECK(dx[1] == 0.0);
  const Matrix g = bundle.model.g(x);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(bundle.primary(x)[0] == 1.0);
  CHECK(bundle.backup(x)[0] == -1.0);
  CHECK(bundle.model.input_box.lo[0] == -1.0);
  CHECK(bundle.model.input_box.hi[0] == 1.0);
  CHECK(bundle.safety.h(x) == -0.7);
}

TEST_CASE("double integrator backup set under-approximates the quadrant") {
  const auto bundle = make_double_integrator();
  std::mt19937_64 rng(testoracle::test_seed());
  const double kappa = DoubleIntegratorParams{}.kappa;
  for (int i = 0; i < 1000; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const double exact_min = std::min(-x[0], -x[1]);
    const double hb = bundle.safety.h_b(x);
    CHECK(hb <= exact_min + 1e-12);
    CHECK(hb >= exact_min - std::log(2.0) / kappa - 1e-12);
    // Backup set inside safe set.
    CHECK(hb <= bundle.safety.h(x) + 1e-12);
  }
  // Sharper smoothing converges to the exact minimum.
  DoubleIntegratorParams sharp;
  sharp.kappa = 1000.0;
  const auto bundle_sharp = make_double_integrator(sharp);
  StateVec x(2);
  x << -0.4, -0.6;  // min(-x1, -x2) = 0.4
  CHECK(std::abs(bundle_sharp.safety.h_b(x) - 0.4) <=
        std::log(2.0) / 1000.0 + 1e-12);
}

TEST_CASE("double integrator gradients match finite differences") {
  const auto bundle = make_double_integrator();
  std::mt19937_64 rng(testoracle::test_seed() + 1);
  for (int i = 0; i < 100; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const StateVec fd_h = testoracle::fd_gradient(bundle.safety.h, x);
    CHECK((fd_h - bundle.safety.grad_h(x)).cwiseAbs().maxCoeff() <= 1e-6);
    const StateVec fd_hb = testoracle::fd_gradient(bundle.safety.h_b, x);
    const StateVec an_hb = bundle.safety.grad_h_b(x);
    CHECK((fd_hb - an_hb).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + an_hb.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("double integrator closed-loop Jacobian matches finite differences") {
  const auto bundle = make_double_integrator();
  std::mt19937_64 rng(testoracle::test_seed() + 2);
  auto closed_loop = [&](const StateVec& x) {
    return StateVec(bundle.model.f(x) + bundle.model.g(x) * bundle.backup(x));
  };
  for (int i = 0; i < 20; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const Matrix fd = testoracle::fd_jacobian(closed_loop, x);
    CHECK((fd - bundle.model.jac_f_cl(x)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("double integrator backup flow keeps the quadrant invariant") {
  const auto bundle = make_double_integrator();
  HorizonGrid grid{4.0, 40, 0.02};
  for (double x1 : {-2.0, -1.0, -0.1, 0.0}) {
    for (double x2 : {-2.0, -0.5, 0.0}) {
      StateVec x0(2);
      x0 << x1, x2;
      const auto bundle_flow = integrate_flow(bundle.model, bundle.backup, x0, grid);
      for (const auto& phi : bundle_flow.phi) {
        CHECK(-phi[0] >= -1e-9);
        CHECK(-phi[1] >= -1e-9);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Aircraft
// ---------------------------------------------------------------------------

TEST_CASE("aircraft trim derivative at wings level") {
  const auto bundle = make_aircraft();
  const AircraftParams p;
  StateVec x = StateVec::Zero(st::count);
  x[st::alt] = p.alt_star;
  x[st::load] = 1.0;
  const StateVec dx = bundle.model.f(x);
  CHECK(dx[st::roll] == 0.0);
  CHECK(dx[st::pitch] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dx[st::yaw] == 0.0);
  CHECK(dx[st::north] == doctest::Approx(200.0));
  CHECK(dx[st::east] == 0.0);
  CHECK(dx[st::alt] == 0.0);
  CHECK(dx[st::roll_rate] == 0.0);
  CHECK(dx[st::load] == doctest::Approx(-1.0));
}

TEST_CASE("aircraft input matrix touches only the lag states") {
  const auto bundle = make_aircraft();
  StateVec x = StateVec::Zero(st::count);
  x[st::alt] = 10000.0;
  const Matrix g = bundle.model.g(x);
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) {
      if (i == st::roll_rate && j == 0) {
        CHECK(g(i, j) == doctest::Approx(1.0));
      } else if (i == st::load && j == 1) {
        CHECK(g(i, j) == doctest::Approx(1.0));
      } else {
        CHECK(g(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("vertical pitch raises the singularity error") {
  const auto bundle = make_aircraft();
  StateVec x = StateVec::Zero(st::count);
  x[st::pitch] = 0.5 * 3.14159265358979323846;
  CHECK_THROWS_AS(bundle.model.f(x), GimbalSingularity);
  CHECK_THROWS_AS(bundle.model.jac_f_cl(x), GimbalSingularity);
}

TEST_CASE("backup law holds the trim exactly") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  const StateVec x = hold_state(p, 0.3, 2000.0, -500.0);
  const ControlVec u = bundle.backup(x);
  CHECK(std::abs(u[0]) <= 1e-9);
  CHECK(u[1] == doctest::Approx(p.load_star()).epsilon(1e-9));
  // Turn states stay put under the closed loop.
  const StateVec dx = bundle.model.f(x) + bundle.model.g(x) * u;
  CHECK(std::abs(dx[st::roll]) <= 1e-9);
  CHECK(std::abs(dx[st::pitch]) <= 1e-9);
  CHECK(std::abs(dx[st::alt]) <= 1e-9);
  CHECK(std::abs(dx[st::roll_rate]) <= 1e-9);
  CHECK(std::abs(dx[st::load]) <= 1e-9);
  // Yaw rotates at the turn rate fixed by the bank angle.
  CHECK(dx[st::yaw] == doctest::Approx(p.v_t / p.signed_radius()).epsilon(1e-9));
}

TEST_CASE("smooth saturation stays strictly inside and tracks the bounds") {
  const double lo = -1.0, hi = 4.0, beta = 20.0;
  // Interior in exact arithmetic; at extreme excess the correction term
  // underflows, so doubles land exactly on the bound but never beyond it.
  for (double v : {-100.0, -1.5, -1.0, 0.0, 2.0, 4.0, 4.5, 100.0}) {
    const double s = smooth_saturate(v, lo, hi, beta);
    CHECK(s >= lo);
    CHECK(s <= hi);
  }
  for (double v : {-1.5, -1.0, 0.0, 2.0, 4.0, 4.5}) {
    const double s = smooth_saturate(v, lo, hi, beta);
    CHECK(s > lo);
    CHECK(s < hi);
  }
  CHECK(hi - smooth_saturate(100.0, lo, hi, beta) <= 1e-6);
  CHECK(smooth_saturate(-100.0, lo, hi, beta) - lo <= 1e-6);
  CHECK(smooth_saturate(1.5, lo, hi, beta) == doctest::Approx(1.5).epsilon(1e-9));
  // Derivative agrees with finite differences, including at the knees.
  for (double v : {-1.2, -1.0, -0.8, 1.5, 3.8, 4.0, 4.2}) {
    const double fd =
        (smooth_saturate(v + 1e-6, lo, hi, beta) -
         smooth_saturate(v - 1e-6, lo, hi, beta)) / 2e-6;
    CHECK(smooth_saturate_deriv(v, lo, hi, beta) ==
          doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("geofence distance is zero on the plane") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  StateVec x = hold_state(p, 0.0, p.p_g[0], p.p_g[1]);
  CHECK(bundle.safety.h(x) == 0.0);
  x[st::east] += 777.0;  // moving along the plane keeps h = 0 for n_g = (-1,0)
  CHECK(bundle.safety.h(x) == 0.0);
}

TEST_CASE("hold-circle geometry constants") {
  const AircraftParams p;
  // rho = v_t^2 / (g_d |tan(phi*)|) with phi* = -pi/4.
  CHECK(p.turn_radius() == doctest::Approx(4077.471967380224).epsilon(1e-12));
  CHECK(p.turn_sign() == -1.0);
  CHECK(p.load_star() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.turn_period() == doctest::Approx(2.0 * 3.14159265358979323846 *
                                           4077.471967380224 / 200.0));
}

TEST_CASE("backup set function under-approximates its components") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  std::mt19937_64 rng(testoracle::test_seed() + 3);
  for (int i = 0; i < 1000; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const Eigen::VectorXd comps = aircraft_backup_components(p, x);
    const double hb = bundle.safety.h_b(x);
    CHECK(hb <= comps.minCoeff() + 1e-9);
    CHECK(hb >= comps.minCoeff() - std::log(6.0) / p.kappa - 1e-9);
  }
}

TEST_CASE("hold states satisfy the nesting of safe and backup sets") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  std::mt19937_64 rng(testoracle::test_seed() + 4);
  std::uniform_real_distribution<double> yaw_dist(-3.14, 3.14);
  std::uniform_real_distribution<double> north_dist(0.0, 3000.0);
  std::uniform_real_distribution<double> east_dist(-3000.0, 3000.0);
  for (int i = 0; i < 200; ++i) {
    const StateVec x =
        hold_state(p, yaw_dist(rng), north_dist(rng), east_dist(rng));
    const double clearance = aircraft_hold_clearance(p, x);
    REQUIRE(clearance >= 0.0);  // sampling box keeps the hold circle clear
    CHECK(bundle.safety.h(x) >= clearance);
  }
  // The ordering h >= clearance holds everywhere, not just on the trim.
  for (int i = 0; i < 500; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    CHECK(bundle.safety.h(x) >= aircraft_hold_clearance(p, x) - 1e-12);
  }
}

TEST_CASE("aircraft gradients match finite differences") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  std::mt19937_64 rng(testoracle::test_seed() + 5);
  for (int i = 0; i < 100; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const StateVec fd_h = testoracle::fd_gradient(bundle.safety.h, x);
    CHECK((fd_h - bundle.safety.grad_h(x)).cwiseAbs().maxCoeff() <= 1e-6);
    const StateVec fd_hb = testoracle::fd_gradient(bundle.safety.h_b, x);
    const StateVec an_hb = bundle.safety.grad_h_b(x);
    CHECK((fd_hb - an_hb).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + an_hb.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("aircraft closed-loop Jacobian matches finite differences") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  std::mt19937_64 rng(testoracle::test_seed() + 6);
  auto closed_loop = [&](const StateVec& x) {
    return StateVec(bundle.model.f(x) + bundle.model.g(x) * bundle.backup(x));
  };
  for (int i = 0; i < 50; ++i) {
    const StateVec x = random_state(rng, bundle.sample_lo, bundle.sample_hi);
    const Matrix fd = testoracle::fd_jacobian(closed_loop, x);
    const Matrix an = bundle.model.jac_f_cl(x);
    CHECK((fd - an).cwiseAbs().maxCoeff() <=
          1e-4 * (1.0 + an.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("closed-form hold positions: identity, periodicity, flow match") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  const StateVec x = hold_state(p, 0.7, 1000.0, 300.0);

  const Eigen::Vector2d at_zero = aircraft_turn_position(p, x, 0.0);
  CHECK(at_zero[0] == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(at_zero[1] == doctest::Approx(300.0).epsilon(1e-12));

  const double period = p.turn_period();
  const Eigen::Vector2d after_turn = aircraft_turn_position(p, x, period);
  CHECK(std::abs(after_turn[0] - 1000.0) <= 1e-6);
  CHECK(std::abs(after_turn[1] - 300.0) <= 1e-6);

  HorizonGrid grid;
  grid.T = period;
  grid.N = 128;
  grid.dt_int = grid.delta() / 40.0;
  const auto flow = integrate_flow(bundle.model, bundle.backup, x, grid);
  for (int i = 0; i <= grid.N; i += 16) {
    const Eigen::Vector2d closed = aircraft_turn_position(p, x, grid.delta() * i);
    CHECK(std::abs(flow.phi[i][st::north] - closed[0]) <= 1e-6);
    CHECK(std::abs(flow.phi[i][st::east] - closed[1]) <= 1e-6);
  }
}

TEST_CASE("hold circle is invariant over a full period") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  std::mt19937_64 rng(testoracle::test_seed() + 7);
  std::uniform_real_distribution<double> yaw_dist(-3.14, 3.14);
  std::uniform_real_distribution<double> north_dist(0.0, 3000.0);
  std::uniform_real_distribution<double> east_dist(-2000.0, 2000.0);

  HorizonGrid grid;
  grid.T = p.turn_period();
  grid.N = 128;
  grid.dt_int = grid.delta() / 40.0;

  for (int trial = 0; trial < 50; ++trial) {
    const StateVec x0 =
        hold_state(p, yaw_dist(rng), north_dist(rng), east_dist(rng));
    const double clearance0 = aircraft_hold_clearance(p, x0);
    REQUIRE(clearance0 >= 0.0);
    const auto flow = integrate_flow(bundle.model, bundle.backup, x0, grid);
    for (int i = 0; i <= grid.N; i += 8) {
      CHECK(std::abs(aircraft_hold_clearance(p, flow.phi[i]) - clearance0) <=
            1e-6);
      const Eigen::VectorXd comps = aircraft_backup_components(p, flow.phi[i]);
      for (int c = 0; c < 5; ++c) {
        CHECK(comps[c] >= -1e-9);
      }
    }
  }
}

TEST_CASE("pursuit law: aligned flight commands zero roll") {
  const AircraftParams p;
  const auto bundle = make_aircraft(p);
  // Heading due north straight at the setpoint.
  StateVec x = hold_state(p, 0.0, 0.0, 0.0);
  x[st::roll] = 0.0;
  x[st::roll_rate] = 0.0;
  x[st::load] = 1.0;
  const ControlVec u = bundle.primary(x);
  CHECK(std::abs(u[0]) <= 1e-9);

  // Setpoint due east: positive yaw error, bank toward positive roll.
  AircraftParams east = p;
  east.p_target = Eigen::Vector2d(0.0, 8000.0);
  const auto bundle_east = make_aircraft(east);
  const ControlVec u_east = bundle_east.primary(x);
  CHECK(u_east[0] > 0.1);
  CHECK(u_east[1] > 1.0);  // banking needs extra load factor
}

TEST_CASE("aircraft parameter validation") {
  AircraftParams bad;
  bad.n_g = Eigen::Vector2d(1.0, 1.0);  // not unit length
  CHECK_THROWS_AS(make_aircraft(bad), ValidationError);
  AircraftParams flat;
  flat.phi_star = 0.0;  // no turn, infinite radius
  CHECK_THROWS_AS(make_aircraft(flat), ValidationError);
  AircraftParams negative;
  negative.c3 = -1.0;
  CHECK_THROWS_AS(make_aircraft(negative), ValidationError);
}
