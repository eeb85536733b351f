#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <safectrl/types.hpp>

#include <limits>

using namespace safectrl;

TEST_CASE("box projection clamps and is idempotent") {
  InputBox box;
  box.lo = ControlVec::Constant(2, -1.0);
  box.hi = ControlVec::Constant(2, 2.0);
  ControlVec u(2);
  u << -5.0, 0.5;
  const ControlVec p = box_project(box, u);
  CHECK(p[0] == -1.0);
  CHECK(p[1] == 0.5);
  CHECK((box_project(box, p) - p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(box.contains(p, 0.0));
  CHECK_FALSE(box.contains(u, 1e-9));
}

TEST_CASE("box validation") {
  InputBox box;
  box.lo = ControlVec::Constant(2, -1.0);
  box.hi = ControlVec::Constant(3, 1.0);
  CHECK_THROWS_AS(validate_box(box), ValidationError);
  box.hi = ControlVec::Constant(2, -1.0);  // lo == hi not allowed
  CHECK_THROWS_AS(validate_box(box), ValidationError);
  box.hi = ControlVec::Constant(2, 1.0);
  CHECK_NOTHROW(validate_box(box));
}

TEST_CASE("class-K scaling is linear in its argument") {
  CHECK(alpha_eval(2.0, 3.0) == 6.0);
  CHECK(alpha_eval(0.5, -1.0) == -0.5);
  CHECK(alpha_eval(1.0, 0.0) == 0.0);
}

TEST_CASE("closed-loop evaluation rejects non-finite drift") {
  ControlAffineModel model;
  model.n = 1;
  model.m = 1;
  model.f = [](const StateVec& x) {
    StateVec dx(1);
    dx << 1.0 / x[0];  // singular at the origin
    return dx;
  };
  model.g = [](const StateVec&) { return Matrix::Constant(1, 1, 1.0); };
  model.input_box.lo = ControlVec::Constant(1, -1.0);
  model.input_box.hi = ControlVec::Constant(1, 1.0);
  ControllerFn zero{[](const StateVec&) { return ControlVec::Zero(1); }, "zero"};
  StateVec good(1), bad(1);
  good << 2.0;
  bad << 0.0;
  CHECK(eval_closed_loop(model, zero, good)[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(eval_closed_loop(model, zero, bad), NumericalError);
}

TEST_CASE("solver status names") {
  CHECK(to_string(SolverStatus::ClosedForm) == std::string("closed_form"));
  CHECK(to_string(SolverStatus::Optimal) == std::string("optimal"));
  CHECK(to_string(SolverStatus::Infeasible) == std::string("infeasible"));
  CHECK(to_string(SolverStatus::MaxIterations) == std::string("max_iterations"));
}

TEST_CASE("exception hierarchy") {
  CHECK_THROWS_AS(throw DivergedFlow("x"), NumericalError);
  CHECK_THROWS_AS(throw GimbalSingularity("x"), NumericalError);
  CHECK_THROWS_AS(throw NumericalError("x"), std::runtime_error);
  CHECK_THROWS_AS(throw ValidationError("x"), std::runtime_error);
}
