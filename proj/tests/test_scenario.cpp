#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <safectrl/scenario.hpp>

#include <string>

using namespace safectrl;

namespace {

const char* kMinimal = R"({
  "scenario": "double_integrator",
  "controller": "oi",
  "sim": {"t_final": 1.0, "dt_ctrl": 0.01, "x0": [-1.0, 0.0]}
})";

const char* kFull = R"({
  "scenario": "double_integrator",
  "controller": ["oi", "bcbf_qp", "blended"],
  "model": {"u_max": 2.0, "kappa": 20.0},
  "alpha": {"h": 0.5, "h_b": 0.4},
  "horizon": {"T": 1.0, "N": 50, "dt_int": 0.01},
  "sim": {"t_final": 2.0, "dt_ctrl": 0.01, "dt_plant": 0.005, "x0": [-2.0, 0.1]},
  "blending": {"eta": 25.0},
  "output": {"prefix": "di_demo"},
  "seed": 42
})";

std::string with_replacement(std::string text, const std::string& needle,
                             const std::string& replacement) {
  text.replace(text.find(needle), needle.size(), replacement);
  return text;
}

}  // namespace

TEST_CASE("minimal document resolves defaults") {
  const Scenario s = parse_scenario_text(kMinimal);
  CHECK(s.model_name == "double_integrator");
  REQUIRE(s.runs.size() == 1);
  CHECK(s.runs[0].name == "oi");
  CHECK(s.runs[0].config.controller == ControllerKind::Oi);
  CHECK(s.runs[0].config.t_final == 1.0);
  CHECK(s.runs[0].config.dt_plant == 0.01);  // defaults to dt_ctrl
  CHECK(s.runs[0].config.grid.T == 2.0);     // model default horizon
  CHECK(s.output_prefix == "double_integrator");
  CHECK(s.seed == 0);
  CHECK(s.bundle.model.input_box.hi[0] == 1.0);
}

TEST_CASE("full document threads every section through") {
  const Scenario s = parse_scenario_text(kFull);
  REQUIRE(s.runs.size() == 3);
  CHECK(s.runs[0].name == "oi");
  CHECK(s.runs[1].name == "bcbf_qp");
  CHECK(s.runs[2].name == "blended");
  for (const NamedConfig& run : s.runs) {
    CHECK(run.config.grid.T == 1.0);
    CHECK(run.config.grid.N == 50);
    CHECK(run.config.eta == 25.0);
    CHECK(run.config.dt_plant == 0.005);
  }
  CHECK(s.bundle.model.input_box.hi[0] == 2.0);
  CHECK(s.bundle.safety.alpha_gain == 0.5);
  CHECK(s.bundle.safety.alpha_b_gain == 0.4);
  CHECK(s.output_prefix == "di_demo");
  CHECK(s.seed == 42);
}

TEST_CASE("aircraft documents build the fixed-wing bundle") {
  const char* text = R"({
    "scenario": "aircraft",
    "controller": "oi",
    "model": {"c6": 300.0, "p_target": [25000.0, 100.0]},
    "sim": {"t_final": 1.0, "dt_ctrl": 0.02,
            "x0": [0, 0, 0, 0, 0, 10000, 0, 1]}
  })";
  const Scenario s = parse_scenario_text(text);
  CHECK(s.bundle.model.n == 8);
  CHECK(s.bundle.model.m == 2);
  CHECK(s.runs[0].config.grid.N == 40);  // aircraft default horizon
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kMinimal, "\"scenario\"",
                                           "\"typo\": 1, \"scenario\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"u_max\"",
                                           "\"u_maxx\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"t_final\"",
                                           "\"tfinal\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"eta\"", "\"rate\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"T\"", "\"horizon_T\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"prefix\"", "\"dir\"")),
      ValidationError);
}

TEST_CASE("structural problems are rejected") {
  // Malformed JSON.
  CHECK_THROWS_AS(parse_scenario_text("{"), ValidationError);
  // Missing required sections.
  CHECK_THROWS_AS(parse_scenario_text(R"({"scenario": "aircraft"})"),
                  ValidationError);
  // Unknown scenario and controller names.
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kMinimal, "double_integrator",
                                           "triple_integrator")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kMinimal, "\"oi\"", "\"pid\"")),
      ValidationError);
  // Duplicate controllers would collide on output names.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kMinimal, "\"oi\"", "[\"oi\", \"oi\"]")),
      ValidationError);
  // Wrong types.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kMinimal, "\"t_final\": 1.0", "\"t_final\": \"1\"")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kMinimal, "[-1.0, 0.0]", "[-1.0, \"x\"]")),
      ValidationError);
  // Negative seed.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kFull, "\"seed\": 42", "\"seed\": -3")),
      ValidationError);
}

TEST_CASE("parameter values outside the preconditions are rejected") {
  // Negative horizon.
  CHECK_THROWS_AS(
      parse_scenario_text(with_replacement(kFull, "\"T\": 1.0", "\"T\": -1.0")),
      ValidationError);
  // x0 dimension mismatch.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kMinimal, "[-1.0, 0.0]", "[-1.0, 0.0, 0.0]")),
      ValidationError);
  // dt_plant does not divide dt_ctrl.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kFull, "\"dt_plant\": 0.005", "\"dt_plant\": 0.003")),
      ValidationError);
  // Blended requested without an eta.
  const char* no_eta = R"({
    "scenario": "double_integrator",
    "controller": "blended",
    "sim": {"t_final": 1.0, "dt_ctrl": 0.01, "x0": [-1.0, 0.0]}
  })";
  CHECK_THROWS_AS(parse_scenario_text(no_eta), ValidationError);
  // Nonpositive alpha gain.
  CHECK_THROWS_AS(
      parse_scenario_text(
          with_replacement(kFull, "\"h\": 0.5", "\"h\": 0.0")),
      ValidationError);
  // Aircraft physical parameter out of range (bank angle at the gimbal).
  const char* bad_aircraft = R"({
    "scenario": "aircraft",
    "controller": "oi",
    "model": {"phi_star": 1.5707963267948966},
    "sim": {"t_final": 1.0, "dt_ctrl": 0.02,
            "x0": [0, 0, 0, 0, 0, 10000, 0, 1]}
  })";
  CHECK_THROWS_AS(parse_scenario_text(bad_aircraft), ValidationError);
}

TEST_CASE("files load through the same path") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "safectrl_scenario";
  fs::create_directories(dir);
  const fs::path path = dir / "min.json";
  {
    std::ofstream out(path);
    out << kMinimal;
  }
  const Scenario s = load_scenario(path);
  CHECK(s.runs.size() == 1);
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), ValidationError);
  fs::remove_all(dir);
}
