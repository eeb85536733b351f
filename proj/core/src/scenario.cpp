#include "safectrl/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace safectrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("scenario " + where + ": " + what);
}

const json& expect_object(const json& node, const std::string& where) {
  if (!node.is_object()) fail(where, "expected an object");
  return node;
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_real(const json& obj, const std::string& where, const char* key,
                double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

double require_real(const json& obj, const std::string& where,
                    const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing '") + key + "'");
  return get_real(obj, where, key, 0.0);
}

int get_int(const json& obj, const std::string& where, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    fail(where, std::string("'") + key + "' must be an integer");
  }
  return v.get<int>();
}

Eigen::Vector2d get_vec2(const json& obj, const std::string& where,
                         const char* key, const Eigen::Vector2d& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    fail(where, std::string("'") + key + "' must be an array of two numbers");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

StateVec require_state(const json& obj, const std::string& where,
                       const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing '") + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) {
    fail(where, std::string("'") + key + "' must be a nonempty array");
  }
  StateVec x(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(where, std::string("'") + key + "' must hold numbers");
    x[static_cast<int>(i)] = v[i].get<double>();
  }
  return x;
}

HorizonGrid parse_horizon(const json& node, const std::string& where,
                          HorizonGrid fallback) {
  const json& obj = expect_object(node, where);
  reject_unknown_keys(obj, where, {"T", "N", "dt_int"});
  HorizonGrid grid = fallback;
  grid.T = get_real(obj, where, "T", fallback.T);
  grid.N = get_int(obj, where, "N", fallback.N);
  grid.dt_int = get_real(obj, where, "dt_int", fallback.dt_int);
  return grid;
}

ModelBundle build_double_integrator(const json& model_obj, const json& alpha,
                                    const json* horizon) {
  DoubleIntegratorParams params;
  if (!model_obj.is_null()) {
    const std::string where = "model";
    reject_unknown_keys(model_obj, where, {"u_max", "kappa"});
    params.u_max = get_real(model_obj, where, "u_max", params.u_max);
    params.kappa = get_real(model_obj, where, "kappa", params.kappa);
  }
  if (!alpha.is_null()) {
    reject_unknown_keys(alpha, "alpha", {"h", "h_b"});
    params.alpha_gain = get_real(alpha, "alpha", "h", params.alpha_gain);
    params.alpha_b_gain = get_real(alpha, "alpha", "h_b", params.alpha_b_gain);
  }
  if (horizon != nullptr) {
    params.grid = parse_horizon(*horizon, "horizon", params.grid);
  }
  if (!(params.u_max > 0.0)) fail("model", "'u_max' must be positive");
  if (!(params.kappa > 0.0)) fail("model", "'kappa' must be positive");
  if (!(params.alpha_gain > 0.0) || !(params.alpha_b_gain > 0.0)) {
    fail("alpha", "gains must be positive");
  }
  return make_double_integrator(params);
}

ModelBundle build_aircraft(const json& model_obj, const json& alpha,
                           const json* horizon) {
  AircraftParams params;
  if (!model_obj.is_null()) {
    const std::string w = "model";
    reject_unknown_keys(
        model_obj, w,
        {"v_t",   "g_d",   "tau_p",   "tau_z", "phi_star", "alt_star",
         "u1_min", "u1_max", "u2_min", "u2_max", "k_phi",  "k_p",
         "k_n",   "k_h",   "k_theta", "k_psi", "c1",       "c2",
         "c3",    "c4",    "c5",      "c6",    "kappa",    "beta",
         "p_g",   "n_g",   "p_target"});
    params.v_t = get_real(model_obj, w, "v_t", params.v_t);
    params.g_d = get_real(model_obj, w, "g_d", params.g_d);
    params.tau_p = get_real(model_obj, w, "tau_p", params.tau_p);
    params.tau_z = get_real(model_obj, w, "tau_z", params.tau_z);
    params.phi_star = get_real(model_obj, w, "phi_star", params.phi_star);
    params.alt_star = get_real(model_obj, w, "alt_star", params.alt_star);
    params.u1_min = get_real(model_obj, w, "u1_min", params.u1_min);
    params.u1_max = get_real(model_obj, w, "u1_max", params.u1_max);
    params.u2_min = get_real(model_obj, w, "u2_min", params.u2_min);
    params.u2_max = get_real(model_obj, w, "u2_max", params.u2_max);
    params.k_phi = get_real(model_obj, w, "k_phi", params.k_phi);
    params.k_p = get_real(model_obj, w, "k_p", params.k_p);
    params.k_n = get_real(model_obj, w, "k_n", params.k_n);
    params.k_h = get_real(model_obj, w, "k_h", params.k_h);
    params.k_theta = get_real(model_obj, w, "k_theta", params.k_theta);
    params.k_psi = get_real(model_obj, w, "k_psi", params.k_psi);
    params.c1 = get_real(model_obj, w, "c1", params.c1);
    params.c2 = get_real(model_obj, w, "c2", params.c2);
    params.c3 = get_real(model_obj, w, "c3", params.c3);
    params.c4 = get_real(model_obj, w, "c4", params.c4);
    params.c5 = get_real(model_obj, w, "c5", params.c5);
    params.c6 = get_real(model_obj, w, "c6", params.c6);
    params.kappa = get_real(model_obj, w, "kappa", params.kappa);
    params.beta = get_real(model_obj, w, "beta", params.beta);
    params.p_g = get_vec2(model_obj, w, "p_g", params.p_g);
    params.n_g = get_vec2(model_obj, w, "n_g", params.n_g);
    params.p_target = get_vec2(model_obj, w, "p_target", params.p_target);
  }
  if (!alpha.is_null()) {
    reject_unknown_keys(alpha, "alpha", {"h", "h_b"});
    params.alpha_gain = get_real(alpha, "alpha", "h", params.alpha_gain);
    params.alpha_b_gain = get_real(alpha, "alpha", "h_b", params.alpha_b_gain);
  }
  if (horizon != nullptr) {
    params.grid = parse_horizon(*horizon, "horizon", params.grid);
  }
  if (!(params.alpha_gain > 0.0) || !(params.alpha_b_gain > 0.0)) {
    fail("alpha", "gains must be positive");
  }
  return make_aircraft(params);  // validates the physical parameters
}

std::vector<std::string> parse_controllers(const json& node) {
  std::vector<std::string> names;
  if (node.is_string()) {
    names.push_back(node.get<std::string>());
  } else if (node.is_array()) {
    for (const json& entry : node) {
      if (!entry.is_string()) {
        fail("controller", "entries must be strings");
      }
      names.push_back(entry.get<std::string>());
    }
  } else {
    fail("controller", "must be a string or an array of strings");
  }
  if (names.empty()) fail("controller", "at least one controller required");
  std::set<std::string> seen;
  for (const std::string& name : names) {
    if (!seen.insert(name).second) {
      fail("controller", "duplicate entry '" + name + "'");
    }
  }
  return names;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& err) {
    throw ValidationError(std::string("scenario: malformed JSON: ") +
                          err.what());
  }
  expect_object(doc, "document");
  reject_unknown_keys(doc, "document",
                      {"scenario", "controller", "model", "alpha", "horizon",
                       "sim", "blending", "output", "seed"});
  for (const char* key : {"scenario", "controller", "sim"}) {
    if (!doc.contains(key)) {
      fail("document", std::string("missing '") + key + "'");
    }
  }

  Scenario scenario;
  if (!doc.at("scenario").is_string()) fail("scenario", "must be a string");
  scenario.model_name = doc.at("scenario").get<std::string>();

  const json null_node(nullptr);
  const json& model_obj = doc.contains("model")
                              ? expect_object(doc.at("model"), "model")
                              : null_node;
  const json& alpha_obj = doc.contains("alpha")
                              ? expect_object(doc.at("alpha"), "alpha")
                              : null_node;
  const json* horizon =
      doc.contains("horizon") ? &doc.at("horizon") : nullptr;

  if (scenario.model_name == "double_integrator") {
    scenario.bundle = build_double_integrator(model_obj, alpha_obj, horizon);
  } else if (scenario.model_name == "aircraft") {
    scenario.bundle = build_aircraft(model_obj, alpha_obj, horizon);
  } else {
    fail("scenario", "unknown scenario '" + scenario.model_name + "'");
  }

  const json& sim = expect_object(doc.at("sim"), "sim");
  reject_unknown_keys(sim, "sim", {"t_final", "dt_ctrl", "dt_plant", "x0"});
  SimConfig base;
  base.t_final = require_real(sim, "sim", "t_final");
  base.dt_ctrl = require_real(sim, "sim", "dt_ctrl");
  base.dt_plant = get_real(sim, "sim", "dt_plant", base.dt_ctrl);
  base.x0 = require_state(sim, "sim", "x0");
  base.grid = scenario.bundle.default_grid;

  const std::vector<std::string> controllers =
      parse_controllers(doc.at("controller"));

  bool wants_blended = false;
  for (const std::string& name : controllers) {
    wants_blended = wants_blended || name == "blended";
  }
  if (doc.contains("blending")) {
    const json& blending = expect_object(doc.at("blending"), "blending");
    reject_unknown_keys(blending, "blending", {"eta"});
    base.eta = require_real(blending, "blending", "eta");
  } else if (wants_blended) {
    fail("blending", "'eta' is required when a blended run is requested");
  }

  if (doc.contains("output")) {
    const json& output = expect_object(doc.at("output"), "output");
    reject_unknown_keys(output, "output", {"prefix"});
    if (output.contains("prefix")) {
      if (!output.at("prefix").is_string()) {
        fail("output", "'prefix' must be a string");
      }
      scenario.output_prefix = output.at("prefix").get<std::string>();
    }
  }
  if (scenario.output_prefix.empty()) {
    scenario.output_prefix = scenario.model_name;
  }

  if (doc.contains("seed")) {
    const json& seed = doc.at("seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
      fail("seed", "must be a nonnegative integer");
    }
    if (seed.is_number_integer() && seed.get<long long>() < 0) {
      fail("seed", "must be a nonnegative integer");
    }
    scenario.seed = seed.get<std::uint64_t>();
  }

  for (const std::string& name : controllers) {
    NamedConfig run;
    run.name = name;
    run.config = base;
    run.config.controller = controller_kind_from_string(name);
    validate_sim_config(scenario.bundle, run.config);
    scenario.runs.push_back(std::move(run));
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("scenario: cannot read " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

}  // namespace safectrl
