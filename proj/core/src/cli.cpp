#include "safectrl/cli.hpp"

#include "safectrl/scenario.hpp"
#include "safectrl/verify.hpp"

#include <json.hpp>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace safectrl {

namespace {

constexpr std::uint64_t kDefaultSeed = 0x5afec7815eedULL;

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SAFETY_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long value = std::strtoull(raw, &end, 0);
  if (errno != 0 || end == raw || *end != '\0') {
    throw ValidationError("SAFETY_SEED must be a nonnegative integer");
  }
  return value;
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open output file " + tmp.string());
    out << text;
    if (!out.flush()) throw ValidationError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// NaN metrics (e.g. min_h_b_terminal without a flow-based run) serialize
// as JSON null.
nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["min_h"] = m.min_h;
  j["min_h_b_terminal"] = m.min_h_b_terminal;
  j["input_violations"] = m.input_violations;
  j["u_sign_reversals"] = m.u_sign_reversals;
  j["mu_switch_count"] = m.mu_switch_count;
  j["mean_step_wall_us"] = m.mean_step_wall_us;
  j["max_step_wall_us"] = m.max_step_wall_us;
  j["ode_scalars_per_step"] = m.ode_scalars_per_step;
  j["kkt_failures"] = m.kkt_failures;
  j["out_of_domain_steps"] = m.out_of_domain_steps;
  return j;
}

}  // namespace

int run_command(const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir, bool quiet,
                std::ostream& out, std::ostream& err) {
  Scenario scenario;
  std::uint64_t seed = 0;
  try {
    scenario = load_scenario(config_path);
    seed = env_seed().value_or(scenario.seed);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const ComparisonReport report =
        compare_controllers(scenario.bundle, scenario.runs);

    std::filesystem::create_directories(out_dir);
    nlohmann::json summary;
    summary["scenario"] = scenario.model_name;
    summary["prefix"] = scenario.output_prefix;
    summary["seed"] = seed;
    summary["runs"] = nlohmann::json::array();

    bool any_abort = false;
    for (size_t i = 0; i < report.logs.size(); ++i) {
      const TrajectoryLog& log = report.logs[i];
      const Metrics& metrics = report.metrics[i];
      const std::string csv_name =
          scenario.output_prefix + "_" + report.names[i] + ".csv";
      write_trajectory_csv(out_dir / csv_name, log);

      nlohmann::json entry;
      entry["name"] = report.names[i];
      entry["csv"] = csv_name;
      entry["rows"] = log.rows.size();
      entry["aborted"] = log.aborted;
      entry["abort_reason"] = log.abort_reason;
      entry["metrics"] = metrics_json(metrics);
      summary["runs"].push_back(entry);
      any_abort = any_abort || log.aborted;

      if (!quiet) {
        out << report.names[i] << ": " << log.rows.size() << " rows, min_h="
            << metrics.min_h << ", input_violations="
            << metrics.input_violations
            << (log.aborted ? " [aborted: " + log.abort_reason + "]" : "")
            << '\n';
      }
    }
    if (report.logs.size() > 1) {
      summary["max_state_deviation"] = report.max_deviation;
      nlohmann::json matrix = nlohmann::json::array();
      for (Eigen::Index r = 0; r < report.pairwise_deviation.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < report.pairwise_deviation.cols(); ++c) {
          row.push_back(report.pairwise_deviation(r, c));
        }
        matrix.push_back(row);
      }
      summary["pairwise_deviation"] = matrix;
      if (!quiet) {
        out << "max state deviation: " << report.max_deviation << '\n';
      }
    }

    const std::string summary_name = scenario.output_prefix + "_summary.json";
    atomic_write_text(out_dir / summary_name, summary.dump(2) + "\n");
    if (!quiet) out << "wrote " << (out_dir / summary_name).string() << '\n';
    return any_abort ? 3 : 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

int verify_command(const std::string& suite, bool quiet, std::ostream& out,
                   std::ostream& err) {
  try {
    const std::uint64_t seed = env_seed().value_or(kDefaultSeed);
    const VerifyReport report = run_verify_suite(suite, seed);
    if (quiet) {
      int passed = 0;
      for (const VerifyCheck& check : report.checks) {
        if (check.pass) ++passed;
      }
      out << passed << '/' << report.checks.size() << " checks passed ("
          << report.suite << ")\n";
    } else {
      print_verify_report(report, out);
    }
    return report.all_pass() ? 0 : 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace safectrl
