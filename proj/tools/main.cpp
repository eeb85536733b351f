#include <CLI11.hpp>

#include <safectrl/cli.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Safety-filtered control experiments: scenario runs and "
               "numerical property suites"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string suite;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* run = app.add_subcommand("run", "simulate a scenario file");
  run->fallthrough();  // accept --quiet after the subcommand name too
  run->add_option("config", config_path, "scenario JSON file")->required();
  run->add_option("--out-dir", out_dir, "directory for CSV/JSON outputs");

  CLI::App* verify = app.add_subcommand(
      "verify", "run a property suite: kkt|oracle|sensitivity|invariance|all");
  verify->fallthrough();
  verify->add_option("suite", suite, "suite name")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return safectrl::run_command(config_path, out_dir, quiet, std::cout,
                                 std::cerr);
  }
  return safectrl::verify_command(suite, quiet, std::cout, std::cerr);
}
