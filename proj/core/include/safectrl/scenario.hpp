#pragma once

#include "safectrl/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace safectrl {

// A fully-resolved scenario file: the plant, one run per requested
// controller, and output naming. All parameters are validated at load time;
// unknown keys anywhere in the document are rejected.
struct Scenario {
  std::string model_name;  // "double_integrator" or "aircraft"
  ModelBundle bundle;
  std::vector<NamedConfig> runs;
  std::string output_prefix;
  std::uint64_t seed = 0;  // consumed by randomized verification only
};

// Throws ValidationError on malformed JSON, unknown keys, wrong types, or
// parameter values that fail the model/sim preconditions.
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace safectrl
