#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace safectrl {

// Loads a scenario file, runs every requested controller, and writes one
// trajectory CSV per run plus a summary JSON into out_dir.
// Returns 0 on success, 2 on a validation problem (nothing written),
// 3 when a run aborted numerically (partial outputs are written).
int run_command(const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir, bool quiet,
                std::ostream& out, std::ostream& err);

// Runs a verification suite (kkt | oracle | sensitivity | invariance | all)
// and prints its pass/fail table. Returns 0 when every check passes,
// 1 on any failed check, 2 on an unknown suite or a bad SAFETY_SEED.
// The SAFETY_SEED environment variable overrides the default seed.
int verify_command(const std::string& suite, bool quiet, std::ostream& out,
                   std::ostream& err);

}  // namespace safectrl
