#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace safectrl {

// One named property check with a human-readable residual summary.
struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;

  bool all_pass() const {
    for (const VerifyCheck& check : checks) {
      if (!check.pass) return false;
    }
    return !checks.empty();
  }
};

// Runs one of the randomized/numeric property suites:
//   kkt         optimality certificates on randomized row systems
//   oracle      closed-form weight vs. exhaustive grid search
//   sensitivity push-forward flow states vs. sensitivity propagation
//   invariance  hold-circle geometry of the aircraft backup law
//   all         everything above
// The seed drives all randomized sampling. Throws ValidationError on an
// unknown suite name.
VerifyReport run_verify_suite(const std::string& suite, std::uint64_t seed);

// Fixed-width pass/fail table, one line per check plus a summary line.
void print_verify_report(const VerifyReport& report, std::ostream& out);

}  // namespace safectrl
