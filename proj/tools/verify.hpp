#pragma once

#include <string>
#include <vector>

namespace lsf::tools {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant self-test battery over every module.
std::vector<CheckResult> run_verify(unsigned seed);

}  // namespace lsf::tools
