#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coopalign::harness {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast seeded invariant suite spanning every module. Deterministic in seed.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed);

/// JSON rendering: checks in run order plus pass/fail counts.
std::string selftest_json(const std::vector<SelftestCheck>& checks);

}  // namespace coopalign::harness
