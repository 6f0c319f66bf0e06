#pragma once

#include <string>
#include <vector>

#include "homodescent/hqm.hpp"

namespace homodescent {

enum class CheckLevel { kQuick, kFull };

struct CheckOptions {
  CheckLevel level = CheckLevel::kQuick;
  /// Branch used by the line-search checks. kAsPrinted is the mutation
  /// fixture: the delta monotonicity / line-search group must then fail.
  BranchRule branch = BranchRule::kMonotone;
  std::uint64_t seed = 1;
};

struct CheckGroup {
  std::string name;
  bool passed = false;
  int cases = 0;
  std::string detail;  // first failure, or a short summary
  double seconds = 0.0;
};

struct CheckReport {
  std::vector<CheckGroup> groups;
  bool all_passed() const;
  std::string to_json() const;
};

/// Runs the invariant groups of every module. Quick caps dimensions at 16 and
/// seeds at 3. Failures are report entries, never exceptions.
CheckReport check_suite(const CheckOptions& opts = {});

}  // namespace homodescent
