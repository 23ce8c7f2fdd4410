#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wigner {

enum class Tier { quick, full };
/// "quick" or "full"; anything else (including empty) throws ConfigError.
Tier parse_tier(std::string_view name);
std::string_view to_string(Tier tier) noexcept;

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceSummary {
  Tier tier = Tier::quick;
  std::vector<CriterionResult> results;
  [[nodiscard]] std::vector<int> failures() const;
};

inline constexpr int kCriterionCount = 10;

/// Runs the acceptance battery, printing one PASS/FAIL line per criterion to
/// `out` as it completes. `only` restricts the run to the listed criterion ids.
/// A criterion that throws is reported as a failure with the error text.
AcceptanceSummary acceptance_suite(Tier tier, std::ostream& out, unsigned workers, const std::set<int>& only = {});

}  // namespace wigner
