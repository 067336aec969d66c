#pragma once

#include <string>
#include <vector>

namespace swe::diag {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

// Finite-difference verification (eps = 1e-5) of every graph operation,
// every layer, and the full models at small dimensions. `tiny` shrinks the
// model cases for quick runs. All errors are expected below 1e-4.
std::vector<GradCheckCase> gradcheck_suite(bool tiny);

inline constexpr double kGradCheckThreshold = 1e-4;

}  // namespace swe::diag
