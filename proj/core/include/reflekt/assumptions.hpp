#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reflekt/presets.hpp"

namespace reflekt {

struct AssumptionCheck {
  std::string name;
  double worst = 0.0;  // signed; <= tol means the sampled condition held
  std::string witness;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  double tol = 1e-8;
  bool passed() const {
    for (const auto& c : checks)
      if (c.worst > tol) return false;
    return true;
  }
};

/// Sampled validation of the standing assumptions: Lipschitz bounds on b and
/// sigma, monotonicity and growth of f and g, the (t,x,y)-Lipschitz bound on
/// g, boundedness of phi(h), psi(h), the unit-gradient property of the level
/// function on the boundary, and the three compatibility conditions.
AssumptionReport validate_assumptions(const Problem& problem, int n_samples, std::uint64_t seed);

}  // namespace reflekt
