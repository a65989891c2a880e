#pragma once

#include <string>
#include <vector>

#include "reflekt/coefficients.hpp"
#include "reflekt/convex.hpp"
#include "reflekt/domain.hpp"

namespace reflekt {

/// A fully specified problem instance: region, coefficients, the two convex
/// functions, and the horizon.
struct Problem {
  std::string name;
  Domain domain = Domain::interval(-1.0, 1.0);
  CoefficientSet coeffs;
  convex::ConvexSpec phi = convex::ConvexSpec::zero(1);
  convex::ConvexSpec psi = convex::ConvexSpec::zero(1);
  double T = 1.0;
  // default start point for path-based runs
  double t0 = 0.25;
  double x0 = 0.1;
};

/// Named presets:
///  - heat:              b=0, sigma=1, f=g=0, phi=psi=0, h = cos(pi x)
///  - drifted:           constant drift, mild monotone driver, boundary influx
///  - obstacle_interior: phi = indicator of [-K, K], constant interior push
///  - obstacle_boundary: psi = indicator of [-K, K], boundary influx
///  - linear_ode:        b=sigma=0, f = -y, closed-form exponential decay
Problem make_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace reflekt
