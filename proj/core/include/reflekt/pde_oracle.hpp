#pragma once

#include "reflekt/valuefn.hpp"

namespace reflekt::pde {

/// theta-scheme grid for the finite-difference solver; implicit weight
/// theta in [1/2, 1] keeps the march unconditionally stable. Boundary nodes
/// coincide with the endpoints of the interval domain.
struct FDGrid {
  int n_x = 200;   // space nodes including both boundaries
  int n_t = 2000;  // time steps
  double theta = 0.5;
};

/// Independent finite-difference solution of the parabolic variational
/// inequality with the multivalued Neumann boundary condition (m = d = 1).
/// Each step does a tridiagonal solve followed by pointwise resolvents: the
/// interior one with parameter dt, the boundary one with the discrete
/// local-time weight. The returned surface uses the terminal-value convention
/// u(T, .) = h, i.e. the standard time reversal is applied internally.
valuefn::ValueSurface solve_pvi(const Domain& domain_1d, const CoefficientSet& coeffs,
                                const convex::ConvexSpec& phi, const convex::ConvexSpec& psi,
                                double T, const FDGrid& fd);

}  // namespace reflekt::pde
