#pragma once

#include <Eigen/Core>

#include "reflekt/rng.hpp"

namespace reflekt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Bounded region D = { ell < 0 } described by a C^3 level function with
/// |grad ell| = 1 on the boundary. Two built-in shapes:
///
///  - interval(lo, hi): ell equals x - hi near hi and lo - x near lo, joined
///    by an even degree-6 polynomial bridge with C^3 matching, so the gradient
///    is exactly +-1 on a collar of half the half-width around each endpoint.
///  - ball(dim, radius): ell equals |x| - R for |x| >= R/2 and a C^3 radial
///    bridge below, smooth at the center (gradient vanishes at 0).
class Domain {
 public:
  enum class Shape { interval, ball };

  static Domain interval(double lo, double hi);
  static Domain ball(int dim, double radius);

  Shape shape() const { return shape_; }
  int dim() const { return dim_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double radius() const { return radius_; }

  double ell(const VectorXd& x) const;
  VectorXd grad_ell(const VectorXd& x) const;
  MatrixXd hess_ell(const VectorXd& x) const;

  /// Radius of a ball (about the origin) containing the closure.
  double bounding_radius() const;

  bool contains(const VectorXd& x, double tol = 1e-9) const { return ell(x) <= tol; }

  VectorXd sample_closure(CounterRng& rng) const;
  VectorXd sample_boundary(CounterRng& rng) const;

 private:
  Domain() = default;
  Shape shape_ = Shape::interval;
  int dim_ = 1;
  double lo_ = -1.0, hi_ = 1.0;   // interval
  double radius_ = 1.0;           // ball
  // bridge polynomial coefficients (see the .cpp for the matching conditions)
  double bridge_edge_ = 0.0;
  double c0_ = 0.0, c2_ = 0.0, c4_ = 0.0, c5_ = 0.0, c6_ = 0.0;
};

}  // namespace reflekt
