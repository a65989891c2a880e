#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace reflekt::convex {

using Eigen::VectorXd;

/// Value standing for "outside the effective domain". Arithmetic on it is
/// forbidden by contract; callers test with is_finite_value first.
inline constexpr double kPlusInfinity = std::numeric_limits<double>::infinity();

inline bool is_finite_value(double v) { return v < kPlusInfinity; }

/// Thrown when an iterative solver (composite resolvent, implicit step) fails
/// to reach its tolerance; carries the final residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

enum class Kind { zero, quadratic, abs_norm, indicator_box, sum, custom_1d };

/// A proper convex l.s.c. function on R^m, normalized so that the minimum
/// value is 0 and it is attained at the origin. Built from a small family of
/// closed-form pieces; composite functions are sums of those pieces.
class ConvexSpec {
 public:
  static ConvexSpec zero(int dim);
  /// scale * |y|^2 / 2
  static ConvexSpec quadratic(int dim, double scale);
  /// scale * sum_i |y_i|
  static ConvexSpec abs_norm(int dim, double scale);
  /// Indicator of the box [lo, hi]; entries may be -inf/+inf. Requires
  /// lo <= 0 <= hi componentwise so the normalization holds.
  static ConvexSpec indicator_box(VectorXd lo, VectorXd hi);
  static ConvexSpec sum(std::vector<ConvexSpec> parts);
  /// Piecewise-linear convex function on [breakpoints.front(), breakpoints.back()],
  /// +inf outside. Values must be convex, nonnegative, with value 0 at a
  /// breakpoint equal to 0.
  static ConvexSpec custom_1d(std::vector<double> breakpoints, std::vector<double> values);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double scale() const { return scale_; }
  const VectorXd& box_lo() const { return lo_; }
  const VectorXd& box_hi() const { return hi_; }
  const std::vector<ConvexSpec>& parts() const { return parts_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& breakpoint_values() const { return break_values_; }

  /// True when evaluate(y) is finite (with the domain tolerance applied).
  bool in_domain(const VectorXd& y) const;

 private:
  ConvexSpec() = default;
  Kind kind_ = Kind::zero;
  int dim_ = 1;
  double scale_ = 0.0;
  VectorXd lo_, hi_;
  std::vector<ConvexSpec> parts_;
  std::vector<double> breaks_, break_values_, slopes_;
  friend double evaluate(const ConvexSpec&, const VectorXd&);
  friend VectorXd resolvent_impl(const ConvexSpec&, double, const VectorXd&);
};

struct MoreauParams {
  double epsilon;
  explicit MoreauParams(double eps) : epsilon(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("MoreauParams: epsilon must be > 0");
  }
};

/// phi(y); +inf exactly when y is outside Dom phi. Membership in a box or
/// breakpoint domain uses an absolute tolerance of 1e-12, since resolvent
/// outputs land exactly on faces only in exact arithmetic.
double evaluate(const ConvexSpec& spec, const VectorXd& y);

/// J_eps(y) = (I + eps * dphi)^{-1}(y). Closed form for every built-in kind;
/// the sum kind runs a consensus Douglas-Rachford splitting (tol 1e-10,
/// at most 10000 sweeps) and throws SolverError when that fails.
VectorXd resolvent(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y);

/// grad phi_eps(y) = (y - J_eps(y)) / eps; Lipschitz with constant 1/eps.
VectorXd moreau_gradient(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y);

/// phi_eps(y), computed through phi_eps = (eps/2)|grad phi_eps|^2 + phi(J_eps).
double moreau_envelope(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y);

/// max over probes z of (<u, z - y> + phi(y) - phi(z))^+ ; a value of 0 (up to
/// tolerance) certifies u in dphi(y) against the probe set. Probes outside
/// Dom phi satisfy the inequality trivially and contribute 0.
double subgradient_inequality_residual(const ConvexSpec& spec, const VectorXd& y,
                                       const VectorXd& u, const std::vector<VectorXd>& probes);

struct CompatibilityWitness {
  double epsilon = 0.0;
  double t = 0.0;
  VectorXd x;        // boundary point
  VectorXd x_tilde;  // point in the closure
  VectorXd y;
};

/// Worst signed violations of the three compatibility inequalities between
/// the Yosida approximations of phi and psi and the drivers f, g.
/// A value <= 0 means the condition held on every sample.
struct CompatibilityReport {
  double worst_gradient_angle = -kPlusInfinity;  // -<grad phi_eps, grad psi_eps>
  double worst_boundary_driver = -kPlusInfinity; // <grad phi_eps,g> - <grad psi_eps,g>^+
  double worst_interior_driver = -kPlusInfinity; // <grad psi_eps,f> - <grad phi_eps,f>^+
  CompatibilityWitness witness_gradient_angle;
  CompatibilityWitness witness_boundary_driver;
  CompatibilityWitness witness_interior_driver;
  double max_violation() const {
    return std::max({worst_gradient_angle, worst_boundary_driver, worst_interior_driver});
  }
};

}  // namespace reflekt::convex

namespace reflekt {
class Domain;
struct CoefficientSet;
}  // namespace reflekt

namespace reflekt::convex {

/// Samples (t, x on the boundary, x_tilde in the closure, y) and evaluates the
/// three compatibility inequalities for every epsilon in eps_list. Throws on
/// an empty eps_list or a domain whose boundary cannot be sampled.
CompatibilityReport check_compatibility(const ConvexSpec& phi, const ConvexSpec& psi,
                                        const CoefficientSet& coeffs, const Domain& domain,
                                        const std::vector<double>& eps_list, int sample_count,
                                        std::uint64_t rng_seed, double t_horizon = 1.0);

}  // namespace reflekt::convex
