#include "reflekt/convex.hpp"

#include <cmath>

#include "reflekt/coefficients.hpp"
#include "reflekt/domain.hpp"
#include "reflekt/rng.hpp"

namespace reflekt::convex {

namespace {

constexpr double kDomainTol = 1e-12;  // membership slack for boxes and breakpoint ranges
constexpr double kSplitTol = 1e-10;   // consensus splitting tolerance
constexpr int kSplitMaxIter = 10000;

void require_dim(const ConvexSpec& spec, const VectorXd& y) {
  if (y.size() != spec.dim())
    throw std::invalid_argument("ConvexSpec: vector dimension " + std::to_string(y.size()) +
                                " does not match spec dimension " + std::to_string(spec.dim()));
}

double soft_threshold(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

double evaluate_impl(const ConvexSpec& spec, const VectorXd& y, double dom_tol);

double evaluate_custom_1d(const ConvexSpec& spec, double y, double dom_tol) {
  const auto& b = spec.breakpoints();
  const auto& v = spec.breakpoint_values();
  if (y < b.front() - dom_tol || y > b.back() + dom_tol) return kPlusInfinity;
  const double yc = std::clamp(y, b.front(), b.back());
  auto it = std::upper_bound(b.begin(), b.end(), yc);
  std::size_t i = (it == b.begin()) ? 0 : static_cast<std::size_t>(it - b.begin()) - 1;
  if (i >= b.size() - 1) i = b.size() - 2;
  const double w = (yc - b[i]) / (b[i + 1] - b[i]);
  return v[i] + w * (v[i + 1] - v[i]);
}

double evaluate_impl(const ConvexSpec& spec, const VectorXd& y, double dom_tol) {
  switch (spec.kind()) {
    case Kind::zero:
      return 0.0;
    case Kind::quadratic:
      return 0.5 * spec.scale() * y.squaredNorm();
    case Kind::abs_norm:
      return spec.scale() * y.template lpNorm<1>();
    case Kind::indicator_box: {
      for (int i = 0; i < y.size(); ++i) {
        if (y[i] < spec.box_lo()[i] - dom_tol || y[i] > spec.box_hi()[i] + dom_tol)
          return kPlusInfinity;
      }
      return 0.0;
    }
    case Kind::sum: {
      double total = 0.0;
      for (const auto& part : spec.parts()) {
        const double v = evaluate_impl(part, y, dom_tol);
        if (!is_finite_value(v)) return kPlusInfinity;
        total += v;
      }
      return total;
    }
    case Kind::custom_1d:
      return evaluate_custom_1d(spec, y[0], dom_tol);
  }
  return kPlusInfinity;
}

/// Resolvent of the piecewise-linear 1-D function: monotone scan of the graph
/// of z + lambda * dphi(z), which tiles the real line.
double resolvent_custom_1d(const ConvexSpec& spec, double lambda, double y) {
  const auto& b = spec.breakpoints();
  const auto& v = spec.breakpoint_values();
  const std::size_t n_seg = b.size() - 1;
  std::vector<double> s(n_seg);
  for (std::size_t i = 0; i < n_seg; ++i) s[i] = (v[i + 1] - v[i]) / (b[i + 1] - b[i]);
  // left endpoint: dphi = (-inf, s_0]
  if (y <= b.front() + lambda * s[0]) return b.front();
  for (std::size_t i = 0; i < n_seg; ++i) {
    // open segment i: z = y - lambda * s_i lands inside it
    const double z = y - lambda * s[i];
    if (z > b[i] && z < b[i + 1]) return z;
    // breakpoint i+1 (interior): dphi = [s_i, s_{i+1}]
    if (i + 1 < n_seg) {
      if (y >= b[i + 1] + lambda * s[i] && y <= b[i + 1] + lambda * s[i + 1]) return b[i + 1];
    }
  }
  return b.back();
}

VectorXd resolvent_consensus(const ConvexSpec& spec, double eps, const VectorXd& y);

}  // namespace

VectorXd resolvent_impl(const ConvexSpec& spec, double eps, const VectorXd& y) {
  switch (spec.kind()) {
    case Kind::zero:
      return y;
    case Kind::quadratic:
      return y / (1.0 + eps * spec.scale());
    case Kind::abs_norm: {
      VectorXd out(y.size());
      const double k = eps * spec.scale();
      for (int i = 0; i < y.size(); ++i) out[i] = soft_threshold(y[i], k);
      return out;
    }
    case Kind::indicator_box: {
      VectorXd out(y.size());
      for (int i = 0; i < y.size(); ++i)
        out[i] = std::clamp(y[i], spec.box_lo()[i], spec.box_hi()[i]);
      return out;
    }
    case Kind::custom_1d: {
      VectorXd out(1);
      out[0] = resolvent_custom_1d(spec, eps, y[0]);
      return out;
    }
    case Kind::sum:
      return resolvent_consensus(spec, eps, y);
  }
  return y;
}

namespace {

/// prox of sum f_i at y with parameter eps via Douglas-Rachford on the
/// product space: each block prox folds its share of the quadratic tether
/// into a plain resolvent call.
VectorXd resolvent_consensus(const ConvexSpec& spec, double eps, const VectorXd& y) {
  const auto& parts = spec.parts();
  const std::size_t n = parts.size();
  if (n == 1) return resolvent_impl(parts[0], eps, y);

  const double lambda = eps * static_cast<double>(n);
  const double a = 1.0 / (static_cast<double>(n) * eps) + 1.0 / lambda;
  const double prox_step = 1.0 / a;

  std::vector<VectorXd> w(n, y);
  std::vector<VectorXd> p(n, y);
  VectorXd consensus = y;
  double residual = kPlusInfinity;
  for (int iter = 0; iter < kSplitMaxIter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const VectorXd c = prox_step * (y / (static_cast<double>(n) * eps) + w[i] / lambda);
      p[i] = resolvent_impl(parts[i], prox_step, c);
    }
    VectorXd xbar = VectorXd::Zero(y.size());
    for (std::size_t i = 0; i < n; ++i) xbar += 2.0 * p[i] - w[i];
    xbar /= static_cast<double>(n);
    double drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] += xbar - p[i];
      drift = std::max(drift, (p[i] - consensus).template lpNorm<Eigen::Infinity>());
    }
    double spread = 0.0;
    VectorXd pbar = VectorXd::Zero(y.size());
    for (std::size_t i = 0; i < n; ++i) pbar += p[i];
    pbar /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      spread = std::max(spread, (p[i] - pbar).template lpNorm<Eigen::Infinity>());
    consensus = pbar;
    residual = std::max(spread, drift);
    if (residual <= kSplitTol) return consensus;
  }
  throw SolverError("composite resolvent splitting did not converge", residual);
}

}  // namespace

ConvexSpec ConvexSpec::zero(int dim) {
  if (dim <= 0) throw std::invalid_argument("ConvexSpec: dimension must be positive");
  ConvexSpec s;
  s.kind_ = Kind::zero;
  s.dim_ = dim;
  return s;
}

ConvexSpec ConvexSpec::quadratic(int dim, double scale) {
  if (dim <= 0) throw std::invalid_argument("ConvexSpec: dimension must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("ConvexSpec: quadratic scale must be > 0");
  ConvexSpec s;
  s.kind_ = Kind::quadratic;
  s.dim_ = dim;
  s.scale_ = scale;
  return s;
}

ConvexSpec ConvexSpec::abs_norm(int dim, double scale) {
  if (dim <= 0) throw std::invalid_argument("ConvexSpec: dimension must be positive");
  if (scale < 0.0) throw std::invalid_argument("ConvexSpec: abs_norm scale must be >= 0");
  ConvexSpec s;
  s.kind_ = Kind::abs_norm;
  s.dim_ = dim;
  s.scale_ = scale;
  return s;
}

ConvexSpec ConvexSpec::indicator_box(VectorXd lo, VectorXd hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw std::invalid_argument("ConvexSpec: box bounds must share a positive dimension");
  for (int i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= 0.0 && 0.0 <= hi[i]))
      throw std::invalid_argument("ConvexSpec: box must contain the origin (lo <= 0 <= hi)");
  }
  ConvexSpec s;
  s.kind_ = Kind::indicator_box;
  s.dim_ = static_cast<int>(lo.size());
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

ConvexSpec ConvexSpec::sum(std::vector<ConvexSpec> parts) {
  if (parts.empty()) throw std::invalid_argument("ConvexSpec: sum needs at least one part");
  const int dim = parts.front().dim();
  for (const auto& p : parts)
    if (p.dim() != dim) throw std::invalid_argument("ConvexSpec: sum parts must share dimension");
  ConvexSpec s;
  s.kind_ = Kind::sum;
  s.dim_ = dim;
  s.parts_ = std::move(parts);
  return s;
}

ConvexSpec ConvexSpec::custom_1d(std::vector<double> breakpoints, std::vector<double> values) {
  if (breakpoints.size() < 2 || breakpoints.size() != values.size())
    throw std::invalid_argument("ConvexSpec: custom_1d needs matching breakpoints and values");
  bool has_zero = false;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!std::isfinite(breakpoints[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("ConvexSpec: custom_1d data must be finite");
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
      throw std::invalid_argument("ConvexSpec: custom_1d breakpoints must be strictly increasing");
    if (values[i] < 0.0)
      throw std::invalid_argument("ConvexSpec: custom_1d values must be >= 0 (normalization)");
    if (std::abs(breakpoints[i]) < 1e-14) {
      has_zero = true;
      if (values[i] != 0.0)
        throw std::invalid_argument("ConvexSpec: custom_1d must vanish at the origin");
    }
  }
  if (!has_zero)
    throw std::invalid_argument("ConvexSpec: custom_1d breakpoints must contain the origin");
  // convexity: slopes nondecreasing
  double prev_slope = -kPlusInfinity;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double slope = (values[i + 1] - values[i]) / (breakpoints[i + 1] - breakpoints[i]);
    if (slope < prev_slope - 1e-12)
      throw std::invalid_argument("ConvexSpec: custom_1d values are not convex");
    prev_slope = slope;
  }
  ConvexSpec s;
  s.kind_ = Kind::custom_1d;
  s.dim_ = 1;
  s.breaks_ = std::move(breakpoints);
  s.break_values_ = std::move(values);
  return s;
}

bool ConvexSpec::in_domain(const VectorXd& y) const {
  return is_finite_value(evaluate_impl(*this, y, kDomainTol));
}

double evaluate(const ConvexSpec& spec, const VectorXd& y) {
  require_dim(spec, y);
  return evaluate_impl(spec, y, kDomainTol);
}

VectorXd resolvent(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y) {
  require_dim(spec, y);
  return resolvent_impl(spec, eps.epsilon, y);
}

VectorXd moreau_gradient(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y) {
  require_dim(spec, y);
  return (y - resolvent_impl(spec, eps.epsilon, y)) / eps.epsilon;
}

double moreau_envelope(const ConvexSpec& spec, const MoreauParams& eps, const VectorXd& y) {
  require_dim(spec, y);
  const VectorXd j = resolvent_impl(spec, eps.epsilon, y);
  const VectorXd g = (y - j) / eps.epsilon;
  // the composite resolvent is only accurate to the splitting tolerance, so
  // domain membership of its output gets the matching slack
  const double dom_tol = spec.kind() == Kind::sum ? 1e2 * kSplitTol : kDomainTol;
  const double phi_j = evaluate_impl(spec, j, dom_tol);
  if (!is_finite_value(phi_j))
    throw SolverError("moreau_envelope: resolvent output left the domain", phi_j);
  return 0.5 * eps.epsilon * g.squaredNorm() + phi_j;
}

double subgradient_inequality_residual(const ConvexSpec& spec, const VectorXd& y,
                                       const VectorXd& u, const std::vector<VectorXd>& probes) {
  require_dim(spec, y);
  require_dim(spec, u);
  const double phi_y = evaluate_impl(spec, y, kDomainTol);
  if (!is_finite_value(phi_y))
    throw std::invalid_argument("subgradient_inequality_residual: y is outside Dom(phi)");
  double worst = 0.0;
  for (const auto& z : probes) {
    require_dim(spec, z);
    const double phi_z = evaluate_impl(spec, z, kDomainTol);
    if (!is_finite_value(phi_z)) continue;  // inequality holds trivially
    worst = std::max(worst, u.dot(z - y) + phi_y - phi_z);
  }
  return worst;
}

CompatibilityReport check_compatibility(const ConvexSpec& phi, const ConvexSpec& psi,
                                        const CoefficientSet& coeffs, const Domain& domain,
                                        const std::vector<double>& eps_list, int sample_count,
                                        std::uint64_t rng_seed, double t_horizon) {
  if (eps_list.empty())
    throw std::invalid_argument("check_compatibility: eps_list must not be empty");
  if (phi.dim() != psi.dim() || phi.dim() != coeffs.value_dim)
    throw std::invalid_argument("check_compatibility: phi, psi and the drivers must share m");
  for (double e : eps_list)
    if (!(e > 0.0)) throw std::invalid_argument("check_compatibility: epsilons must be > 0");

  const int m = phi.dim();
  CounterRng rng(CounterRng::derive_key(rng_seed, "compat", 0));
  CompatibilityReport report;

  VectorXd f_val(m), g_val(m);
  for (int s = 0; s < sample_count; ++s) {
    const double t = rng.uniform(0.0, t_horizon);
    const VectorXd x = domain.sample_boundary(rng);
    const VectorXd x_tilde = domain.sample_closure(rng);
    VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = 2.0 * rng.normal();
    if (rng.uniform01() < 0.5) {
      // pull half the samples toward the effective domains, where the Yosida
      // gradients switch on and off
      y = resolvent_impl(rng.uniform01() < 0.5 ? phi : psi, 0.1, 3.0 * y);
    }
    for (double eps : eps_list) {
      const VectorXd gphi = (y - resolvent_impl(phi, eps, y)) / eps;
      const VectorXd gpsi = (y - resolvent_impl(psi, eps, y)) / eps;
      coeffs.driver(t, x_tilde, y, f_val);
      coeffs.boundary_driver(t, x, y, g_val);

      CompatibilityWitness w{eps, t, x, x_tilde, y};
      const double c1 = -gphi.dot(gpsi);
      if (c1 > report.worst_gradient_angle) {
        report.worst_gradient_angle = c1;
        report.witness_gradient_angle = w;
      }
      const double c2 = gphi.dot(g_val) - std::max(0.0, gpsi.dot(g_val));
      if (c2 > report.worst_boundary_driver) {
        report.worst_boundary_driver = c2;
        report.witness_boundary_driver = w;
      }
      const double c3 = gpsi.dot(f_val) - std::max(0.0, gphi.dot(f_val));
      if (c3 > report.worst_interior_driver) {
        report.worst_interior_driver = c3;
        report.witness_interior_driver = w;
      }
    }
  }
  return report;
}

}  // namespace reflekt::convex
