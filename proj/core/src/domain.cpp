#include "reflekt/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace reflekt {

// Interval bridge: ell(x) = |x - c| - w on the collar |x - c| >= w/2 and an
// even polynomial p(u) = c0 + c2 u^2 + c4 u^4 + c6 u^6 on |u| <= a := w/2,
// matched so that p(a) = a - w, p'(a) = 1, p''(a) = p'''(a) = 0. Solving the
// matching system gives c6 = a^-5, c4 = -5 a^-3, c2 = 7.5 / a,
// c0 = -(w/2) - 3.5 a. p is strictly increasing in |u|, so ell < 0 holds on
// the whole interior.
Domain Domain::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("Domain::interval requires lo < hi");
  Domain d;
  d.shape_ = Shape::interval;
  d.dim_ = 1;
  d.lo_ = lo;
  d.hi_ = hi;
  const double w = 0.5 * (hi - lo);
  const double a = 0.5 * w;
  d.bridge_edge_ = a;
  d.c6_ = 1.0 / std::pow(a, 5);
  d.c4_ = -5.0 / std::pow(a, 3);
  d.c2_ = 7.5 / a;
  d.c0_ = -0.5 * w - 3.5 * a;
  return d;
}

// Ball bridge: ell(x) = |x| - R for |x| >= b := R/2 and
// q(r) = c0 + c2 r^2 + c4 r^4 + c5 r^5 below, with q(b) = -b, q'(b) = 1,
// q''(b) = q'''(b) = 0 and q'(0) = q'''(0) = 0 so the field is C^3 through
// the center. The matching system gives c5 = 1/(5 b^4), c4 = -1/(2 b^3),
// c2 = 1/b, c0 = -1.7 b.
Domain Domain::ball(int dim, double radius) {
  if (dim <= 0) throw std::invalid_argument("Domain::ball requires a positive dimension");
  if (!(radius > 0.0)) throw std::invalid_argument("Domain::ball requires radius > 0");
  Domain d;
  d.shape_ = Shape::ball;
  d.dim_ = dim;
  d.radius_ = radius;
  const double b = 0.5 * radius;
  d.bridge_edge_ = b;
  d.c5_ = 1.0 / (5.0 * std::pow(b, 4));
  d.c4_ = -1.0 / (2.0 * std::pow(b, 3));
  d.c2_ = 1.0 / b;
  d.c0_ = -1.7 * b;
  return d;
}

double Domain::ell(const VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("Domain::ell: dimension mismatch");
  if (shape_ == Shape::interval) {
    const double c = 0.5 * (lo_ + hi_);
    const double w = 0.5 * (hi_ - lo_);
    const double u = x[0] - c;
    const double au = std::abs(u);
    if (au >= bridge_edge_) return au - w;
    const double u2 = u * u;
    return c0_ + u2 * (c2_ + u2 * (c4_ + u2 * c6_));
  }
  const double r = x.norm();
  if (r >= bridge_edge_) return r - radius_;
  const double r2 = r * r;
  return c0_ + r2 * (c2_ + r2 * c4_) + c5_ * r2 * r2 * r;
}

VectorXd Domain::grad_ell(const VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("Domain::grad_ell: dimension mismatch");
  VectorXd g(dim_);
  if (shape_ == Shape::interval) {
    const double c = 0.5 * (lo_ + hi_);
    const double u = x[0] - c;
    if (std::abs(u) >= bridge_edge_) {
      g[0] = u >= 0.0 ? 1.0 : -1.0;
    } else {
      const double u2 = u * u;
      g[0] = u * (2.0 * c2_ + u2 * (4.0 * c4_ + 6.0 * c6_ * u2));
    }
    return g;
  }
  const double r = x.norm();
  if (r >= bridge_edge_) {
    g = x / r;
  } else {
    // q'(r)/r stays finite through the center
    const double r2 = r * r;
    g = (2.0 * c2_ + 4.0 * c4_ * r2 + 5.0 * c5_ * r2 * r) * x;
  }
  return g;
}

MatrixXd Domain::hess_ell(const VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("Domain::hess_ell: dimension mismatch");
  MatrixXd h = MatrixXd::Zero(dim_, dim_);
  if (shape_ == Shape::interval) {
    const double c = 0.5 * (lo_ + hi_);
    const double u = x[0] - c;
    if (std::abs(u) < bridge_edge_) {
      const double u2 = u * u;
      h(0, 0) = 2.0 * c2_ + u2 * (12.0 * c4_ + 30.0 * c6_ * u2);
    }
    return h;
  }
  const double r = x.norm();
  if (r >= bridge_edge_) {
    const VectorXd n = x / r;
    h = (MatrixXd::Identity(dim_, dim_) - n * n.transpose()) / r;
    return h;
  }
  const double r2 = r * r;
  const double qp_over_r = 2.0 * c2_ + 4.0 * c4_ * r2 + 5.0 * c5_ * r2 * r;
  h = qp_over_r * MatrixXd::Identity(dim_, dim_);
  if (r > 1e-12) {
    const double qpp = 2.0 * c2_ + 12.0 * c4_ * r2 + 20.0 * c5_ * r2 * r;
    const VectorXd n = x / r;
    h += (qpp - qp_over_r) * (n * n.transpose());
  }
  return h;
}

double Domain::bounding_radius() const {
  if (shape_ == Shape::interval) return std::max(std::abs(lo_), std::abs(hi_));
  return radius_;
}

VectorXd Domain::sample_closure(CounterRng& rng) const {
  VectorXd x(dim_);
  if (shape_ == Shape::interval) {
    x[0] = rng.uniform(lo_, hi_);
    return x;
  }
  for (int i = 0; i < dim_; ++i) x[i] = rng.normal();
  const double n = x.norm();
  if (n < 1e-14) return VectorXd::Zero(dim_);
  const double r = radius_ * std::pow(rng.uniform01(), 1.0 / dim_);
  return (r / n) * x;
}

VectorXd Domain::sample_boundary(CounterRng& rng) const {
  VectorXd x(dim_);
  if (shape_ == Shape::interval) {
    x[0] = rng.uniform01() < 0.5 ? lo_ : hi_;
    return x;
  }
  for (int i = 0; i < dim_; ++i) x[i] = rng.normal();
  double n = x.norm();
  while (n < 1e-14) {
    for (int i = 0; i < dim_; ++i) x[i] = rng.normal();
    n = x.norm();
  }
  return (radius_ / n) * x;
}

}  // namespace reflekt
