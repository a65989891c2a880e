#include "reflekt/pde_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace reflekt::pde {

namespace {

/// Thomas algorithm; diag/lower/upper are overwritten.
void solve_tridiag(std::vector<double>& lower, std::vector<double>& diag,
                   std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

valuefn::ValueSurface solve_pvi(const Domain& domain_1d, const CoefficientSet& coeffs,
                                const convex::ConvexSpec& phi, const convex::ConvexSpec& psi,
                                double T, const FDGrid& fd) {
  if (domain_1d.dim() != 1 || domain_1d.shape() != Domain::Shape::interval)
    throw std::invalid_argument("solve_pvi: interval domains only");
  if (coeffs.value_dim != 1) throw std::invalid_argument("solve_pvi: m must be 1");
  if (fd.n_x < 3 || fd.n_t < 1) throw std::invalid_argument("solve_pvi: grid too small");
  if (!(fd.theta >= 0.5 && fd.theta <= 1.0))
    throw std::invalid_argument("solve_pvi: theta must lie in [1/2, 1]");

  const double lo = domain_1d.lo(), hi = domain_1d.hi();
  const int J = fd.n_x - 1;
  const double dx = (hi - lo) / J;
  const double dtau = T / fd.n_t;
  const double theta = fd.theta;

  valuefn::ValueSurface surf;
  surf.x_grid.resize(fd.n_x);
  for (int j = 0; j <= J; ++j) surf.x_grid[j] = lo + j * dx;
  surf.x_grid.back() = hi;
  surf.t_grid.resize(fd.n_t + 1);
  for (int k = 0; k <= fd.n_t; ++k) surf.t_grid[k] = T * static_cast<double>(k) / fd.n_t;
  surf.u.resize(fd.n_t + 1, fd.n_x);
  surf.se = Eigen::MatrixXd::Zero(fd.n_t + 1, fd.n_x);

  // initial slice of the forward march = terminal condition of the value
  std::vector<double> v(fd.n_x);
  {
    VectorXd x(1), h_val(1);
    for (int j = 0; j <= J; ++j) {
      x[0] = surf.x_grid[j];
      coeffs.terminal(x, h_val);
      v[j] = h_val[0];
    }
  }
  for (int j = 0; j <= J; ++j) surf.u(fd.n_t, j) = v[j];

  const bool phi_active = phi.kind() != convex::Kind::zero;
  const bool psi_active = psi.kind() != convex::Kind::zero;

  std::vector<double> a(fd.n_x), b(fd.n_x);  // sigma^2/2 and drift per node
  std::vector<double> lower(fd.n_x), diag(fd.n_x), upper(fd.n_x), rhs(fd.n_x);
  std::vector<double> Lv(fd.n_x);
  VectorXd xv(1), bv(1), fv(1), gv(1), yv(1);
  MatrixXd sv(1, 1);

  for (int k = 0; k < fd.n_t; ++k) {
    const double t_bsde = T - static_cast<double>(k) * dtau;
    // coefficients frozen at the current level
    for (int j = 0; j <= J; ++j) {
      xv[0] = surf.x_grid[j];
      coeffs.drift(t_bsde, xv, bv);
      coeffs.diffusion(t_bsde, xv, sv);
      a[j] = 0.5 * sv(0, 0) * sv(0, 0);
      b[j] = bv[0];
    }

    // homogeneous operator L_h v (ghost-node Neumann with zero flux; the g
    // flux is added explicitly below)
    Lv[0] = 2.0 * a[0] * (v[1] - v[0]) / (dx * dx);
    for (int j = 1; j < J; ++j)
      Lv[j] = a[j] * (v[j - 1] - 2.0 * v[j] + v[j + 1]) / (dx * dx) +
              b[j] * (v[j + 1] - v[j - 1]) / (2.0 * dx);
    Lv[J] = 2.0 * a[J] * (v[J - 1] - v[J]) / (dx * dx);

    // explicit driver and boundary influx
    for (int j = 0; j <= J; ++j) {
      xv[0] = surf.x_grid[j];
      yv[0] = v[j];
      coeffs.driver(t_bsde, xv, yv, fv);
      rhs[j] = v[j] + (1.0 - theta) * dtau * Lv[j] + dtau * fv[0];
    }
    const double w_lo = 2.0 * a[0] / dx - b[0];
    const double w_hi = 2.0 * a[J] / dx + b[J];
    if (w_lo < 0.0 || w_hi < 0.0)
      throw std::runtime_error("solve_pvi: boundary stencil lost diagonal dominance");
    {
      xv[0] = lo;
      yv[0] = v[0];
      coeffs.boundary_driver(t_bsde, xv, yv, gv);
      rhs[0] += dtau * w_lo * gv[0];
      xv[0] = hi;
      yv[0] = v[J];
      coeffs.boundary_driver(t_bsde, xv, yv, gv);
      rhs[J] += dtau * w_hi * gv[0];
    }

    // implicit system (I - theta dtau L_h)
    diag[0] = 1.0 + theta * dtau * 2.0 * a[0] / (dx * dx);
    upper[0] = -theta * dtau * 2.0 * a[0] / (dx * dx);
    lower[0] = 0.0;
    for (int j = 1; j < J; ++j) {
      const double adx2 = a[j] / (dx * dx);
      const double bdx = b[j] / (2.0 * dx);
      lower[j] = -theta * dtau * (adx2 - bdx);
      diag[j] = 1.0 + theta * dtau * 2.0 * adx2;
      upper[j] = -theta * dtau * (adx2 + bdx);
    }
    lower[J] = -theta * dtau * 2.0 * a[J] / (dx * dx);
    diag[J] = 1.0 + theta * dtau * 2.0 * a[J] / (dx * dx);
    upper[J] = 0.0;

    solve_tridiag(lower, diag, upper, rhs);

    // pointwise resolvents: the interior inclusion with weight dtau, the
    // boundary inclusion with the discrete local-time weight
    if (phi_active) {
      const convex::MoreauParams lam(dtau);
      for (int j = 0; j <= J; ++j) {
        yv[0] = rhs[j];
        rhs[j] = convex::resolvent(phi, lam, yv)[0];
      }
    }
    if (psi_active) {
      yv[0] = rhs[0];
      rhs[0] = convex::resolvent(psi, convex::MoreauParams(dtau * w_lo), yv)[0];
      yv[0] = rhs[J];
      rhs[J] = convex::resolvent(psi, convex::MoreauParams(dtau * w_hi), yv)[0];
    }

    v = rhs;
    const int row = fd.n_t - (k + 1);  // v at tau_{k+1} is u at T - tau_{k+1}
    for (int j = 0; j <= J; ++j) surf.u(row, j) = v[j];
  }
  return surf;
}

}  // namespace reflekt::pde
