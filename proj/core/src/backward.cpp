#include "reflekt/backward.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "reflekt/parallel.hpp"
#include "reflekt/rng.hpp"

namespace reflekt::backward {

namespace {

using convex::ConvexSpec;
using convex::MoreauParams;

VectorXd apply_resolvent(const ConvexSpec& spec, double lambda, const VectorXd& y) {
  if (lambda <= 0.0 || spec.kind() == convex::Kind::zero) return y;
  return convex::resolvent(spec, MoreauParams(lambda), y);
}

/// Scalar monotone root solve of H(y) = y + dt*grad phi_eps(y) +
/// dA*grad psi_eps(y) - r = 0 by bracket expansion plus safeguarded secant.
double solve_penalized_scalar(const ConvexSpec& phi, const ConvexSpec& psi, double dt, double dA,
                              double eps, double r, double tol, int cap) {
  auto H = [&](double y) {
    VectorXd v(1);
    v[0] = y;
    double acc = y - r;
    if (dt > 0.0) acc += dt * convex::moreau_gradient(phi, MoreauParams(eps), v)[0];
    if (dA > 0.0) acc += dA * convex::moreau_gradient(psi, MoreauParams(eps), v)[0];
    return acc;
  };
  double lo = r, hi = r;
  double flo = H(lo), fhi = flo;
  double step = std::max(1.0, std::abs(r));
  for (int k = 0; k < 120 && flo * fhi > 0.0; ++k) {
    if (flo > 0.0) {
      lo -= step;
      flo = H(lo);
    } else {
      hi += step;
      fhi = H(hi);
    }
    step *= 2.0;
  }
  if (flo > 0.0 || fhi < 0.0)
    throw convex::SolverError("penalized step: could not bracket the root", std::min(
        std::abs(flo), std::abs(fhi)));
  for (int it = 0; it < cap; ++it) {
    double mid;
    if (fhi != flo) {
      mid = lo - flo * (hi - lo) / (fhi - flo);  // secant through the bracket
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    } else {
      mid = 0.5 * (lo + hi);
    }
    const double fm = H(mid);
    if (std::abs(fm) <= tol || hi - lo <= tol * (1.0 + std::abs(mid))) return mid;
    if (fm > 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

/// Implicit solve of the penalized equation, any dimension: the contraction
///   Y <- (r + (dt/eps) J^phi_eps(Y) + (dA/eps) J^psi_eps(Y)) / (1 + dt/eps + dA/eps)
/// has rate (dt + dA) / (eps + dt + dA) < 1 unconditionally.
VectorXd solve_penalized_vector(const ConvexSpec& phi, const ConvexSpec& psi, double dt,
                                double dA, double eps, const VectorXd& r, double tol, int cap) {
  const double wphi = dt / eps, wpsi = dA / eps;
  const double denom = 1.0 + wphi + wpsi;
  VectorXd y = r;
  for (int it = 0; it < cap; ++it) {
    VectorXd next = r;
    if (wphi > 0.0) next += wphi * apply_resolvent(phi, eps, y);
    if (wpsi > 0.0) next += wpsi * apply_resolvent(psi, eps, y);
    next /= denom;
    const double move = (next - y).norm();
    y = std::move(next);
    if (move <= tol * (1.0 + y.norm())) return y;
  }
  throw convex::SolverError("penalized step: contraction did not reach tolerance", 0.0);
}

}  // namespace

StepResult backward_step(const VectorXd& e_next, double t_i, const VectorXd& x_i, double dt,
                         double dA, const CoefficientSet& coeffs, const ConvexSpec& phi,
                         const ConvexSpec& psi, const SolverParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("backward_step: dt must be > 0");
  if (dA < 0.0) throw std::invalid_argument("backward_step: dA must be >= 0");
  const int m = static_cast<int>(e_next.size());

  StepResult out;
  out.contraction_warning =
      (coeffs.constants.beta + coeffs.constants.gamma) * (dt + dA) >= 1.0;
  out.u = VectorXd::Zero(m);
  out.v = VectorXd::Zero(m);

  VectorXd y = e_next, f_val(m), g_val(m), r(m), p(m), y_new(m);
  double residual = 0.0;
  for (int it = 0; it < params.n_inner; ++it) {
    coeffs.driver(t_i, x_i, y, f_val);
    r = e_next + dt * f_val;
    if (dA > 0.0) {
      coeffs.boundary_driver(t_i, x_i, y, g_val);
      r += dA * g_val;
    }

    if (params.prox_mode == SolverParams::ProxMode::exact_resolvent) {
      if (params.phi_first) {
        p = apply_resolvent(phi, dt, r);
        y_new = dA > 0.0 ? apply_resolvent(psi, dA, p) : p;
        out.u = (r - p) / dt;
        if (dA > 0.0) out.v = (p - y_new) / dA;
      } else {
        p = dA > 0.0 ? apply_resolvent(psi, dA, r) : r;
        y_new = apply_resolvent(phi, dt, p);
        if (dA > 0.0) out.v = (r - p) / dA;
        out.u = (p - y_new) / dt;
      }
    } else {
      const double eps = params.penal_epsilon;
      if (m == 1) {
        y_new.resize(1);
        y_new[0] = solve_penalized_scalar(phi, psi, dt, dA, eps, r[0], params.tol, 10000);
      } else {
        y_new = solve_penalized_vector(phi, psi, dt, dA, eps, r, params.tol, 10000);
      }
      out.u = convex::moreau_gradient(phi, MoreauParams(eps), y_new);
      out.v = dA > 0.0 ? convex::moreau_gradient(psi, MoreauParams(eps), y_new)
                       : VectorXd::Zero(m);
    }

    residual = (y_new - y).norm();
    y = y_new;
    if (residual <= params.tol * (1.0 + y.norm())) {
      out.y = y;
      return out;
    }
  }
  throw convex::SolverError("backward_step: implicit fixed point did not converge", residual);
}

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }
double norm_pdf(double z) {
  return 0.39894228040143267794 * std::exp(-0.5 * z * z);
}

struct NodeTransition {
  int k_lo = 0;
  std::vector<double> weights;
  double dA = 0.0;
};

/// Expected one-step local time of reflected Brownian motion started at
/// distance delta from the boundary, step standard deviation s:
/// E (sup_{u<=dt} sigma W_u - delta)^+ = 2 [ s pdf(delta/s) - delta cdf(-delta/s) ].
double reflected_local_time_mean(double delta, double s) {
  if (s < 1e-14) return std::max(0.0, -delta);
  return 2.0 * (s * norm_pdf(delta / s) - delta * norm_cdf(-delta / s));
}

/// One-step transition from a grid node: exact Gaussian Euler kernel with the
/// out-of-domain mass reflected back by the method of images, binned onto the
/// nodes by linear hat weights (closed-form partial moments). The image
/// kernel is the exact reflected transition density for driftless steps; the
/// clamp-to-boundary kernel is not used here because its boundary bias decays
/// only like sqrt(dt).
NodeTransition gaussian_projected_transition(const std::vector<double>& x_grid, double mu,
                                             double s) {
  const int n = static_cast<int>(x_grid.size());
  const double lo = x_grid.front(), hi = x_grid.back();
  NodeTransition tr;
  if (s < 1e-14) {
    const double xi = std::clamp(mu, lo, hi);
    tr.dA = std::max(0.0, mu - hi) + std::max(0.0, lo - mu);
    auto it = std::upper_bound(x_grid.begin(), x_grid.end(), xi);
    int k = std::clamp(static_cast<int>(it - x_grid.begin()) - 1, 0, n - 2);
    const double w = (xi - x_grid[k]) / (x_grid[k + 1] - x_grid[k]);
    tr.k_lo = k;
    tr.weights = {1.0 - w, w};
    return tr;
  }

  // hat-weight accumulation of one Gaussian branch over the grid band
  tr.k_lo = n - 1;
  int k_hi_used = 0;
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  auto add_branch = [&](double mean) {
    int k_min = 0, k_max = n - 1;
    const double band_lo = mean - 12.0 * s, band_hi = mean + 12.0 * s;
    while (k_min + 1 < n - 1 && x_grid[k_min + 1] < band_lo) ++k_min;
    while (k_max - 1 > 0 && x_grid[k_max - 1] > band_hi) --k_max;
    if (k_min >= k_max) return;
    tr.k_lo = std::min(tr.k_lo, k_min);
    k_hi_used = std::max(k_hi_used, k_max);
    for (int k = k_min; k < k_max; ++k) {
      const double a = x_grid[k], b = x_grid[k + 1];
      const double za = (a - mean) / s, zb = (b - mean) / s;
      const double mass = norm_cdf(zb) - norm_cdf(za);
      if (mass <= 0.0) continue;
      const double first = mean * mass + s * (norm_pdf(za) - norm_pdf(zb));
      const double dxk = b - a;
      acc[static_cast<std::size_t>(k)] += (b * mass - first) / dxk;
      acc[static_cast<std::size_t>(k) + 1] += (first - a * mass) / dxk;
    }
  };
  add_branch(mu);              // direct mass inside [lo, hi]
  add_branch(2.0 * hi - mu);   // image of the mass beyond hi
  add_branch(2.0 * lo - mu);   // image of the mass below lo
  if (tr.k_lo > k_hi_used) {  // degenerate: everything collapsed to a point
    tr.k_lo = 0;
    k_hi_used = n - 1;
  }
  tr.weights.assign(acc.begin() + tr.k_lo, acc.begin() + k_hi_used + 1);

  tr.dA = reflected_local_time_mean(hi - mu, s) + reflected_local_time_mean(mu - lo, s);
  return tr;
}

/// Simulated counterpart of the same kernel: the one-step Skorokhod map is
/// sampled exactly through the running extremum of the Brownian bridge, so
/// the landing law and the local-time increments agree with the semi-analytic
/// weights in distribution.
NodeTransition mc_transition(const CoefficientSet& coeffs, const std::vector<double>& x_grid,
                             double t, int node, double dt, int n_paths, std::uint64_t seed,
                             int time_index) {
  const int n = static_cast<int>(x_grid.size());
  NodeTransition tr;
  tr.k_lo = 0;
  tr.weights.assign(static_cast<std::size_t>(n), 0.0);
  CounterRng rng(CounterRng::derive_key(
      seed, "trans", (static_cast<std::uint64_t>(time_index) << 32) ^
                         static_cast<std::uint64_t>(node)));
  VectorXd x(1), b(1);
  MatrixXd sigma(1, 1);
  x[0] = x_grid[node];
  coeffs.drift(t, x, b);
  coeffs.diffusion(t, x, sigma);
  const double s = std::abs(sigma(0, 0)) * std::sqrt(dt);
  const double lo = x_grid.front(), hi = x_grid.back();
  double acc_dA = 0.0;
  const double share = 1.0 / n_paths;
  for (int p = 0; p < n_paths; ++p) {
    const double e = b[0] * dt + s * rng.normal();  // predictor displacement
    double xi = x[0] + e;
    double dA = 0.0;
    if (s < 1e-14) {
      dA = std::max(0.0, xi - hi) + std::max(0.0, lo - xi);
      xi = std::clamp(xi, lo, hi);
    } else {
      // running max/min of the in-step bridge, sampled exactly
      const double u1 = rng.uniform01();
      const double u2 = rng.uniform01();
      const double bridge_max = 0.5 * (e + std::sqrt(e * e - 2.0 * s * s * std::log(u1)));
      const double bridge_min = 0.5 * (e - std::sqrt(e * e - 2.0 * s * s * std::log(u2)));
      const double over_hi = std::max(0.0, x[0] + bridge_max - hi);
      const double over_lo = std::max(0.0, lo - (x[0] + bridge_min));
      if (over_hi >= over_lo) {  // at most one boundary matters per step here
        dA = over_hi;
        xi -= over_hi;
      } else {
        dA = over_lo;
        xi += over_lo;
      }
      xi = std::clamp(xi, lo, hi);
    }
    acc_dA += dA;
    auto it = std::upper_bound(x_grid.begin(), x_grid.end(), xi);
    const int k = std::clamp(static_cast<int>(it - x_grid.begin()) - 1, 0, n - 2);
    const double w = (xi - x_grid[k]) / (x_grid[k + 1] - x_grid[k]);
    tr.weights[static_cast<std::size_t>(k)] += (1.0 - w) * share;
    tr.weights[static_cast<std::size_t>(k) + 1] += w * share;
  }
  tr.dA = acc_dA * share;
  return tr;
}

}  // namespace

GridSolution solve_grid(const Domain& domain_1d, const CoefficientSet& coeffs,
                        const ConvexSpec& phi, const ConvexSpec& psi,
                        const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                        const TransitionSpec& transition, const SolverParams& params) {
  if (domain_1d.dim() != 1) throw std::invalid_argument("solve_grid: d must be 1");
  if (t_grid.size() < 2 || x_grid.size() < 2)
    throw std::invalid_argument("solve_grid: need at least two time and space points");
  const int n_t = static_cast<int>(t_grid.size());
  const int n_x = static_cast<int>(x_grid.size());
  const int m = coeffs.value_dim;

  GridSolution sol;
  sol.t_grid = t_grid;
  sol.x_grid = x_grid;
  sol.m = m;
  sol.y.assign(n_t, MatrixXd::Zero(n_x, m));
  sol.u_sel.assign(n_t, MatrixXd::Zero(n_x, m));
  sol.v_sel.assign(n_t, MatrixXd::Zero(n_x, m));
  sol.dA_node = VectorXd::Zero(n_x);

  VectorXd xj(1), h_val(m);
  for (int j = 0; j < n_x; ++j) {
    xj[0] = x_grid[j];
    coeffs.terminal(xj, h_val);
    sol.y[n_t - 1].row(j) = h_val.transpose();
  }

  for (int i = n_t - 2; i >= 0; --i) {
    const double dt = t_grid[i + 1] - t_grid[i];
    const MatrixXd& next = sol.y[i + 1];
    MatrixXd& cur = sol.y[i];
    MatrixXd& u_cur = sol.u_sel[i];
    MatrixXd& v_cur = sol.v_sel[i];

    std::vector<NodeTransition> trans(n_x);
    parallel_for(static_cast<std::size_t>(n_x), [&](std::size_t j) {
      if (transition.kind == TransitionSpec::Kind::exact_gaussian_projected) {
        VectorXd x(1), b(1);
        MatrixXd sigma(1, 1);
        x[0] = x_grid[j];
        coeffs.drift(t_grid[i], x, b);
        coeffs.diffusion(t_grid[i], x, sigma);
        trans[j] = gaussian_projected_transition(x_grid, x_grid[j] + b[0] * dt,
                                                 std::abs(sigma(0, 0)) * std::sqrt(dt));
      } else {
        trans[j] = mc_transition(coeffs, x_grid, t_grid[i], static_cast<int>(j), dt,
                                 transition.mc_paths, transition.seed, i);
      }
      double total = 0.0;
      for (double w : trans[j].weights) total += w;
      if (std::abs(total - 1.0) > 1e-9)
        throw std::runtime_error("solve_grid: transition weights sum to " +
                                 std::to_string(total));
    });

    parallel_for(static_cast<std::size_t>(n_x), [&](std::size_t j) {
      const NodeTransition& tr = trans[j];
      VectorXd e_next = VectorXd::Zero(m);
      for (std::size_t k = 0; k < tr.weights.size(); ++k) {
        if (tr.weights[k] == 0.0) continue;
        e_next += tr.weights[k] * next.row(tr.k_lo + static_cast<int>(k)).transpose();
      }
      VectorXd x(1);
      x[0] = x_grid[j];
      StepResult step = backward_step(e_next, t_grid[i], x, dt, tr.dA, coeffs, phi, psi, params);
      cur.row(j) = step.y.transpose();
      u_cur.row(j) = step.u.transpose();
      v_cur.row(j) = step.v.transpose();
    });

    if (i == 0)
      for (int j = 0; j < n_x; ++j) sol.dA_node[j] = trans[j].dA;
  }

  double max_dA = sol.dA_node.maxCoeff();
  const double dt0 = t_grid[1] - t_grid[0];
  sol.contraction_warning =
      (coeffs.constants.beta + coeffs.constants.gamma) * (dt0 + max_dA) >= 1.0;
  return sol;
}

namespace {

struct SliceFit {
  MatrixXd fitted;   // n_paths x m
  double condition = 1.0;
};

/// Least-squares projection of the next values on a polynomial basis of the
/// state, one fit shared by all components. Rank-revealing QR keeps the fit
/// meaningful when the design degenerates (constant state on the frozen
/// prefix reduces to plain averaging).
SliceFit regress_slice(const VectorXd& state, const MatrixXd& targets, int degree) {
  const int n = static_cast<int>(state.size());
  double mu = state.mean();
  double sd = std::sqrt((state.array() - mu).square().sum() / n);
  if (sd < 1e-300) sd = 1.0;
  const int cols = degree + 1;
  MatrixXd design(n, cols);
  for (int i = 0; i < n; ++i) {
    const double z = (state[i] - mu) / sd;
    double p = 1.0;
    for (int c = 0; c < cols; ++c) {
      design(i, c) = p;
      p *= z;
    }
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  SliceFit fit;
  fit.fitted = design * qr.solve(targets);
  const auto& R = qr.matrixR();
  const int rank = static_cast<int>(qr.rank());
  if (rank > 0) {
    const double dmax = std::abs(R(0, 0));
    const double dmin = std::abs(R(rank - 1, rank - 1));
    fit.condition = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
  }
  return fit;
}

}  // namespace

RegressionSolution solve_regression(const forward::ForwardEnsemble& ensemble,
                                    const CoefficientSet& coeffs, const ConvexSpec& phi,
                                    const ConvexSpec& psi, const SolverParams& params) {
  const int n_paths = ensemble.n_paths();
  const int n_steps = ensemble.n_steps();
  const int m = coeffs.value_dim;
  if (n_paths < 10) throw std::invalid_argument("solve_regression: ensemble too small");
  if (params.basis_degree < 1)
    throw std::invalid_argument("solve_regression: basis degree must be >= 1");
  const double dt = ensemble.dt();

  RegressionSolution sol;
  sol.times = ensemble.times;
  sol.start_index = ensemble.start_index;
  sol.m = m;
  sol.Y.assign(m, MatrixXd::Zero(n_paths, n_steps + 1));
  sol.U.assign(m, MatrixXd::Zero(n_paths, n_steps + 1));
  sol.V.assign(m, MatrixXd::Zero(n_paths, n_steps + 1));
  sol.K1.assign(m, MatrixXd::Zero(n_paths, n_steps + 1));
  sol.K2.assign(m, MatrixXd::Zero(n_paths, n_steps + 1));
  sol.M_inc.assign(m, MatrixXd::Zero(n_paths, n_steps));
  if (params.estimate_z) sol.Z_est.emplace(m, MatrixXd::Zero(n_paths, n_steps));

  // terminal condition
  {
    VectorXd x(1), h_val(m);
    for (int p = 0; p < n_paths; ++p) {
      x[0] = ensemble.X(p, n_steps);
      coeffs.terminal(x, h_val);
      for (int c = 0; c < m; ++c) sol.Y[c](p, n_steps) = h_val[c];
    }
  }

  MatrixXd targets(n_paths, m);
  for (int i = n_steps - 1; i >= 0; --i) {
    const VectorXd state = ensemble.X.col(i);
    for (int c = 0; c < m; ++c) targets.col(c) = sol.Y[c].col(i + 1);
    const SliceFit fit = regress_slice(state, targets, params.basis_degree);
    sol.max_condition = std::max(sol.max_condition, fit.condition);
    if (!std::isfinite(fit.condition) || fit.condition > 1e12)
      throw convex::SolverError("solve_regression: ill-conditioned design matrix",
                                fit.condition);

    for (int c = 0; c < m; ++c)
      sol.M_inc[c].col(i) = targets.col(c) - fit.fitted.col(c);

    if (i < ensemble.start_index) {
      // frozen prefix: no drivers, no subdifferential terms
      for (int c = 0; c < m; ++c) sol.Y[c].col(i) = fit.fitted.col(c);
      continue;
    }

    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
      VectorXd e_next = fit.fitted.row(p).transpose();
      VectorXd x(1);
      x[0] = ensemble.X(p, i);
      const double dA = ensemble.A(p, i + 1) - ensemble.A(p, i);
      StepResult step = backward_step(e_next, ensemble.times[i], x, dt, dA, coeffs, phi, psi,
                                      params);
      for (int c = 0; c < m; ++c) {
        sol.Y[c](p, i) = step.y[c];
        sol.U[c](p, i) = step.u[c];
        sol.V[c](p, i) = step.v[c];
      }
    });

    if (params.estimate_z) {
      MatrixXd z_targets(n_paths, m);
      for (int c = 0; c < m; ++c)
        z_targets.col(c) = sol.M_inc[c].col(i).cwiseProduct(ensemble.dW.col(i)) / dt;
      const SliceFit zfit = regress_slice(state, z_targets, params.basis_degree);
      for (int c = 0; c < m; ++c) (*sol.Z_est)[c].col(i) = zfit.fitted.col(c);
    }
  }

  // cumulative selections
  for (int c = 0; c < m; ++c)
    for (int i = ensemble.start_index; i < n_steps; ++i) {
      sol.K1[c].col(i + 1) =
          sol.K1[c].col(i) + dt * sol.U[c].col(i);
      sol.K2[c].col(i + 1) =
          sol.K2[c].col(i) +
          (ensemble.A.col(i + 1) - ensemble.A.col(i)).cwiseProduct(sol.V[c].col(i));
    }

  sol.y0.resize(m);
  for (int c = 0; c < m; ++c) sol.y0[c] = sol.Y[c](0, std::max(0, ensemble.start_index));

  double max_dA = 0.0;
  for (int p = 0; p < n_paths; ++p)
    for (int i = 0; i < n_steps; ++i)
      max_dA = std::max(max_dA, ensemble.A(p, i + 1) - ensemble.A(p, i));
  sol.contraction_warning =
      (coeffs.constants.beta + coeffs.constants.gamma) * (dt + max_dA) >= 1.0;
  return sol;
}

std::pair<double, double> variational_residual(
    const std::vector<double>& times, const MatrixXd& y_path, const MatrixXd& u_path,
    const MatrixXd& v_path, const std::vector<double>& a_path, const ConvexSpec& phi,
    const ConvexSpec& psi, const std::vector<VectorXd>& probes, double s1, double s2) {
  const int n = static_cast<int>(times.size());
  if (y_path.rows() != n || u_path.rows() != n || v_path.rows() != n ||
      static_cast<int>(a_path.size()) != n)
    throw std::invalid_argument("variational_residual: inconsistent path lengths");
  const double T = times.back();

  cadlag::BVPath clock(cadlag::CadlagPath::identity(T));
  std::vector<double> a_vals(a_path.begin(), a_path.end());
  cadlag::BVPath local_time(
      cadlag::CadlagPath::scalar(times, a_vals, cadlag::Interp::linear));

  double worst_phi = 0.0, worst_psi = 0.0;
  std::vector<double> z1(n), z2(n);
  for (const auto& v : probes) {
    const double phi_v = convex::evaluate(phi, v);
    const double psi_v = convex::evaluate(psi, v);
    bool phi_ok = convex::is_finite_value(phi_v);
    bool psi_ok = convex::is_finite_value(psi_v);
    for (int i = 0; i < n; ++i) {
      const VectorXd yi = y_path.row(i).transpose();
      const double phi_y = convex::evaluate(phi, yi);
      const double psi_y = convex::evaluate(psi, yi);
      if (phi_ok) {
        z1[i] = convex::is_finite_value(phi_y)
                    ? (v - yi).dot(u_path.row(i).transpose()) + phi_y - phi_v
                    : convex::kPlusInfinity;
      }
      if (psi_ok) {
        z2[i] = convex::is_finite_value(psi_y)
                    ? (v - yi).dot(v_path.row(i).transpose()) + psi_y - psi_v
                    : convex::kPlusInfinity;
      }
    }
    if (phi_ok) {
      cadlag::CadlagPath p1 = cadlag::CadlagPath::scalar(times, z1, cadlag::Interp::step);
      worst_phi = std::max(worst_phi, cadlag::stieltjes_right(p1, clock, s1, s2));
    }
    if (psi_ok) {
      cadlag::CadlagPath p2 = cadlag::CadlagPath::scalar(times, z2, cadlag::Interp::step);
      worst_psi = std::max(worst_psi, cadlag::stieltjes_right(p2, local_time, s1, s2));
    }
  }
  return {std::max(0.0, worst_phi), std::max(0.0, worst_psi)};
}

std::vector<MomentRow> moment_bound_check(const std::vector<const RegressionSolution*>& solutions,
                                          double p, std::uint64_t seed) {
  std::vector<MomentRow> rows;
  rows.reserve(solutions.size());
  int label = 0;
  for (const auto* sol : solutions) {
    const int n_paths = static_cast<int>(sol->Y.front().rows());
    const int n_times = static_cast<int>(sol->Y.front().cols());
    std::vector<double> sup_p(n_paths);
    for (int j = 0; j < n_paths; ++j) {
      double sup = 0.0;
      for (int i = 0; i < n_times; ++i) {
        double norm2 = 0.0;
        for (int c = 0; c < sol->m; ++c) norm2 += sol->Y[c](j, i) * sol->Y[c](j, i);
        sup = std::max(sup, std::sqrt(norm2));
      }
      sup_p[j] = std::pow(sup, p);
    }
    MomentRow row;
    row.label = label;
    row.estimate = mean(sup_p);
    CounterRng rng(CounterRng::derive_key(seed, "mboot", static_cast<std::uint64_t>(label)));
    const int B = 200;
    std::vector<double> reps(B);
    for (int b = 0; b < B; ++b) {
      double acc = 0.0;
      for (int j = 0; j < n_paths; ++j)
        acc += sup_p[rng.below(static_cast<std::uint64_t>(n_paths))];
      reps[b] = acc / n_paths;
    }
    std::sort(reps.begin(), reps.end());
    row.ci_lo = reps[static_cast<int>(0.025 * (B - 1))];
    row.ci_hi = reps[static_cast<int>(0.975 * (B - 1))];
    rows.push_back(row);
    ++label;
  }
  return rows;
}

}  // namespace reflekt::backward
