#include "reflekt/forward.hpp"

#include <algorithm>
#include <cmath>

#include "reflekt/parallel.hpp"

namespace reflekt::forward {

namespace {

constexpr double kProjectionTol = 1e-12;

/// Solve X' = xp - delta * grad ell(X') with ell(X') = 0 and delta >= 0.
/// Newton on delta (the map delta -> ell is strictly decreasing with slope
/// about -|grad ell|^2) with a bisection bracket as fallback; the inner point
/// update is a short fixed-point loop. Exact in one sweep on the linear
/// collars of the built-in domains.
std::pair<VectorXd, double> project_one_step(const Domain& domain, const VectorXd& xp) {
  double delta = 0.0;
  double d_lo = 0.0;                 // ell > 0 side
  double d_hi = -1.0;                // ell < 0 side, negative = not bracketed yet
  VectorXd z = xp;
  VectorXd g(xp.size());
  for (int iter = 0; iter < 50; ++iter) {
    z = xp;
    if (delta > 0.0) {
      for (int inner = 0; inner < 30; ++inner) {
        VectorXd zn = xp - delta * domain.grad_ell(z);
        const double move = (zn - z).norm();
        z = std::move(zn);
        if (move < 1e-14) break;
      }
    }
    const double e = domain.ell(z);
    if (std::abs(e) <= kProjectionTol && delta >= 0.0) return {z, delta};
    if (e > 0.0)
      d_lo = delta;
    else
      d_hi = delta;
    g = domain.grad_ell(z);
    const double g2 = std::max(g.squaredNorm(), 1e-8);
    double next = delta + e / g2;
    if (d_hi >= 0.0) {
      if (!(next > d_lo && next < d_hi)) next = 0.5 * (d_lo + d_hi);
    } else if (next <= d_lo) {
      next = 2.0 * std::max(delta, std::abs(e)) + 1e-6;
    }
    delta = next;
  }
  throw StepRejection(
      "one-step boundary projection did not converge; the predictor left the tubular "
      "neighborhood of the boundary - reduce the time step");
}

std::vector<double> uniform_grid(double T, int n_steps) {
  std::vector<double> times(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) times[i] = T * static_cast<double>(i) / n_steps;
  times.back() = T;
  return times;
}

}  // namespace

ForwardPath simulate_forward(const Domain& domain, const CoefficientSet& coeffs, double t,
                             const VectorXd& x, double T, int n_steps, CounterRng& rng) {
  if (n_steps < 1) throw std::invalid_argument("simulate_forward: n_steps must be >= 1");
  if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("simulate_forward: t must be in [0, T]");
  if (!domain.contains(x, 1e-9))
    throw std::invalid_argument("simulate_forward: start point is outside the closure");

  const int d = domain.dim();
  ForwardPath path;
  path.times = uniform_grid(T, n_steps);
  const double dt = path.times[1] - path.times[0];
  path.start_index = std::clamp(static_cast<int>(std::lround(t / dt)), 0, n_steps);
  path.states.resize(n_steps + 1, d);
  path.local_time = VectorXd::Zero(n_steps + 1);
  path.noise = MatrixXd::Zero(n_steps, d);

  const double sqrt_dt = std::sqrt(dt);
  VectorXd cur = x;
  VectorXd b(d), dw(d), xp(d);
  MatrixXd sigma(d, d);
  path.states.row(0) = cur.transpose();
  for (int i = 0; i < n_steps; ++i) {
    // draw every step so that paths with different start times share the
    // same per-sample noise sequence
    for (int j = 0; j < d; ++j) dw[j] = sqrt_dt * rng.normal();
    if (i < path.start_index) {
      path.states.row(i + 1) = cur.transpose();
      continue;
    }
    path.noise.row(i) = dw.transpose();
    coeffs.drift(path.times[i], cur, b);
    coeffs.diffusion(path.times[i], cur, sigma);
    xp = cur + dt * b;
    xp.noalias() += sigma * dw;
    double dA = 0.0;
    if (domain.ell(xp) > 0.0) {
      auto [z, delta] = project_one_step(domain, xp);
      cur = std::move(z);
      dA = delta;
    } else {
      cur = xp;
    }
    path.states.row(i + 1) = cur.transpose();
    path.local_time[i + 1] = path.local_time[i] + dA;
  }
  return path;
}

double local_time_ito_residual(const Domain& domain, const CoefficientSet& coeffs,
                               const ForwardPath& path) {
  const int d = path.states.cols();
  const int n = path.n_steps();
  const double dt = path.dt();
  const double ell0 = domain.ell(path.states.row(path.start_index).transpose());

  double acc = 0.0;
  double worst = 0.0;
  VectorXd b(d), cur(d), g(d), dw(d);
  MatrixXd sigma(d, d), hess(d, d);
  for (int i = path.start_index; i < n; ++i) {
    cur = path.states.row(i).transpose();
    coeffs.drift(path.times[i], cur, b);
    coeffs.diffusion(path.times[i], cur, sigma);
    g = domain.grad_ell(cur);
    hess = domain.hess_ell(cur);
    const double generator = 0.5 * (sigma * sigma.transpose() * hess).trace() + b.dot(g);
    dw = path.noise.row(i).transpose();
    acc += generator * dt + g.dot(sigma * dw);
    const double ell_next = domain.ell(path.states.row(i + 1).transpose());
    const double a_hat = acc - (ell_next - ell0);
    worst = std::max(worst, std::abs(path.local_time[i + 1] - a_hat));
  }
  return worst;
}

EnsembleStats simulate_forward_stats(const Domain& domain, const CoefficientSet& coeffs, double t,
                                     const VectorXd& x, double T, int n_steps, int n_paths,
                                     std::uint64_t seed) {
  EnsembleStats stats;
  stats.n_paths = n_paths;
  stats.terminal_A.resize(n_paths);
  stats.terminal_X0.resize(n_paths);
  stats.sup_abs_X.resize(n_paths);
  std::vector<char> in_closure(n_paths, 1), monotone(n_paths, 1), support_ok(n_paths, 1);

  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t s) {
    CounterRng rng(CounterRng::derive_key(seed, "fwd", s));
    ForwardPath path = simulate_forward(domain, coeffs, t, x, T, n_steps, rng);
    double sup_x = 0.0;
    bool ok_closure = true, ok_monotone = true, ok_support = true;
    for (int i = 0; i <= path.n_steps(); ++i) {
      const VectorXd xi = path.states.row(i).transpose();
      sup_x = std::max(sup_x, xi.norm());
      if (domain.ell(xi) > 1e-9) ok_closure = false;
      if (i > 0) {
        const double dA = path.local_time[i] - path.local_time[i - 1];
        if (dA < 0.0) ok_monotone = false;
        if (dA > 0.0 && domain.ell(xi) < -1e-9) ok_support = false;
      }
    }
    in_closure[s] = ok_closure;
    monotone[s] = ok_monotone;
    support_ok[s] = ok_support;
    stats.terminal_A[s] = path.local_time[path.n_steps()];
    stats.terminal_X0[s] = path.states(path.n_steps(), 0);
    stats.sup_abs_X[s] = sup_x;
  });

  for (int s = 0; s < n_paths; ++s) {
    stats.all_in_closure = stats.all_in_closure && in_closure[s];
    stats.all_monotone = stats.all_monotone && monotone[s];
    stats.boundary_support_ok = stats.boundary_support_ok && support_ok[s];
  }
  return stats;
}

ForwardEnsemble simulate_forward_ensemble(const Domain& domain, const CoefficientSet& coeffs,
                                          double t, const VectorXd& x, double T, int n_steps,
                                          int n_paths, std::uint64_t seed) {
  if (domain.dim() != 1)
    throw std::invalid_argument("simulate_forward_ensemble: stored ensembles are 1-D");
  ForwardEnsemble ens;
  ens.times = uniform_grid(T, n_steps);
  const double dt = ens.times[1] - ens.times[0];
  ens.start_index = std::clamp(static_cast<int>(std::lround(t / dt)), 0, n_steps);
  ens.X.resize(n_paths, n_steps + 1);
  ens.A.resize(n_paths, n_steps + 1);
  ens.dW.resize(n_paths, n_steps);

  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t s) {
    CounterRng rng(CounterRng::derive_key(seed, "fwd", s));
    ForwardPath path = simulate_forward(domain, coeffs, t, x, T, n_steps, rng);
    for (int i = 0; i <= n_steps; ++i) {
      ens.X(s, i) = path.states(i, 0);
      ens.A(s, i) = path.local_time[i];
    }
    for (int i = 0; i < n_steps; ++i) ens.dW(s, i) = path.noise(i, 0);
  });
  return ens;
}

std::vector<ContinuityRow> forward_continuity_experiment(
    const Domain& domain, const CoefficientSet& coeffs,
    const std::vector<std::pair<std::pair<double, VectorXd>, std::pair<double, VectorXd>>>& pairs,
    double p, int n_paths, int n_steps, double T, std::uint64_t seed) {
  std::vector<ContinuityRow> rows;
  rows.reserve(pairs.size());
  for (std::size_t pair_id = 0; pair_id < pairs.size(); ++pair_id) {
    const auto& [start0, start1] = pairs[pair_id];
    std::vector<double> sup_x_p(n_paths), sup_a_p(n_paths);
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t s) {
      // both members ride on the same Brownian stream
      const std::uint64_t key = CounterRng::derive_key(seed, "cont", s);
      CounterRng rng0(key), rng1(key);
      ForwardPath p0 = simulate_forward(domain, coeffs, start0.first, start0.second, T, n_steps,
                                        rng0);
      ForwardPath p1 = simulate_forward(domain, coeffs, start1.first, start1.second, T, n_steps,
                                        rng1);
      double sx = 0.0, sa = 0.0;
      for (int i = 0; i <= n_steps; ++i) {
        sx = std::max(sx, (p0.states.row(i) - p1.states.row(i)).norm());
        sa = std::max(sa, std::abs(p0.local_time[i] - p1.local_time[i]));
      }
      sup_x_p[s] = std::pow(sx, p);
      sup_a_p[s] = std::pow(sa, p);
    });
    ContinuityRow row;
    row.t0 = start0.first;
    row.t1 = start1.first;
    row.x0 = start0.second[0];
    row.x1 = start1.second[0];
    row.dx = (start0.second - start1.second).norm();
    row.dt_gap = std::abs(start0.first - start1.first);
    row.est_X = mean(sup_x_p);
    row.est_A = mean(sup_a_p);
    row.se_X = standard_error(sup_x_p);
    row.se_A = standard_error(sup_a_p);
    const double denom = std::pow(row.dx, p) + std::pow(row.dt_gap, 0.5 * p);
    row.ratio = denom > 0.0 ? (row.est_X + row.est_A) / denom : 0.0;
    rows.push_back(row);
  }
  return rows;
}

ExpMomentReport exponential_moment(const Domain& domain, const CoefficientSet& coeffs, double t,
                                   const VectorXd& x, double T, int n_steps, int n_paths,
                                   double kappa, std::uint64_t seed, int n_bootstrap) {
  EnsembleStats stats = simulate_forward_stats(domain, coeffs, t, x, T, n_steps, n_paths, seed);
  std::vector<double> weights(n_paths);
  for (int s = 0; s < n_paths; ++s) weights[s] = std::exp(kappa * stats.terminal_A[s]);

  ExpMomentReport report;
  report.estimate = mean(weights);

  CounterRng rng(CounterRng::derive_key(seed, "boot", 0));
  std::vector<double> replicates(n_bootstrap);
  for (int b = 0; b < n_bootstrap; ++b) {
    double acc = 0.0;
    for (int s = 0; s < n_paths; ++s)
      acc += weights[rng.below(static_cast<std::uint64_t>(n_paths))];
    replicates[b] = acc / n_paths;
  }
  std::sort(replicates.begin(), replicates.end());
  report.ci_lo = replicates[static_cast<int>(0.025 * (n_bootstrap - 1))];
  report.ci_hi = replicates[static_cast<int>(0.975 * (n_bootstrap - 1))];
  const double m = mean(replicates);
  double sd = 0.0;
  for (double r : replicates) sd += (r - m) * (r - m);
  sd = std::sqrt(sd / std::max(1, n_bootstrap - 1));
  report.bootstrap_cv = m > 0.0 ? sd / m : 0.0;
  return report;
}

cadlag::PathEnsemble state_ensemble(const ForwardEnsemble& ens) {
  cadlag::PathEnsemble out;
  out.times = ens.times;
  out.values = ens.X;
  return out;
}

cadlag::PathEnsemble local_time_ensemble(const ForwardEnsemble& ens) {
  cadlag::PathEnsemble out;
  out.times = ens.times;
  out.values = ens.A;
  return out;
}

}  // namespace reflekt::forward
