#include "reflekt/valuefn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reflekt/parallel.hpp"

namespace reflekt::valuefn {

namespace {

int nearest(const std::vector<double>& grid, double v) {
  auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.end()) return static_cast<int>(grid.size()) - 1;
  if (it == grid.begin()) return 0;
  const int hi = static_cast<int>(it - grid.begin());
  return (grid[hi] - v <= v - grid[hi - 1]) ? hi : hi - 1;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  g.back() = hi;
  return g;
}

}  // namespace

int ValueSurface::t_index(double t) const { return nearest(t_grid, t); }
int ValueSurface::x_index(double x) const { return nearest(x_grid, x); }

double ValueSurface::at(double t, double x) const {
  const auto locate = [](const std::vector<double>& g, double v, int& i, double& w) {
    if (v <= g.front()) {
      i = 0;
      w = 0.0;
      return;
    }
    if (v >= g.back()) {
      i = static_cast<int>(g.size()) - 2;
      w = 1.0;
      return;
    }
    auto it = std::upper_bound(g.begin(), g.end(), v);
    i = static_cast<int>(it - g.begin()) - 1;
    w = (v - g[i]) / (g[i + 1] - g[i]);
  };
  int it_ = 0, ix_ = 0;
  double wt = 0.0, wx = 0.0;
  locate(t_grid, t, it_, wt);
  locate(x_grid, x, ix_, wx);
  return (1.0 - wt) * ((1.0 - wx) * u(it_, ix_) + wx * u(it_, ix_ + 1)) +
         wt * ((1.0 - wx) * u(it_ + 1, ix_) + wx * u(it_ + 1, ix_ + 1));
}

ValueSurface value_surface(const Problem& problem, const GridEngineOptions& opts) {
  if (problem.coeffs.value_dim != 1)
    throw std::invalid_argument("value_surface: m must be 1 for surface export");
  std::vector<double> t_grid = linspace(0.0, problem.T, opts.n_t + 1);
  std::vector<double> x_grid = linspace(problem.domain.lo(), problem.domain.hi(), opts.n_x);
  backward::GridSolution sol = backward::solve_grid(problem.domain, problem.coeffs, problem.phi,
                                                    problem.psi, t_grid, x_grid,
                                                    opts.transition, opts.params);
  ValueSurface surf;
  surf.t_grid = std::move(t_grid);
  surf.x_grid = std::move(x_grid);
  surf.u.resize(surf.t_grid.size(), surf.x_grid.size());
  surf.se = Eigen::MatrixXd::Zero(surf.t_grid.size(), surf.x_grid.size());
  for (std::size_t i = 0; i < surf.t_grid.size(); ++i)
    for (std::size_t j = 0; j < surf.x_grid.size(); ++j)
      surf.u(static_cast<int>(i), static_cast<int>(j)) =
          sol.y[i](static_cast<int>(j), 0);
  return surf;
}

PointEstimate evaluate_u(const Problem& problem, const GridEngineOptions& opts, double t,
                         double x) {
  const ValueSurface surf = value_surface(problem, opts);
  PointEstimate est;
  est.value = surf.u(surf.t_index(t), surf.x_index(x));
  est.se = 0.0;
  return est;
}

PointEstimate evaluate_u_regression(const Problem& problem, const RegressionEngineOptions& opts,
                                    double t, double x) {
  VectorXd x0(1);
  x0[0] = x;
  forward::ForwardEnsemble ens = forward::simulate_forward_ensemble(
      problem.domain, problem.coeffs, t, x0, problem.T, opts.n_steps, opts.n_paths, opts.seed);
  backward::RegressionSolution sol =
      backward::solve_regression(ens, problem.coeffs, problem.phi, problem.psi, opts.params);

  PointEstimate est;
  est.value = sol.y0[0];

  // standard error from disjoint path blocks, each solved independently
  const int blocks = std::max(2, std::min(opts.bootstrap_blocks, opts.n_paths / 50));
  const int per_block = opts.n_paths / blocks;
  std::vector<double> block_values(blocks);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    forward::ForwardEnsemble sub;
    sub.times = ens.times;
    sub.start_index = ens.start_index;
    const int lo = static_cast<int>(b) * per_block;
    sub.X = ens.X.middleRows(lo, per_block);
    sub.A = ens.A.middleRows(lo, per_block);
    sub.dW = ens.dW.middleRows(lo, per_block);
    backward::RegressionSolution bsol =
        backward::solve_regression(sub, problem.coeffs, problem.phi, problem.psi, opts.params);
    block_values[b] = bsol.y0[0];
  });
  // a block estimate has variance ~ blocks x the full-sample variance, so the
  // standard error of the block mean estimates the full-sample error
  est.se = standard_error(block_values);
  return est;
}

ModulusReport continuity_modulus(const Problem& problem, const GridEngineOptions& opts, double t,
                                 double x, double dt0, double dx0, int levels) {
  const ValueSurface surf = value_surface(problem, opts);
  const int it0 = surf.t_index(t);
  const int ix0 = surf.x_index(x);
  const double u0 = surf.u(it0, ix0);

  ModulusReport report;
  report.limit_value = u0;
  for (int n = 1; n <= levels; ++n) {
    const double scale = std::pow(2.0, -n);
    const int itn = surf.t_index(surf.t_grid[it0] + dt0 * scale);
    const int ixn = surf.x_index(surf.x_grid[ix0] + dx0 * scale);
    ModulusRow row;
    row.n = n;
    row.dt = std::abs(surf.t_grid[itn] - surf.t_grid[it0]);
    row.dx = std::abs(surf.x_grid[ixn] - surf.x_grid[ix0]);
    row.gap = std::abs(surf.u(itn, ixn) - u0);
    row.se = 0.0;
    report.rows.push_back(row);
  }

  // log-log fits over informative rows
  auto fit_slope = [](const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [lx, ly] : pts) {
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  };
  std::vector<std::pair<double, double>> px, pt;
  for (const auto& row : report.rows) {
    if (row.gap <= 0.0) continue;
    if (row.dx > 0.0) px.push_back({std::log(row.dx), std::log(row.gap)});
    if (row.dt > 0.0) pt.push_back({std::log(std::sqrt(row.dt)), std::log(row.gap)});
  }
  report.fitted_exponent_x = fit_slope(px);
  report.fitted_exponent_t = fit_slope(pt);
  return report;
}

std::vector<MarkovRow> markov_consistency(const Problem& problem, const GridEngineOptions& grid,
                                          const RegressionEngineOptions& reg, double t, double x,
                                          const std::vector<double>& s_checkpoints) {
  const ValueSurface surf = value_surface(problem, grid);
  VectorXd x0(1);
  x0[0] = x;
  forward::ForwardEnsemble ens = forward::simulate_forward_ensemble(
      problem.domain, problem.coeffs, t, x0, problem.T, reg.n_steps, reg.n_paths, reg.seed);
  backward::RegressionSolution sol =
      backward::solve_regression(ens, problem.coeffs, problem.phi, problem.psi, reg.params);

  std::vector<MarkovRow> rows;
  rows.reserve(s_checkpoints.size());
  for (double s : s_checkpoints) {
    const int i = nearest(ens.times, s);
    double acc = 0.0;
    for (int p = 0; p < ens.n_paths(); ++p)
      acc += std::abs(sol.Y[0](p, i) - surf.at(ens.times[i], ens.X(p, i)));
    rows.push_back({ens.times[i], acc / ens.n_paths()});
  }
  return rows;
}

TightnessSequenceReport tightness_along_sequence(
    const Problem& problem, const RegressionEngineOptions& opts,
    const std::vector<std::pair<double, double>>& sequence, double y_scale_per_member) {
  if (sequence.size() < 3)
    throw std::invalid_argument("tightness_along_sequence: need at least 3 sequence members");

  std::vector<cadlag::PathEnsemble> ys, k1s, k2s, ms, states;
  std::vector<double> times;
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    const auto [tn, xn] = sequence[n];
    VectorXd x0(1);
    x0[0] = xn;
    forward::ForwardEnsemble ens = forward::simulate_forward_ensemble(
        problem.domain, problem.coeffs, tn, x0, problem.T, opts.n_steps, opts.n_paths,
        opts.seed + n);
    backward::RegressionSolution sol =
        backward::solve_regression(ens, problem.coeffs, problem.phi, problem.psi, opts.params);
    times = ens.times;

    const double factor = 1.0 + static_cast<double>(n) * (y_scale_per_member - 1.0);
    cadlag::PathEnsemble y{ens.times, factor * sol.Y[0]};
    cadlag::PathEnsemble k1{ens.times, sol.K1[0]};
    cadlag::PathEnsemble k2{ens.times, sol.K2[0]};
    MatrixXd m_cum = MatrixXd::Zero(ens.n_paths(), ens.n_steps() + 1);
    for (int i = 0; i < ens.n_steps(); ++i)
      m_cum.col(i + 1) = m_cum.col(i) + sol.M_inc[0].col(i);
    cadlag::PathEnsemble m{ens.times, std::move(m_cum)};
    ys.push_back(std::move(y));
    k1s.push_back(std::move(k1));
    k2s.push_back(std::move(k2));
    ms.push_back(std::move(m));
    states.push_back(forward::state_ensemble(ens));
  }

  const cadlag::Partition pi(times);
  const cadlag::Regressor reg;
  const auto rep_y = cadlag::s_tightness_diagnostic(ys, pi, reg, states);
  const auto rep_k1 = cadlag::s_tightness_diagnostic(k1s, pi, reg, states);
  const auto rep_k2 = cadlag::s_tightness_diagnostic(k2s, pi, reg, states);
  const auto rep_m = cadlag::s_tightness_diagnostic(ms, pi, reg, states);

  TightnessSequenceReport report;
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    TightnessSequenceRow row;
    row.n = static_cast<int>(n) + 1;
    row.t_n = sequence[n].first;
    row.x_n = sequence[n].second;
    row.y = rep_y.rows[n];
    row.k1 = rep_k1.rows[n];
    row.k2 = rep_k2.rows[n];
    row.m = rep_m.rows[n];
    row.total = row.y.total + row.k1.total + row.k2.total + row.m.total;
    report.rows.push_back(row);
  }
  report.max_total = report.rows.front().total;
  report.min_total = report.rows.front().total;
  for (const auto& r : report.rows) {
    report.max_total = std::max(report.max_total, r.total);
    report.min_total = std::min(report.min_total, r.total);
  }
  return report;
}

}  // namespace reflekt::valuefn
