#include <doctest.h>

#include <cmath>

#include "reflekt/forward.hpp"
#include "reflekt/parallel.hpp"
#include "reflekt/presets.hpp"
#include "testutil.hpp"

using namespace reflekt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

CoefficientSet drift_only(double b) {
  CoefficientSet c;
  c.state_dim = 1;
  c.value_dim = 1;
  c.drift = [b](double, const VectorXd&, VectorXd& out) { out.setConstant(b); };
  c.diffusion = [](double, const VectorXd&, MatrixXd& out) { out.setZero(); };
  c.driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) { out.setZero(); };
  c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
    out.setZero();
  };
  c.terminal = [](const VectorXd&, VectorXd& out) { out.setZero(); };
  return c;
}

/// Spectral series for E[A_T] of reflected Brownian motion on (-1, 1) started
/// at 0: solving v_t = v_xx/2 with unit Neumann influx at both ends gives
/// v(T, 0) = T/2 + q(0) + transient, with Neumann eigenfunction coefficients
/// c_{2j} = -2/(j pi)^2; at x = 0 only even modes contribute with sign
/// (-1)^j, so E[A_T] = T/2 - 1/6 + 2 sum_j (-1)^{j+1} e^{-(j pi)^2 T/2}/(j pi)^2.
double expected_local_time_series(double T) {
  double v = 0.5 * T - 1.0 / 6.0;
  for (int j = 1; j <= 40; ++j) {
    const double l = j * 3.14159265358979323846;
    v += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-0.5 * l * l * T) / (l * l);
  }
  return v;
}

}  // namespace

TEST_CASE("frozen dynamics stay put") {
  Problem heat = make_preset("heat");
  CoefficientSet c = drift_only(0.0);
  CounterRng rng(1);
  forward::ForwardPath p =
      forward::simulate_forward(heat.domain, c, 0.0, vec1(0.3), 1.0, 100, rng);
  for (int i = 0; i <= 100; ++i) {
    CHECK(p.states(i, 0) == 0.3);
    CHECK(p.local_time[i] == 0.0);
  }
}

TEST_CASE("deterministic Skorokhod problem") {
  // unit drift from 0 on (-1, 1): hits the boundary at time 1, then sticks
  Domain dom = Domain::interval(-1.0, 1.0);
  CoefficientSet c = drift_only(1.0);
  const double T = 2.0;
  const int n_steps = 2000;
  const double dt = T / n_steps;
  CounterRng rng(2);
  forward::ForwardPath p = forward::simulate_forward(dom, c, 0.0, vec1(0.0), T, n_steps, rng);
  CHECK(std::abs(p.local_time[n_steps] - (T - 1.0)) <= 2.0 * dt);
  CHECK(p.states(n_steps, 0) == doctest::Approx(1.0));
  for (int i = 1; i <= n_steps; ++i)
    CHECK(p.local_time[i] >= p.local_time[i - 1]);

  // local-time reconstruction on the deterministic path: discretization only
  CHECK(forward::local_time_ito_residual(dom, c, p) <= 2.0 * dt);
}

TEST_CASE("frozen prefix and start snapping") {
  Problem heat = make_preset("heat");
  CounterRng rng(3);
  forward::ForwardPath p =
      forward::simulate_forward(heat.domain, heat.coeffs, 0.52, vec1(0.2), 1.0, 100, rng);
  CHECK(p.start_index == 52);
  for (int i = 0; i <= p.start_index; ++i) {
    CHECK(p.states(i, 0) == 0.2);
    CHECK(p.local_time[i] == 0.0);
  }
  for (int i = 0; i < p.start_index; ++i) CHECK(p.noise(i, 0) == 0.0);

  CHECK_THROWS_AS(
      forward::simulate_forward(heat.domain, heat.coeffs, 2.0, vec1(0.0), 1.0, 10, rng),
      std::invalid_argument);
  CHECK_THROWS_AS(
      forward::simulate_forward(heat.domain, heat.coeffs, 0.0, vec1(5.0), 1.0, 10, rng),
      std::invalid_argument);
}

TEST_CASE("pathwise invariants on a reflected ensemble") {
  Problem heat = make_preset("heat");
  forward::EnsembleStats stats = forward::simulate_forward_stats(
      heat.domain, heat.coeffs, 0.0, vec1(0.0), 1.0, 500, 4000, 77);
  CHECK(stats.all_in_closure);
  CHECK(stats.all_monotone);
  CHECK(stats.boundary_support_ok);
  for (double s : stats.sup_abs_X) CHECK(s <= heat.domain.bounding_radius() + 1e-9);
}

TEST_CASE("expected local time matches the spectral series") {
  Problem heat = make_preset("heat");
  const double series = expected_local_time_series(1.0);
  CHECK(series == doctest::Approx(0.334791).epsilon(1e-4));

  const int n_steps = 10000;  // dt = 1e-4
  const int n_paths = 40000;
  forward::EnsembleStats stats = forward::simulate_forward_stats(
      heat.domain, heat.coeffs, 0.0, vec1(0.0), 1.0, n_steps, n_paths, 5);
  const double est = mean(stats.terminal_A);
  const double se = standard_error(stats.terminal_A);
  // the projection scheme's local-time bias is ~0.25 sqrt(dt) here; allow a
  // generous 0.5 sqrt(dt) band on top of the Monte-Carlo error
  CHECK(std::abs(est - series) <= 0.5 * std::sqrt(1.0 / n_steps) + 3.0 * se);
}

TEST_CASE("ito reconstruction of the local time") {
  Problem heat = make_preset("heat");

  SUBCASE("vanishes for a frozen interior path") {
    CoefficientSet c = drift_only(0.0);
    CounterRng rng(5);
    forward::ForwardPath p =
        forward::simulate_forward(heat.domain, c, 0.0, vec1(0.1), 1.0, 200, rng);
    CHECK(forward::local_time_ito_residual(heat.domain, c, p) <= 1e-12);
  }

  SUBCASE("residual halves when the step is quartered") {
    auto mean_residual = [&](int n_steps) {
      const int n_rep = 160;
      std::vector<double> res(n_rep);
      parallel_for(n_rep, [&](std::size_t k) {
        CounterRng rng(CounterRng::derive_key(31, "ito", k));
        forward::ForwardPath p = forward::simulate_forward(heat.domain, heat.coeffs, 0.0,
                                                           vec1(0.0), 1.0, n_steps, rng);
        res[k] = forward::local_time_ito_residual(heat.domain, heat.coeffs, p);
      });
      return mean(res);
    };
    const double coarse = mean_residual(500);
    const double fine = mean_residual(2000);
    CHECK(coarse / fine >= 2.0 * 0.8);
    CHECK(coarse / fine <= 2.0 * 1.2);
  }
}

TEST_CASE("coupled continuity experiment") {
  Problem heat = make_preset("heat");

  SUBCASE("identical starts give zero estimates") {
    auto rows = forward::forward_continuity_experiment(
        heat.domain, heat.coeffs, {{{0.2, vec1(0.5)}, {0.2, vec1(0.5)}}}, 2.0, 200, 200, 1.0, 9);
    CHECK(rows[0].est_X == 0.0);
    CHECK(rows[0].est_A == 0.0);
  }

  SUBCASE("spatial scaling exponent is 2 for p = 2") {
    std::vector<std::pair<std::pair<double, VectorXd>, std::pair<double, VectorXd>>> pairs;
    std::vector<double> offsets{0.2, 0.1, 0.05, 0.025};
    for (double d : offsets)
      pairs.push_back({{0.0, vec1(0.4)}, {0.0, vec1(0.4 + d)}});
    auto rows = forward::forward_continuity_experiment(heat.domain, heat.coeffs, pairs, 2.0,
                                                       3000, 400, 1.0, 13);
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
      lx.push_back(std::log(r.dx));
      ly.push_back(std::log(r.est_X + r.est_A));
      // ratios stay bounded across the shrinking family
      CHECK(r.ratio <= 2.5);
    }
    const double slope = testutil::fit_slope(lx, ly);
    CHECK(slope >= 1.7);
    CHECK(slope <= 2.3);
  }
}

TEST_CASE("exponential moment of the local time") {
  Problem heat = make_preset("heat");
  auto report = forward::exponential_moment(heat.domain, heat.coeffs, 0.0, vec1(0.0), 1.0, 500,
                                            20000, 1.0, 21);
  CHECK(report.estimate > 1.0);
  CHECK(report.estimate < 5.0);
  CHECK(report.bootstrap_cv <= 0.05);
  CHECK(report.ci_lo <= report.estimate);
  CHECK(report.ci_hi >= report.estimate);
}

TEST_CASE("plain diffusion moments in a large domain") {
  // boundary never reached: X_T is a standard Gaussian around the start
  Domain big = Domain::interval(-100.0, 100.0);
  Problem heat = make_preset("heat");
  forward::EnsembleStats stats =
      forward::simulate_forward_stats(big, heat.coeffs, 0.0, vec1(1.5), 1.0, 400, 20000, 33);
  const double m = mean(stats.terminal_X0);
  const double se = standard_error(stats.terminal_X0);
  CHECK(std::abs(m - 1.5) <= 3.0 * se);
  double var = 0.0;
  for (double x : stats.terminal_X0) var += (x - m) * (x - m);
  var /= stats.terminal_X0.size() - 1;
  CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / stats.terminal_X0.size()));
  for (double a : stats.terminal_A) CHECK(a == 0.0);
}

TEST_CASE("ball domain reflection in two dimensions") {
  Domain ball = Domain::ball(2, 1.0);
  CoefficientSet c;
  c.state_dim = 2;
  c.value_dim = 1;
  c.drift = [](double, const VectorXd&, VectorXd& out) { out.setZero(); };
  c.diffusion = [](double, const VectorXd&, MatrixXd& out) { out.setIdentity(); };
  c.driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) { out.setZero(); };
  c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
    out.setZero();
  };
  c.terminal = [](const VectorXd&, VectorXd& out) { out.setZero(); };

  CounterRng rng(41);
  VectorXd x0 = VectorXd::Zero(2);
  forward::ForwardPath p = forward::simulate_forward(ball, c, 0.0, x0, 1.0, 2000, rng);
  double max_norm = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    max_norm = std::max(max_norm, p.states.row(i).norm());
    CHECK(ball.ell(p.states.row(i).transpose()) <= 1e-9);
    if (i > 0) CHECK(p.local_time[i] >= p.local_time[i - 1]);
  }
  CHECK(max_norm <= 1.0 + 1e-9);
  CHECK(p.local_time[2000] > 0.0);  // the walk does hit the unit circle by T=1
  CHECK(forward::local_time_ito_residual(ball, c, p) <= 0.2);

  // unit outward normal on the boundary
  CounterRng rng2(43);
  for (int k = 0; k < 50; ++k) {
    VectorXd b = ball.sample_boundary(rng2);
    CHECK(std::abs(ball.grad_ell(b).norm() - 1.0) <= 1e-10);
    CHECK(std::abs(ball.ell(b)) <= 1e-12);
  }
}

TEST_CASE("level function smoothness at the bridge seams") {
  Domain dom = Domain::interval(-1.0, 1.0);
  // finite-difference check of grad and hessian across the seam |u| = w/2
  for (double x : {-0.74, -0.5, -0.26, 0.0, 0.26, 0.5, 0.74, 0.9}) {
    VectorXd v = vec1(x);
    const double h = 1e-6;
    const double fd_grad = (dom.ell(vec1(x + h)) - dom.ell(vec1(x - h))) / (2.0 * h);
    CHECK(dom.grad_ell(v)[0] == doctest::Approx(fd_grad).epsilon(1e-6));
    const double fd_hess =
        (dom.ell(vec1(x + h)) - 2.0 * dom.ell(v) + dom.ell(vec1(x - h))) / (h * h);
    CHECK(dom.hess_ell(v)(0, 0) == doctest::Approx(fd_hess).epsilon(1e-3));
  }
  CHECK(std::abs(dom.grad_ell(vec1(1.0))[0] - 1.0) <= 1e-12);
  CHECK(std::abs(dom.grad_ell(vec1(-1.0))[0] + 1.0) <= 1e-12);
  CHECK(dom.ell(vec1(0.0)) < 0.0);
  CHECK(dom.ell(vec1(1.3)) > 0.0);
}
