#include <doctest.h>

#include <cmath>

#include "reflekt/cadlag.hpp"
#include "reflekt/rng.hpp"
#include "testutil.hpp"

using namespace reflekt;
using namespace reflekt::cadlag;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CadlagPath random_step_path(CounterRng& rng, int cells, double T) {
  std::vector<double> t(cells + 1), v(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    t[i] = T * static_cast<double>(i) / cells;
    v[i] = rng.normal();
  }
  return CadlagPath::scalar(std::move(t), std::move(v), Interp::step);
}

BVPath sine_path(int cells) {
  std::vector<double> t(cells + 1), v(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    t[i] = static_cast<double>(i) / cells;
    v[i] = std::sin(kTwoPi * t[i]);
  }
  return BVPath(CadlagPath::scalar(std::move(t), std::move(v), Interp::linear));
}

}  // namespace

TEST_CASE("path construction and evaluation") {
  CadlagPath p = CadlagPath::scalar({0.0, 0.25, 1.0}, {1.0, 3.0, -1.0}, Interp::step);
  CHECK(p.value(0.1)[0] == 1.0);
  CHECK(p.value(0.25)[0] == 3.0);               // right-continuous
  CHECK(p.left_limit(0.25)[0] == 1.0);
  CHECK(p.left_limit(0.0)[0] == 1.0);           // x_{0-} = x_0
  CHECK(p.jump(0.25)[0] == 2.0);
  CHECK(p.value(1.0)[0] == -1.0);

  CHECK_THROWS_AS(CadlagPath::scalar({0.1, 1.0}, {0.0, 1.0}, Interp::step),
                  std::invalid_argument);
  CHECK_THROWS_AS(CadlagPath::scalar({0.0, 0.0}, {0.0, 1.0}, Interp::step),
                  std::invalid_argument);
}

TEST_CASE("total variation") {
  SUBCASE("monotone path telescopes on every refining partition") {
    BVPath k(CadlagPath::scalar({0.0, 0.2, 0.7, 1.0}, {0.0, 0.5, 0.6, 2.0}, Interp::step));
    for (int depth : {1, 3, 6}) {
      // refine the native grid with dyadic points
      std::vector<double> pts = Partition::dyadic(1.0, depth).points();
      for (double t : k.path().times()) pts.push_back(t);
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      CHECK(total_variation(k, Partition(pts)) == doctest::Approx(2.0));
    }
  }

  SUBCASE("sine path on a dense grid") {
    BVPath k = sine_path(10000);
    // dense-grid oracle: direct sum of absolute increments
    double oracle = 0.0;
    const auto& v = k.path().grid_values();
    for (int i = 0; i + 1 < v.rows(); ++i) oracle += std::abs(v(i + 1, 0) - v(i, 0));
    CHECK(std::abs(oracle - 4.0) < 1e-6);
    CHECK(total_variation(k, Partition(k.path().times())) == doctest::Approx(oracle));
  }

  SUBCASE("single unit jump") {
    BVPath k(CadlagPath::scalar({0.0, 0.3, 1.0}, {0.0, 1.0, 1.0}, Interp::step));
    CHECK(total_variation(k, Partition({0.0, 0.3, 1.0})) == doctest::Approx(1.0));
    CHECK(total_variation(k, Partition({0.0, 0.1, 0.3, 0.9, 1.0})) == doctest::Approx(1.0));
  }
}

TEST_CASE("refinement sequence is monotone and converges") {
  SUBCASE("monotone path gives a constant sequence") {
    BVPath k(CadlagPath::scalar({0.0, 0.5, 1.0}, {0.0, 1.0, 3.0}, Interp::linear));
    for (double v : refinement_sequence(k, 8)) CHECK(v == doctest::Approx(3.0));
  }

  SUBCASE("sine path reaches 4.0 by depth 14") {
    BVPath k = sine_path(10000);
    std::vector<double> seq = refinement_sequence(k, 14);
    for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i] >= seq[i - 1] - 1e-12);
    CHECK(std::abs(seq.back() - 4.0) < 1e-4);
  }

  SUBCASE("jump at a dyadic point is captured exactly at finite depth") {
    BVPath k(CadlagPath::scalar({0.0, 0.25, 1.0}, {0.0, 1.0, 1.0}, Interp::step));
    std::vector<double> seq = refinement_sequence(k, 6);
    CHECK(seq[1] == doctest::Approx(1.0));  // depth 2 contains 0.25
    CHECK(seq.back() == doctest::Approx(1.0));
  }
}

TEST_CASE("stieltjes integrals") {
  SUBCASE("constant integrand") {
    CadlagPath c = CadlagPath::scalar({0.0, 1.0}, {3.0, 3.0}, Interp::step);
    BVPath k(CadlagPath::scalar({0.0, 0.4, 1.0}, {0.0, 2.0, 5.0}, Interp::step));
    CHECK(stieltjes_right(c, k, 0.0, 1.0) == doctest::Approx(15.0));
    CHECK(stieltjes_left(c, k, 0.0, 1.0) == doctest::Approx(15.0));
    CHECK(stieltjes_right(c, k, 0.2, 0.4) == doctest::Approx(6.0));  // atom at 0.4 included
    CHECK(stieltjes_right(c, k, 0.4, 0.41) == doctest::Approx(0.0)); // and excluded from (0.4, .]
  }

  SUBCASE("atom weighting: left limit vs value") {
    // x jumps 2 -> 5 at 0.5; k has a unit jump there
    CadlagPath x = CadlagPath::scalar({0.0, 0.5, 1.0}, {2.0, 5.0, 5.0}, Interp::step);
    BVPath k(CadlagPath::scalar({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0}, Interp::step));
    CHECK(stieltjes_left(x, k, 0.0, 1.0) == doctest::Approx(2.0));
    CHECK(stieltjes_right(x, k, 0.0, 1.0) == doctest::Approx(5.0));
  }

  SUBCASE("linear-linear Riemann case") {
    CadlagPath x = CadlagPath::identity(1.0);
    BVPath k(CadlagPath::identity(1.0));
    CHECK(stieltjes_right(x, k, 0.0, 1.0) == doctest::Approx(0.5));
    CHECK(stieltjes_left(x, k, 0.0, 1.0) == doctest::Approx(0.5));
    CHECK(stieltjes_right(x, k, 0.25, 0.5) == doctest::Approx(0.5 * (0.5 * 0.5 - 0.25 * 0.25)));
  }
}

TEST_CASE("jump covariation") {
  CadlagPath xc = CadlagPath::identity(1.0);
  BVPath k(CadlagPath::scalar({0.0, 0.3, 1.0}, {0.0, 3.0, 3.0}, Interp::step));
  CHECK(jump_covariation(xc, k, 1.0) == 0.0);

  CadlagPath x = CadlagPath::scalar({0.0, 0.3, 1.0}, {0.0, 1.0, 1.0}, Interp::step);
  CHECK(jump_covariation(x, k, 1.0) == doctest::Approx(3.0));
  CHECK(jump_covariation(x, k, 0.2) == 0.0);

  CadlagPath y = CadlagPath::scalar({0.0, 0.6, 1.0}, {0.0, 1.0, 1.0}, Interp::step);
  CHECK(jump_covariation(y, k, 1.0) == 0.0);  // disjoint jump times
}

TEST_CASE("left/right/jump link and integration by parts") {
  CounterRng rng(17);

  SUBCASE("identity paths") {
    BVPath l(CadlagPath::identity(1.0));
    CHECK(ibp_residual(l, l, 1.0) <= 1e-15);
  }

  SUBCASE("constant path") {
    BVPath c(CadlagPath::scalar({0.0, 1.0}, {2.0, 2.0}, Interp::step));
    BVPath k(random_step_path(rng, 50, 1.0));
    CHECK(ibp_residual(c, k, 1.0) <= 1e-12);
  }

  SUBCASE("random step pairs on a shared grid") {
    for (int trial = 0; trial < 50; ++trial) {
      BVPath l(random_step_path(rng, 100, 1.0));
      BVPath k(random_step_path(rng, 100, 1.0));

      // brute-force cell-by-cell oracle for both integrals
      const auto& lv = l.path().grid_values();
      const auto& kv = k.path().grid_values();
      double int_l_dk = 0.0, int_km_dl = 0.0, cov = 0.0;
      for (int i = 1; i <= 100; ++i) {
        int_l_dk += lv(i, 0) * (kv(i, 0) - kv(i - 1, 0));
        int_km_dl += kv(i - 1, 0) * (lv(i, 0) - lv(i - 1, 0));
        cov += (lv(i, 0) - lv(i - 1, 0)) * (kv(i, 0) - kv(i - 1, 0));
      }
      CHECK(std::abs(stieltjes_right(l.path(), k, 0.0, 1.0) - int_l_dk) <= 1e-12);
      CHECK(std::abs(stieltjes_left(k.path(), l, 0.0, 1.0) - int_km_dl) <= 1e-12);
      CHECK(std::abs(jump_covariation(l.path(), k, 1.0) - cov) <= 1e-12);

      // property (c): right = left + [x, k]
      const double link = stieltjes_right(l.path(), k, 0.0, 1.0) -
                          stieltjes_left(l.path(), k, 0.0, 1.0) -
                          jump_covariation(l.path(), k, 1.0);
      CHECK(std::abs(link) <= 1e-12);

      // property (d)
      CHECK(ibp_residual(l, k, 1.0) <= 1e-10);
      CHECK(ibp_residual(l, k, 0.37) <= 1e-10);
    }
  }
}

TEST_CASE("integral bound and running integral regularity") {
  CounterRng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    CadlagPath x = random_step_path(rng, 60, 1.0);
    BVPath k(random_step_path(rng, 40, 1.0));
    const double s = rng.uniform(0.0, 0.5), t = rng.uniform(0.5, 1.0);
    double sup_x = 0.0;
    for (int i = 0; i < x.grid_values().rows(); ++i)
      sup_x = std::max(sup_x, std::abs(x.grid_values()(i, 0)));
    CHECK(std::abs(stieltjes_right(x, k, s, t)) <=
          sup_x * (k.variation_to(t) - k.variation_to(s)) + 1e-12);

    // t -> int_0^t is right-continuous on the grid: approaching from the
    // right inside a cell changes nothing until the next atom
    for (double tau : {0.25, 0.5, 0.77}) {
      const double at = stieltjes_right(x, k, 0.0, tau);
      CHECK(stieltjes_right(x, k, 0.0, tau + 1e-9) == doctest::Approx(at).epsilon(1e-9));
    }
  }
}

TEST_CASE("triangle bound and lower semicontinuity of TV") {
  CounterRng rng(31);
  CadlagPath x = random_step_path(rng, 80, 1.0);
  BVPath bx(x);
  for (double t0 : x.times())
    CHECK(x.sup_norm() <= std::abs(x.value(t0)[0]) + bx.total_variation() + 1e-12);

  // pointwise perturbations with vanishing amplitude cannot drop the TV limit
  const Partition native(x.times());
  const double tv = total_variation(bx, native);
  for (int n = 1; n <= 64; n *= 2) {
    Eigen::MatrixXd vals = x.grid_values();
    for (int i = 0; i < vals.rows(); ++i) vals(i, 0) += ((i % 2) ? 1.0 : -1.0) / n;
    BVPath kn(CadlagPath(x.times(), vals, Interp::step));
    CHECK(tv <= total_variation(kn, native) + 2.0 * vals.rows() / n + 1e-12);
    // and the linear reinterpolation keeps the grid TV
    BVPath lin(CadlagPath(x.times(), x.grid_values(), Interp::linear));
    CHECK(tv <= lin.total_variation() + 1e-12);
  }
}

TEST_CASE("locally Lipschitz composition preserves convergence off jumps") {
  auto f = [](double t, double v) { return std::sin(v) + v * v + t; };
  CadlagPath x = CadlagPath::scalar({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0}, Interp::step);
  for (int n : {10, 100, 1000}) {
    Eigen::MatrixXd vals = x.grid_values();
    for (int i = 0; i < vals.rows(); ++i) vals(i, 0) += 1.0 / n;
    CadlagPath xn(x.times(), vals, Interp::step);
    for (double t : {0.1, 0.4, 0.7, 0.9}) {  // off the jump set {0.5}
      CHECK(std::abs(f(t, xn.value(t)[0]) - f(t, x.value(t)[0])) <= 4.0 / n);
    }
  }
}

TEST_CASE("helly-bray gaps") {
  CounterRng rng(53);
  CadlagPath x = random_step_path(rng, 50, 1.0);
  BVPath k(random_step_path(rng, 50, 1.0));

  SUBCASE("uniform shift of the integrand") {
    std::vector<CadlagPath> xs;
    std::vector<BVPath> ks;
    std::vector<double> ns{10, 100, 1000};
    for (double n : ns) {
      Eigen::MatrixXd vals = x.grid_values().array() + 1.0 / n;
      xs.emplace_back(x.times(), vals, Interp::step);
      ks.push_back(k);
    }
    std::vector<double> gaps = helly_bray_gap(xs, ks, x, k, 0.0, 1.0);
    for (std::size_t i = 0; i < ns.size(); ++i)
      CHECK(gaps[i] <= k.total_variation() / ns[i] + 1e-12);
  }

  SUBCASE("uniformly convergent integrators") {
    std::vector<CadlagPath> xs;
    std::vector<BVPath> ks;
    for (double n : {10.0, 100.0, 1000.0}) {
      Eigen::MatrixXd vals = k.path().grid_values() * (1.0 - 1.0 / n);
      ks.emplace_back(CadlagPath(k.path().times(), vals, Interp::step));
      xs.push_back(x);
    }
    std::vector<double> gaps = helly_bray_gap(xs, ks, x, k, 0.0, 1.0);
    CHECK(gaps[0] > gaps[1]);
    CHECK(gaps[1] > gaps[2]);
    CHECK(gaps[2] <= 1e-2);
  }

  SUBCASE("identical sequences have zero gap") {
    std::vector<double> gaps = helly_bray_gap({x, x}, {k, k}, x, k, 0.0, 1.0);
    CHECK(gaps[0] == 0.0);
    CHECK(gaps[1] == 0.0);
  }
}

namespace {

/// Brute-force conditional variation by fixed-range bins, single streaming
/// pass over a fresh large simulation; independent of the production
/// estimator.
double brute_force_cv_abs_walk(int n_steps, int n_paths, std::uint64_t seed) {
  const int bins = 64;
  const double range_hi = 3.0;
  std::vector<std::vector<double>> bin_sum(n_steps, std::vector<double>(bins, 0.0));
  const double dt = 1.0 / n_steps;
  for (int p = 0; p < n_paths; ++p) {
    CounterRng rng(CounterRng::derive_key(seed, "bfwalk", p));
    double w = 0.0;
    double prev = 0.0;
    for (int i = 0; i < n_steps; ++i) {
      w += std::sqrt(dt) * rng.normal();
      const double cur = std::abs(w);
      const int b = std::min(bins - 1, static_cast<int>(prev / range_hi * bins));
      bin_sum[i][b] += cur - prev;
      prev = cur;
    }
  }
  double total = 0.0;
  for (int i = 0; i < n_steps; ++i) {
    double acc = 0.0;
    for (int b = 0; b < bins; ++b) acc += std::abs(bin_sum[i][b]);
    total += acc / n_paths;
  }
  return total;
}

}  // namespace

TEST_CASE("conditional variation") {
  const int n_steps = 200;
  const int n_paths = 4000;
  const double dt = 1.0 / n_steps;
  std::vector<double> times(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) times[i] = dt * i;

  SUBCASE("martingale increments have vanishing conditional mean") {
    PathEnsemble walk;
    walk.times = times;
    walk.values.resize(n_paths, n_steps + 1);
    double inc_sd = std::sqrt(dt);
    for (int p = 0; p < n_paths; ++p) {
      CounterRng rng(CounterRng::derive_key(1, "walk", p));
      walk.values(p, 0) = 0.0;
      for (int i = 0; i < n_steps; ++i)
        walk.values(p, i + 1) = walk.values(p, i) + inc_sd * rng.normal();
    }
    Regressor reg;  // 32 equal-mass buckets
    const double cv = conditional_variation(walk, walk, Partition(times), reg);
    // noise floor: each bucket mean is ~ N(0, s^2 bins/n), and E|N| = s sqrt(2/pi)
    const double floor =
        n_steps * inc_sd * std::sqrt(2.0 / 3.14159265358979) * std::sqrt(32.0 / n_paths);
    CHECK(cv <= 3.0 * floor);
  }

  SUBCASE("deterministic drift is recovered exactly") {
    PathEnsemble det;
    det.times = times;
    det.values.resize(200, n_steps + 1);
    for (int p = 0; p < 200; ++p)
      for (int i = 0; i <= n_steps; ++i) det.values(p, i) = times[i];
    Regressor reg;
    CHECK(conditional_variation(det, det, Partition(times), reg) == doctest::Approx(1.0));
    Regressor poly{Regressor::Kind::polynomial, 32, 2};
    CHECK(conditional_variation(det, det, Partition(times), poly) == doctest::Approx(1.0));
  }

  SUBCASE("|random walk| against the brute-force bucket oracle") {
    // the estimator and the oracle need comparable per-bucket counts for the
    // noise floors to match; 1e5 paths with 16 equal-mass bins vs the 64-bin
    // streaming oracle at 1e6 samples
    const int est_paths = 100000;
    PathEnsemble aw;
    aw.times = times;
    aw.values.resize(est_paths, n_steps + 1);
    for (int p = 0; p < est_paths; ++p) {
      CounterRng rng(CounterRng::derive_key(9, "absw", p));
      double w = 0.0;
      aw.values(p, 0) = 0.0;
      for (int i = 0; i < n_steps; ++i) {
        w += std::sqrt(dt) * rng.normal();
        aw.values(p, i + 1) = std::abs(w);
      }
    }
    Regressor reg;
    reg.bins = 16;
    const double cv = conditional_variation(aw, aw, Partition(times), reg);
    const double oracle = brute_force_cv_abs_walk(n_steps, 1000000, 4);
    CHECK(std::abs(cv - oracle) <= 0.10 * oracle);
  }

  SUBCASE("errors") {
    PathEnsemble tiny;
    tiny.times = times;
    tiny.values.resize(10, n_steps + 1);
    tiny.values.setZero();
    CHECK_THROWS_AS(conditional_variation(tiny, tiny, Partition(times), Regressor{}),
                    std::invalid_argument);
  }
}

TEST_CASE("s-tightness diagnostic") {
  std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};

  SUBCASE("constant ensembles") {
    std::vector<PathEnsemble> members;
    for (int n = 0; n < 3; ++n) {
      PathEnsemble e;
      e.times = times;
      e.values = Eigen::MatrixXd::Constant(150, 5, 2.0);
      members.push_back(std::move(e));
    }
    auto rep = s_tightness_diagnostic(members, Partition(times));
    for (const auto& row : rep.rows) {
      CHECK(row.cv == doctest::Approx(0.0));
      CHECK(row.esup == doctest::Approx(2.0));
    }
    CHECK(rep.max_total / rep.min_total == doctest::Approx(1.0));
  }

  SUBCASE("linear growth is reported (negative control)") {
    std::vector<PathEnsemble> members;
    for (int n = 1; n <= 4; ++n) {
      PathEnsemble e;
      e.times = times;
      e.values = Eigen::MatrixXd::Constant(150, 5, static_cast<double>(n));
      members.push_back(std::move(e));
    }
    auto rep = s_tightness_diagnostic(members, Partition(times));
    CHECK(rep.max_total / rep.min_total >= 3.9);
  }

  SUBCASE("needs at least two ensembles") {
    PathEnsemble e;
    e.times = times;
    e.values = Eigen::MatrixXd::Zero(150, 5);
    CHECK_THROWS_AS(s_tightness_diagnostic({e}, Partition(times)), std::invalid_argument);
  }
}
