#include <doctest.h>

#include <cmath>

#include "reflekt/convex.hpp"
#include "reflekt/presets.hpp"
#include "reflekt/rng.hpp"
#include "testutil.hpp"

using namespace reflekt;
using namespace reflekt::convex;
using Eigen::VectorXd;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x[0] = v;
  return x;
}

VectorXd vec2(double a, double b) {
  VectorXd x(2);
  x << a, b;
  return x;
}

std::vector<ConvexSpec> builtin_family() {
  VectorXd lo = vec2(-1.0, -0.5), hi = vec2(1.0, 2.0);
  return {
      ConvexSpec::zero(2),
      ConvexSpec::quadratic(2, 1.3),
      ConvexSpec::abs_norm(2, 0.7),
      ConvexSpec::indicator_box(lo, hi),
      ConvexSpec::sum({ConvexSpec::quadratic(2, 0.8), ConvexSpec::abs_norm(2, 0.4)}),
  };
}

}  // namespace

TEST_CASE("evaluate on the built-in kinds") {
  CHECK(evaluate(ConvexSpec::zero(2), vec2(3.0, -1.0)) == 0.0);

  ConvexSpec box = ConvexSpec::indicator_box(vec1(-1.0), vec1(1.0));
  CHECK(evaluate(box, vec1(0.5)) == 0.0);
  CHECK(!is_finite_value(evaluate(box, vec1(2.0))));
  CHECK(evaluate(box, vec1(1.0 + 1e-13)) == 0.0);  // face tolerance

  ConvexSpec quad = ConvexSpec::quadratic(1, 1.0);
  CHECK(evaluate(quad, vec1(2.0)) == doctest::Approx(2.0));

  CHECK_THROWS_AS(evaluate(quad, vec2(1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("constructor invariants") {
  CHECK_THROWS_AS(ConvexSpec::indicator_box(vec1(0.5), vec1(1.0)), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSpec::quadratic(1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSpec::sum({}), std::invalid_argument);
  CHECK_THROWS_AS(
      ConvexSpec::sum({ConvexSpec::zero(1), ConvexSpec::zero(2)}), std::invalid_argument);
  // custom_1d: needs the origin, zero value there, convex values
  CHECK_THROWS_AS(ConvexSpec::custom_1d({-1.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ConvexSpec::custom_1d({-1.0, 0.0, 1.0}, {1.0, 0.5, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConvexSpec::custom_1d({-1.0, 0.0, 1.0}, {2.0, 0.0, -1.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(ConvexSpec::custom_1d({-1.0, 0.0, 2.0}, {3.0, 0.0, 1.0}));
}

TEST_CASE("resolvent closed forms") {
  MoreauParams eps1(1.0);
  CHECK(resolvent(ConvexSpec::zero(1), MoreauParams(0.3), vec1(7.0))[0] == 7.0);

  ConvexSpec box = ConvexSpec::indicator_box(vec1(-1.0), vec1(1.0));
  CHECK(resolvent(box, MoreauParams(0.5), vec1(2.0))[0] == doctest::Approx(1.0));

  ConvexSpec quad = ConvexSpec::quadratic(1, 1.0);
  CHECK(resolvent(quad, eps1, vec1(2.0))[0] == doctest::Approx(1.0));

  // soft threshold
  ConvexSpec abs1 = ConvexSpec::abs_norm(1, 1.0);
  CHECK(resolvent(abs1, eps1, vec1(0.5))[0] == doctest::Approx(0.0));
  CHECK(resolvent(abs1, eps1, vec1(2.5))[0] == doctest::Approx(1.5));
  CHECK(resolvent(abs1, eps1, vec1(-2.5))[0] == doctest::Approx(-1.5));
}

TEST_CASE("composite resolvent agrees with closed forms") {
  // sum of quadratics is a quadratic
  ConvexSpec s = ConvexSpec::sum({ConvexSpec::quadratic(1, 1.0), ConvexSpec::quadratic(1, 2.0)});
  const double y = 1.7, eps = 0.4;
  CHECK(resolvent(s, MoreauParams(eps), vec1(y))[0] ==
        doctest::Approx(y / (1.0 + eps * 3.0)).epsilon(1e-8));

  // sum of two box indicators projects onto the intersection
  ConvexSpec boxes = ConvexSpec::sum({ConvexSpec::indicator_box(vec1(-1.0), vec1(1.0)),
                                      ConvexSpec::indicator_box(vec1(-0.25), vec1(2.0))});
  CHECK(resolvent(boxes, MoreauParams(0.7), vec1(-3.0))[0] == doctest::Approx(-0.25).epsilon(1e-8));
  CHECK(resolvent(boxes, MoreauParams(0.7), vec1(3.0))[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("custom_1d matches the matching abs_norm inside its range") {
  ConvexSpec pw = ConvexSpec::custom_1d({-10.0, 0.0, 10.0}, {10.0, 0.0, 10.0});
  ConvexSpec abs1 = ConvexSpec::abs_norm(1, 1.0);
  CounterRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double y = rng.uniform(-5.0, 5.0);
    const double eps = std::exp(rng.uniform(std::log(1e-3), 0.0));
    CHECK(resolvent(pw, MoreauParams(eps), vec1(y))[0] ==
          doctest::Approx(resolvent(abs1, MoreauParams(eps), vec1(y))[0]).epsilon(1e-12));
  }
  // outside the breakpoint range the function is +inf and the resolvent clamps
  CHECK(!is_finite_value(evaluate(pw, vec1(11.0))));
  CHECK(resolvent(pw, MoreauParams(1e-6), vec1(40.0))[0] == doctest::Approx(10.0));
}

TEST_CASE("moreau gradient examples") {
  ConvexSpec box = ConvexSpec::indicator_box(vec1(-1.0), vec1(1.0));
  CHECK(moreau_gradient(box, MoreauParams(0.5), vec1(3.0))[0] == doctest::Approx(4.0));

  for (const auto& spec : builtin_family()) {
    CHECK(moreau_gradient(spec, MoreauParams(0.2), VectorXd::Zero(2)).norm() ==
          doctest::Approx(0.0));
  }

  // dense-grid oracle: J_1(0.5) = 0 for phi = |.|, so the gradient is 0.5
  auto [env, argmin] =
      testutil::prox_grid_oracle([](double z) { return std::abs(z); }, 1.0, 0.5, -3.0, 3.0);
  CHECK(argmin == doctest::Approx(0.0).epsilon(1e-5));
  ConvexSpec abs1 = ConvexSpec::abs_norm(1, 1.0);
  CHECK(moreau_gradient(abs1, MoreauParams(1.0), vec1(0.5))[0] == doctest::Approx(0.5));
  CHECK(moreau_envelope(abs1, MoreauParams(1.0), vec1(0.5)) ==
        doctest::Approx(env).epsilon(1e-9));
  CHECK(moreau_envelope(abs1, MoreauParams(1.0), vec1(0.5)) == doctest::Approx(0.125));
}

TEST_CASE("moreau envelope examples") {
  CHECK(moreau_envelope(ConvexSpec::zero(1), MoreauParams(2.0), vec1(5.0)) == 0.0);

  // quadratic closed form: envelope = |y|^2 / (2 (1 + eps))
  ConvexSpec quad = ConvexSpec::quadratic(1, 1.0);
  CHECK(moreau_envelope(quad, MoreauParams(1.0), vec1(2.0)) == doctest::Approx(1.0));
  auto [env, argmin] = testutil::prox_grid_oracle(
      [](double z) { return 0.5 * z * z; }, 1.0, 2.0, -4.0, 4.0);
  CHECK(env == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(argmin == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("subgradient inequality residual") {
  CHECK(subgradient_inequality_residual(ConvexSpec::zero(1), vec1(0.3), vec1(0.0),
                                        {vec1(-5.0), vec1(5.0)}) == 0.0);

  // outward normal cone at the right face of the box contains u = 5
  ConvexSpec box = ConvexSpec::indicator_box(vec1(-1.0), vec1(1.0));
  CHECK(subgradient_inequality_residual(box, vec1(1.0), vec1(5.0),
                                        {vec1(-1.0), vec1(0.0), vec1(1.0)}) == 0.0);

  ConvexSpec quad = ConvexSpec::quadratic(1, 1.0);
  CHECK(subgradient_inequality_residual(quad, vec1(1.0), vec1(2.0), {vec1(0.0)}) == 0.0);
  CHECK(subgradient_inequality_residual(quad, vec1(1.0), vec1(0.1), {vec1(0.0)}) ==
        doctest::Approx(0.4));

  CHECK_THROWS_AS(
      subgradient_inequality_residual(box, vec1(2.0), vec1(0.0), {vec1(0.0)}),
      std::invalid_argument);
}

TEST_CASE("moreau identity, nonexpansiveness, gradient selection (randomized)") {
  CounterRng rng(42);
  const std::vector<double> eps_list{1e-3, 1e-1, 1.0};
  for (const auto& spec : builtin_family()) {
    for (int trial = 0; trial < 400; ++trial) {
      const VectorXd y = vec2(3.0 * rng.normal(), 3.0 * rng.normal());
      const VectorXd y2 = vec2(3.0 * rng.normal(), 3.0 * rng.normal());
      for (double e : eps_list) {
        MoreauParams eps(e);
        const VectorXd j = resolvent(spec, eps, y);
        const VectorXd j2 = resolvent(spec, eps, y2);
        const VectorXd g = moreau_gradient(spec, eps, y);
        const VectorXd g2 = moreau_gradient(spec, eps, y2);

        // phi_eps = (eps/2)|grad|^2 + phi(J)
        const double lhs = moreau_envelope(spec, eps, y);
        const double rhs = 0.5 * e * g.squaredNorm() + evaluate(spec, j);
        CHECK(std::abs(lhs - rhs) <= 1e-8);

        // 0 <= phi_eps <= phi
        CHECK(lhs >= 0.0);
        const double phi_y = evaluate(spec, y);
        if (is_finite_value(phi_y)) CHECK(lhs <= phi_y + 1e-10);

        // firm nonexpansiveness and the gradient Lipschitz bound
        CHECK((j - j2).norm() <= (y - y2).norm() + 1e-10);
        CHECK((g - g2).norm() <= (y - y2).norm() / e + 1e-8);

        // grad phi_eps(y) supports phi at J_eps(y)
        CHECK(subgradient_inequality_residual(spec, j, g, {y, y2, j2, 0.5 * (j + j2)}) <=
              1e-8);
      }
    }
  }
}

TEST_CASE("monotone convergence of the envelope as eps decreases") {
  CounterRng rng(11);
  for (const auto& spec : builtin_family()) {
    for (int trial = 0; trial < 100; ++trial) {
      // start from a domain point so the limit is finite
      VectorXd y = resolvent(spec, MoreauParams(1e-3), vec2(2.0 * rng.normal(),
                                                            2.0 * rng.normal()));
      double prev = -1.0;
      for (double e : {1.0, 0.5, 0.1, 1e-2, 1e-3, 1e-6}) {
        const double env = moreau_envelope(spec, MoreauParams(e), y);
        CHECK(env >= prev - 1e-10);  // nondecreasing as eps shrinks
        prev = env;
      }
      const double phi_y = evaluate(spec, y);
      CHECK(std::abs(moreau_envelope(spec, MoreauParams(1e-6), y) - phi_y) <= 1e-3);
    }
  }
}

TEST_CASE("jensen inequality on random convex combinations") {
  CounterRng rng(99);
  for (const auto& spec : builtin_family()) {
    for (int trial = 0; trial < 200; ++trial) {
      const int k = 2 + static_cast<int>(rng.below(6));
      std::vector<VectorXd> ys;
      std::vector<double> w(k);
      double wsum = 0.0;
      for (int i = 0; i < k; ++i) {
        // domain points so every phi value is finite
        ys.push_back(resolvent(spec, MoreauParams(0.5),
                               vec2(2.0 * rng.normal(), 2.0 * rng.normal())));
        w[i] = rng.uniform01();
        wsum += w[i];
      }
      VectorXd mix = VectorXd::Zero(2);
      double rhs = 0.0;
      for (int i = 0; i < k; ++i) {
        w[i] /= wsum;
        mix += w[i] * ys[i];
        rhs += w[i] * evaluate(spec, ys[i]);
      }
      CHECK(evaluate(spec, mix) <= rhs + 1e-12);
    }
  }
}

TEST_CASE("compatibility checker") {
  Problem heat = make_preset("heat");

  SUBCASE("identical nontrivial pair satisfies the angle condition") {
    ConvexSpec q = ConvexSpec::quadratic(1, 1.0);
    auto report = check_compatibility(q, q, heat.coeffs, heat.domain, {1e-2, 1e-1}, 200, 3);
    CHECK(report.worst_gradient_angle <= 1e-12);
  }

  SUBCASE("zero pair satisfies everything exactly") {
    auto report = check_compatibility(ConvexSpec::zero(1), ConvexSpec::zero(1), heat.coeffs,
                                      heat.domain, {1e-2, 1.0}, 200, 3);
    CHECK(report.worst_gradient_angle <= 1e-12);
    CHECK(report.worst_boundary_driver <= 1e-12);
    CHECK(report.worst_interior_driver <= 1e-12);
  }

  SUBCASE("half-line obstacle with compatible boundary driver") {
    // phi = indicator of (-inf, 0]: its Yosida gradient is nonnegative, so a
    // negative constant boundary driver satisfies the sign condition
    VectorXd lo(1), hi(1);
    lo[0] = -convex::kPlusInfinity;
    hi[0] = 0.0;
    ConvexSpec half = ConvexSpec::indicator_box(lo, hi);
    CoefficientSet c = heat.coeffs;
    c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
      out[0] = -1.0;
    };
    auto report = check_compatibility(half, ConvexSpec::zero(1), c, heat.domain,
                                      {1e-3, 1e-1, 1.0}, 400, 5);
    CHECK(report.worst_boundary_driver <= 1e-12);
  }

  SUBCASE("error paths") {
    CHECK_THROWS_AS(check_compatibility(ConvexSpec::zero(1), ConvexSpec::zero(1), heat.coeffs,
                                        heat.domain, {}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_compatibility(ConvexSpec::zero(2), ConvexSpec::zero(1), heat.coeffs,
                                        heat.domain, {1.0}, 10, 1),
                    std::invalid_argument);
  }
}
