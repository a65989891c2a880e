#include "reflekt/assumptions.hpp"

#include <cmath>
#include <sstream>

#include "reflekt/rng.hpp"

namespace reflekt {

namespace {

std::string point_str(double t, const VectorXd& x, const VectorXd& y) {
  std::ostringstream os;
  os << "t=" << t << " x=" << x.transpose() << " y=" << y.transpose();
  return os.str();
}

}  // namespace

AssumptionReport validate_assumptions(const Problem& problem, int n_samples, std::uint64_t seed) {
  const CoefficientSet& c = problem.coeffs;
  const Domain& dom = problem.domain;
  const int d = c.state_dim;
  const int m = c.value_dim;
  CounterRng rng(CounterRng::derive_key(seed, "assume", 0));

  AssumptionReport report;
  AssumptionCheck lip{"b_sigma_lipschitz", -1.0, ""};
  AssumptionCheck mono_f{"f_monotone", -1.0, ""};
  AssumptionCheck growth_f{"f_growth", -1.0, ""};
  AssumptionCheck mono_g{"g_monotone", -1.0, ""};
  AssumptionCheck growth_g{"g_growth", -1.0, ""};
  AssumptionCheck lip_g{"g_lipschitz_txy", -1.0, ""};
  AssumptionCheck bound_phi{"phi_h_bounded", -1.0, ""};
  AssumptionCheck bound_psi{"psi_h_bounded", -1.0, ""};
  AssumptionCheck unit_grad{"unit_gradient_on_boundary", -1.0, ""};

  VectorXd b1(d), b2(d), f1(m), f2(m), g1(m), g2(m), h_val(m);
  MatrixXd s1(d, d), s2(d, d);

  for (int k = 0; k < n_samples; ++k) {
    const double t = rng.uniform(0.0, problem.T);
    const double t2 = rng.uniform(0.0, problem.T);
    const VectorXd x = dom.sample_closure(rng);
    const VectorXd x2 = dom.sample_closure(rng);
    const VectorXd xb = dom.sample_boundary(rng);
    const VectorXd xb2 = dom.sample_boundary(rng);
    VectorXd y(m), y2(m);
    for (int i = 0; i < m; ++i) {
      y[i] = 2.5 * rng.normal();
      y2[i] = 2.5 * rng.normal();
    }

    // Lipschitz modulus of b and sigma in the state
    c.drift(t, x, b1);
    c.drift(t, x2, b2);
    c.diffusion(t, x, s1);
    c.diffusion(t, x2, s2);
    const double dxn = (x - x2).norm();
    if (dxn > 1e-12) {
      const double v = (b1 - b2).norm() + (s1 - s2).norm() - c.constants.lip * dxn;
      if (v > lip.worst) {
        lip.worst = v;
        lip.witness = point_str(t, x, y);
      }
    }

    // monotonicity and growth of f
    c.driver(t, x, y, f1);
    c.driver(t, x, y2, f2);
    const double dyn2 = (y - y2).squaredNorm();
    double v = (y - y2).dot(f1 - f2) - c.constants.beta * dyn2;
    if (v > mono_f.worst) {
      mono_f.worst = v;
      mono_f.witness = point_str(t, x, y);
    }
    v = f1.norm() - c.constants.gamma * (1.0 + y.norm());
    if (v > growth_f.worst) {
      growth_f.worst = v;
      growth_f.witness = point_str(t, x, y);
    }

    // monotonicity, growth and full Lipschitz bound of g on the boundary
    c.boundary_driver(t, xb, y, g1);
    c.boundary_driver(t, xb, y2, g2);
    v = (y - y2).dot(g1 - g2) - c.constants.beta * dyn2;
    if (v > mono_g.worst) {
      mono_g.worst = v;
      mono_g.witness = point_str(t, xb, y);
    }
    v = g1.norm() - c.constants.gamma * (1.0 + y.norm());
    if (v > growth_g.worst) {
      growth_g.worst = v;
      growth_g.witness = point_str(t, xb, y);
    }
    c.boundary_driver(t2, xb2, y2, g2);
    v = (g1 - g2).norm() -
        c.constants.beta *
            (std::abs(t - t2) + (xb - xb2).norm() + (y - y2).norm());
    if (v > lip_g.worst) {
      lip_g.worst = v;
      lip_g.witness = point_str(t, xb, y);
    }

    // |phi(h)| on the closure, |psi(h)| on the boundary
    c.terminal(x, h_val);
    double phi_h = convex::evaluate(problem.phi, h_val);
    v = (convex::is_finite_value(phi_h) ? std::abs(phi_h) : convex::kPlusInfinity) -
        c.constants.bound;
    if (v > bound_phi.worst) {
      bound_phi.worst = v;
      bound_phi.witness = point_str(t, x, h_val);
    }
    c.terminal(xb, h_val);
    double psi_h = convex::evaluate(problem.psi, h_val);
    v = (convex::is_finite_value(psi_h) ? std::abs(psi_h) : convex::kPlusInfinity) -
        c.constants.bound;
    if (v > bound_psi.worst) {
      bound_psi.worst = v;
      bound_psi.witness = point_str(t, xb, h_val);
    }

    // |grad ell| = 1 on the boundary
    v = std::abs(dom.grad_ell(xb).norm() - 1.0) - 1e-10;
    if (v > unit_grad.worst) {
      unit_grad.worst = v;
      unit_grad.witness = point_str(t, xb, y);
    }
  }

  report.checks = {lip, mono_f, growth_f, mono_g, growth_g, lip_g, bound_phi, bound_psi,
                   unit_grad};

  // the three compatibility conditions across an epsilon ladder
  const std::vector<double> eps_list{1e-3, 1e-2, 1e-1, 1.0};
  convex::CompatibilityReport compat = convex::check_compatibility(
      problem.phi, problem.psi, c, dom, eps_list, n_samples, seed, problem.T);
  report.checks.push_back({"compat_gradient_angle", compat.worst_gradient_angle, ""});
  report.checks.push_back({"compat_boundary_driver", compat.worst_boundary_driver, ""});
  report.checks.push_back({"compat_interior_driver", compat.worst_interior_driver, ""});
  return report;
}

}  // namespace reflekt
