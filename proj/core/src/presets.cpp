#include "reflekt/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace reflekt {

namespace {

constexpr double kPi = 3.14159265358979323846;

void set_zero_drift(CoefficientSet& c) {
  c.drift = [](double, const VectorXd&, VectorXd& out) { out.setZero(); };
}

void set_constant_drift(CoefficientSet& c, double b) {
  c.drift = [b](double, const VectorXd&, VectorXd& out) { out.setConstant(b); };
}

void set_unit_diffusion(CoefficientSet& c) {
  c.diffusion = [](double, const VectorXd&, MatrixXd& out) { out.setIdentity(); };
}

void set_zero_diffusion(CoefficientSet& c) {
  c.diffusion = [](double, const VectorXd&, MatrixXd& out) { out.setZero(); };
}

void set_zero_driver(CoefficientSet& c) {
  c.driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) { out.setZero(); };
}

void set_zero_boundary_driver(CoefficientSet& c) {
  c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
    out.setZero();
  };
}

}  // namespace

Problem make_preset(const std::string& name) {
  Problem p;
  p.name = name;
  p.domain = Domain::interval(-1.0, 1.0);
  p.T = 1.0;
  p.t0 = 0.25;
  p.x0 = 0.1;

  CoefficientSet& c = p.coeffs;
  c.state_dim = 1;
  c.value_dim = 1;

  if (name == "heat") {
    // pure reflected Brownian motion; cos(pi x) is a Neumann eigenfunction on
    // (-1, 1), so u(t, x) = exp(-pi^2 (T-t)/2) cos(pi x) in closed form
    set_zero_drift(c);
    set_unit_diffusion(c);
    set_zero_driver(c);
    set_zero_boundary_driver(c);
    c.terminal = [](const VectorXd& x, VectorXd& out) { out[0] = std::cos(kPi * x[0]); };
    c.constants = {0.0, 0.0, 0.0, 1.0};
    p.phi = convex::ConvexSpec::zero(1);
    p.psi = convex::ConvexSpec::zero(1);
  } else if (name == "drifted") {
    set_constant_drift(c, 0.3);
    set_unit_diffusion(c);
    c.driver = [](double, const VectorXd& x, const VectorXd& y, VectorXd& out) {
      out[0] = -0.5 * y[0] + 0.25 * (1.0 - x[0] * x[0]);
    };
    c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
      out[0] = 0.1;
    };
    c.terminal = [](const VectorXd& x, VectorXd& out) { out[0] = std::cos(kPi * x[0]); };
    c.constants = {0.1, 0.75, 0.0, 1.0};
    p.phi = convex::ConvexSpec::zero(1);
    p.psi = convex::ConvexSpec::zero(1);
  } else if (name == "obstacle_interior") {
    // constant interior push against a two-sided obstacle on the value
    set_zero_drift(c);
    set_unit_diffusion(c);
    c.driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) { out[0] = 1.0; };
    set_zero_boundary_driver(c);
    c.terminal = [](const VectorXd& x, VectorXd& out) { out[0] = 0.5 * std::cos(kPi * x[0]); };
    c.constants = {0.0, 1.0, 0.0, 1.0};
    VectorXd lo(1), hi(1);
    lo[0] = -0.8;
    hi[0] = 0.8;
    p.phi = convex::ConvexSpec::indicator_box(lo, hi);
    p.psi = convex::ConvexSpec::zero(1);
  } else if (name == "obstacle_boundary") {
    // boundary influx against a two-sided obstacle active on dA
    set_zero_drift(c);
    set_unit_diffusion(c);
    c.driver = [](double, const VectorXd&, const VectorXd& y, VectorXd& out) {
      out[0] = -0.5 * y[0];
    };
    c.boundary_driver = [](double, const VectorXd&, const VectorXd&, VectorXd& out) {
      out[0] = 0.6;
    };
    c.terminal = [](const VectorXd& x, VectorXd& out) { out[0] = 0.5 * std::cos(kPi * x[0]); };
    c.constants = {0.5, 0.6, 0.0, 1.0};
    VectorXd lo(1), hi(1);
    lo[0] = -0.8;
    hi[0] = 0.8;
    p.phi = convex::ConvexSpec::zero(1);
    p.psi = convex::ConvexSpec::indicator_box(lo, hi);
  } else if (name == "linear_ode") {
    // b = sigma = 0: Y_t = h(x) exp(-(T - t)) in closed form
    set_zero_drift(c);
    set_zero_diffusion(c);
    c.driver = [](double, const VectorXd&, const VectorXd& y, VectorXd& out) {
      out[0] = -y[0];
    };
    set_zero_boundary_driver(c);
    c.terminal = [](const VectorXd& x, VectorXd& out) { out[0] = 1.0 + 0.25 * x[0]; };
    c.constants = {0.0, 1.0, 0.0, 1.0};
    p.phi = convex::ConvexSpec::zero(1);
    p.psi = convex::ConvexSpec::zero(1);
    p.x0 = 0.5;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return p;
}

std::vector<std::string> preset_names() {
  return {"heat", "drifted", "obstacle_interior", "obstacle_boundary", "linear_ode"};
}

}  // namespace reflekt
