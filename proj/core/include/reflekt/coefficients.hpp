#pragma once

#include <Eigen/Core>

#include <functional>

namespace reflekt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Constants entering the standing assumptions: beta bounds the monotonicity
/// of f and g in y and the Lipschitz modulus of g in (t, x, y); gamma bounds
/// the growth of f and g; lip is the Lipschitz constant of b and sigma in x;
/// bound dominates |phi(h(x))| and |psi(h(x))|.
struct AssumptionConstants {
  double beta = 0.0;
  double gamma = 0.0;
  double lip = 0.0;
  double bound = 1.0;
};

/// The problem data (b, sigma, f, g, h). Callables write into a caller-owned
/// output to keep the simulation inner loops allocation-free.
struct CoefficientSet {
  int state_dim = 1;  // d
  int value_dim = 1;  // m

  std::function<void(double t, const VectorXd& x, VectorXd& out)> drift;
  std::function<void(double t, const VectorXd& x, MatrixXd& out)> diffusion;
  std::function<void(double t, const VectorXd& x, const VectorXd& y, VectorXd& out)> driver;
  std::function<void(double t, const VectorXd& x, const VectorXd& y, VectorXd& out)>
      boundary_driver;
  std::function<void(const VectorXd& x, VectorXd& out)> terminal;

  AssumptionConstants constants;

  VectorXd drift_at(double t, const VectorXd& x) const {
    VectorXd out(state_dim);
    drift(t, x, out);
    return out;
  }
  MatrixXd diffusion_at(double t, const VectorXd& x) const {
    MatrixXd out(state_dim, state_dim);
    diffusion(t, x, out);
    return out;
  }
  VectorXd driver_at(double t, const VectorXd& x, const VectorXd& y) const {
    VectorXd out(value_dim);
    driver(t, x, y, out);
    return out;
  }
  VectorXd boundary_driver_at(double t, const VectorXd& x, const VectorXd& y) const {
    VectorXd out(value_dim);
    boundary_driver(t, x, y, out);
    return out;
  }
  VectorXd terminal_at(const VectorXd& x) const {
    VectorXd out(value_dim);
    terminal(x, out);
    return out;
  }
};

}  // namespace reflekt
