#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "reflekt/cadlag.hpp"
#include "reflekt/coefficients.hpp"
#include "reflekt/convex.hpp"
#include "reflekt/domain.hpp"
#include "reflekt/forward.hpp"

namespace reflekt::backward {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SolverParams {
  enum class ProxMode { exact_resolvent, moreau_penalized };
  ProxMode prox_mode = ProxMode::exact_resolvent;
  double penal_epsilon = 1e-2;  // Yosida parameter in penalized mode
  int basis_degree = 3;         // regression engine basis
  int n_inner = 200;            // fixed-point cap for one implicit step
  double tol = 1e-12;           // inner tolerance
  bool phi_first = true;        // resolvent order: psi o phi when true
  bool estimate_z = false;      // fill the optional martingale integrand
};

struct StepResult {
  VectorXd y;
  VectorXd u;  // selection with u in dphi, weighted by dr
  VectorXd v;  // selection with v in dpsi, weighted by dA
  bool contraction_warning = false;  // (beta + gamma)(dt + dA) >= 1
};

/// One implicit step of the backward recursion: solves
///   Y + dt dphi(Y) + dA dpsi(Y) ":" E_next + dt f(t,x,Y) + dA g(t,x,Y)
/// by the fixed-point loop Y <- J^psi_dA(J^phi_dt(R(Y))) with f, g lagged.
/// In penalized mode the subdifferentials are replaced by the Yosida
/// approximations and the resulting equation is solved to the same tolerance.
/// Throws convex::SolverError when the loop fails to contract.
StepResult backward_step(const VectorXd& e_next, double t_i, const VectorXd& x_i, double dt,
                         double dA, const CoefficientSet& coeffs, const convex::ConvexSpec& phi,
                         const convex::ConvexSpec& psi, const SolverParams& params);

/// Dynamic-programming solution on a 1-D space grid: value u(t_i, x_j) plus
/// the selections and the per-node expected local-time weights.
struct GridSolution {
  std::vector<double> t_grid;
  std::vector<double> x_grid;
  // slices[i] is an n_x x m matrix of values at time t_i
  std::vector<MatrixXd> y;
  std::vector<MatrixXd> u_sel;
  std::vector<MatrixXd> v_sel;
  VectorXd dA_node;  // expected one-step local-time increment per node
  int m = 1;
  bool contraction_warning = false;
};

struct TransitionSpec {
  enum class Kind { exact_gaussian_projected, mc };
  Kind kind = Kind::exact_gaussian_projected;
  int mc_paths = 4096;       // per node, mc kind
  std::uint64_t seed = 1234; // stream for the mc transitions
};

GridSolution solve_grid(const Domain& domain_1d, const CoefficientSet& coeffs,
                        const convex::ConvexSpec& phi, const convex::ConvexSpec& psi,
                        const std::vector<double>& t_grid, const std::vector<double>& x_grid,
                        const TransitionSpec& transition, const SolverParams& params);

/// Pathwise solution along a stored forward ensemble (least-squares Monte
/// Carlo): conditional expectations are polynomial regressions on the state.
struct RegressionSolution {
  std::vector<double> times;
  int start_index = 0;
  int m = 1;
  // per component c: n_paths x (n_steps+1) value matrices
  std::vector<MatrixXd> Y;
  std::vector<MatrixXd> U;
  std::vector<MatrixXd> V;
  std::vector<MatrixXd> K1;
  std::vector<MatrixXd> K2;
  std::vector<MatrixXd> M_inc;  // n_paths x n_steps martingale increments
  std::optional<std::vector<MatrixXd>> Z_est;
  VectorXd y0;                  // deterministic value at the start
  double max_condition = 0.0;   // worst conditioning across time slices
  bool contraction_warning = false;
};

RegressionSolution solve_regression(const forward::ForwardEnsemble& ensemble,
                                    const CoefficientSet& coeffs, const convex::ConvexSpec& phi,
                                    const convex::ConvexSpec& psi, const SolverParams& params);

/// Discrete residuals of the two variational inequalities along one path,
/// evaluated with Stieltjes integrals on [s1, s2]: positive parts of
///   int <v - Y, U> dr + int phi(Y) dr - int phi(v) dr      (first)
///   int <v - Y, V> dA + int psi(Y) dA - int psi(v) dA      (second)
/// maximized over the probe set.
std::pair<double, double> variational_residual(
    const std::vector<double>& times, const MatrixXd& y_path, const MatrixXd& u_path,
    const MatrixXd& v_path, const std::vector<double>& a_path, const convex::ConvexSpec& phi,
    const convex::ConvexSpec& psi, const std::vector<VectorXd>& probes, double s1, double s2);

struct MomentRow {
  double label = 0.0;      // sequence index or parameter
  double estimate = 0.0;   // E sup_s |Y_s|^p
  double ci_lo = 0.0, ci_hi = 0.0;
};

/// Bootstrap estimates of E sup |Y|^p per solution (p in {2, 4}).
std::vector<MomentRow> moment_bound_check(const std::vector<const RegressionSolution*>& solutions,
                                          double p, std::uint64_t seed);

}  // namespace reflekt::backward
