#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "reflekt/cadlag.hpp"
#include "reflekt/coefficients.hpp"
#include "reflekt/domain.hpp"
#include "reflekt/rng.hpp"

namespace reflekt::forward {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One discretized trajectory of the reflected system: state X in the closure,
/// nondecreasing local time A, and the Brownian increments that drove it.
/// The grid is uniform on [0, T]; the start time t is snapped to the grid and
/// the prefix [0, t] is frozen (X = x, A = 0, zero noise increments).
struct ForwardPath {
  std::vector<double> times;  // n_steps + 1 points, 0 .. T
  int start_index = 0;        // grid index of the (snapped) start time
  MatrixXd states;            // (n_steps + 1) x d
  VectorXd local_time;        // n_steps + 1
  MatrixXd noise;             // n_steps x d, rows i: W(t_{i+1}) - W(t_i)

  double dt() const { return times[1] - times[0]; }
  int n_steps() const { return static_cast<int>(times.size()) - 1; }
};

/// Thrown when the one-step boundary projection cannot be solved; the advice
/// is to reduce the step size.
class StepRejection : public std::runtime_error {
 public:
  explicit StepRejection(const std::string& what) : std::runtime_error(what) {}
};

/// Euler-Maruyama with implicit boundary projection: the predictor
/// Xp = X + b dt + sigma dW is kept when ell(Xp) <= 0; otherwise the step
/// solves X' = Xp - delta * grad ell(X') with ell(X') = 0, delta >= 0, and
/// the local time increases by delta.
ForwardPath simulate_forward(const Domain& domain, const CoefficientSet& coeffs, double t,
                             const VectorXd& x, double T, int n_steps, CounterRng& rng);

/// Rebuild A from the pathwise identity
///   A_s = int L ell(X) dr + int <grad ell(X), sigma dW> - [ell(X_s) - ell(x)]
/// with discrete sums and return sup_i |A_i - Ahat_i|. Decays like sqrt(dt).
double local_time_ito_residual(const Domain& domain, const CoefficientSet& coeffs,
                               const ForwardPath& path);

struct EnsembleStats {
  int n_paths = 0;
  bool all_in_closure = true;        // ell(X) <= tol on every path
  bool all_monotone = true;          // A nondecreasing on every path
  bool boundary_support_ok = true;   // dA > 0 only on the boundary
  std::vector<double> terminal_A;    // A_T per path
  std::vector<double> terminal_X0;   // first state coordinate at T per path
  std::vector<double> sup_abs_X;     // sup_s |X_s| per path
};

/// Run n_paths independent trajectories (parallel, deterministic per-sample
/// streams derived from the seed) and collect per-path statistics without
/// storing the paths.
EnsembleStats simulate_forward_stats(const Domain& domain, const CoefficientSet& coeffs,
                                     double t, const VectorXd& x, double T, int n_steps,
                                     int n_paths, std::uint64_t seed);

/// Full in-memory ensemble (d = 1 state stored per column) used by the
/// regression solver and the diagnostics.
struct ForwardEnsemble {
  std::vector<double> times;
  int start_index = 0;
  MatrixXd X;   // n_paths x (n_steps + 1)
  MatrixXd A;   // n_paths x (n_steps + 1)
  MatrixXd dW;  // n_paths x n_steps
  int n_paths() const { return static_cast<int>(X.rows()); }
  int n_steps() const { return static_cast<int>(times.size()) - 1; }
  double dt() const { return times[1] - times[0]; }
};

ForwardEnsemble simulate_forward_ensemble(const Domain& domain, const CoefficientSet& coeffs,
                                          double t, const VectorXd& x, double T, int n_steps,
                                          int n_paths, std::uint64_t seed);

struct ContinuityRow {
  double t0 = 0.0, x0 = 0.0, t1 = 0.0, x1 = 0.0;
  double dx = 0.0, dt_gap = 0.0;
  double est_X = 0.0;   // E sup |X - X'|^p
  double est_A = 0.0;   // E sup |A - A'|^p
  double se_X = 0.0, se_A = 0.0;
  double ratio = 0.0;   // (est_X + est_A) / (|dx|^p + |dt|^{p/2})
};

/// Coupled-path estimates of the forward continuity moduli: both members of a
/// pair ride on the same Brownian stream per sample.
std::vector<ContinuityRow> forward_continuity_experiment(
    const Domain& domain, const CoefficientSet& coeffs,
    const std::vector<std::pair<std::pair<double, VectorXd>, std::pair<double, VectorXd>>>& pairs,
    double p, int n_paths, int n_steps, double T, std::uint64_t seed);

struct ExpMomentReport {
  double estimate = 0.0;       // E[exp(kappa * A_T)]
  double ci_lo = 0.0, ci_hi = 0.0;
  double bootstrap_cv = 0.0;   // sd/mean over bootstrap replicates
};

ExpMomentReport exponential_moment(const Domain& domain, const CoefficientSet& coeffs, double t,
                                   const VectorXd& x, double T, int n_steps, int n_paths,
                                   double kappa, std::uint64_t seed, int n_bootstrap = 200);

/// Scalar component paths of an ensemble as cadlag ensembles (linear interp).
cadlag::PathEnsemble state_ensemble(const ForwardEnsemble& ens);
cadlag::PathEnsemble local_time_ensemble(const ForwardEnsemble& ens);

}  // namespace reflekt::forward
