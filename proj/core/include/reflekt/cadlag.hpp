#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace reflekt::cadlag {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Interp {
  step,    // right-continuous piecewise constant
  linear,  // continuous piecewise linear
};

/// A cadlag path on a finite grid of [0, T]. Values between grid times come
/// from the chosen interpolation; with step interpolation the path jumps at
/// interior grid times and the left limit at a grid time is the previous
/// cell's value. By convention the left limit at 0 is the value at 0.
class CadlagPath {
 public:
  /// rows of `values` correspond to grid times; times must be strictly
  /// increasing and start at 0.
  CadlagPath(std::vector<double> times, MatrixXd values, Interp interp);

  /// Convenience for scalar paths.
  static CadlagPath scalar(std::vector<double> times, std::vector<double> values,
                           Interp interp);
  /// The path t -> t on [0, T] (two-point linear grid).
  static CadlagPath identity(double T);

  int dim() const { return static_cast<int>(values_.cols()); }
  double horizon() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const MatrixXd& grid_values() const { return values_; }
  Interp interp() const { return interp_; }

  VectorXd value(double t) const;
  VectorXd left_limit(double t) const;
  VectorXd jump(double t) const;  // value(t) - left_limit(t)

  double sup_norm() const;

 private:
  int cell_index(double t) const;  // largest i with times[i] <= t
  std::vector<double> times_;
  MatrixXd values_;
  Interp interp_;
};

/// A cadlag path of finite total variation, with the induced Stieltjes
/// measure cached: atoms at interior grid times for step interpolation,
/// a constant density per cell for linear interpolation.
class BVPath {
 public:
  explicit BVPath(CadlagPath path);

  const CadlagPath& path() const { return path_; }
  double total_variation() const { return tv_total_; }
  /// Variation accumulated on [0, t].
  double variation_to(double t) const;
  /// Measure of (s, t], i.e. k(t) - k(s).
  VectorXd measure(double s, double t) const;

 private:
  CadlagPath path_;
  std::vector<double> cell_norm_;  // |increment| per cell
  std::vector<double> cum_var_;    // variation up to each grid time
  double tv_total_ = 0.0;
};

class Partition {
 public:
  /// Sorted points of [0, T]; must contain 0 and T.
  explicit Partition(std::vector<double> points);
  static Partition uniform(double T, int cells);
  static Partition dyadic(double T, int depth);

  const std::vector<double>& points() const { return points_; }
  double mesh() const;

 private:
  std::vector<double> points_;
};

/// V_pi(k) = sum over partition cells of |k(t_{i+1}) - k(t_i)|.
double total_variation(const BVPath& k, const Partition& pi);

/// V over nested dyadic partitions of depth 1..depth; nondecreasing, converges
/// to the total variation of the representation.
std::vector<double> refinement_sequence(const BVPath& k, int depth);

/// int_(s,t] <x_{r-}, dk_r>; atoms of dk weighted by the left limit of x.
double stieltjes_left(const CadlagPath& x, const BVPath& k, double s, double t);

/// int_(s,t] <x_r, dk_r>; atoms of dk weighted by the value of x.
double stieltjes_right(const CadlagPath& x, const BVPath& k, double s, double t);

/// Componentwise integral of a (possibly vector) path against a scalar
/// nondecreasing integrator, right-evaluated.
VectorXd stieltjes_right_components(const CadlagPath& x, const BVPath& k, double s, double t);

/// [x, k]_t = sum_{0 <= s <= t} <Delta x_s, Delta k_s>.
double jump_covariation(const CadlagPath& x, const BVPath& k, double t);

/// | int <l, dk> + int <k_-, dl> + [k, l]_t - (<l_t,k_t> - <l_0,k_0> + [l,k]_t) |
double ibp_residual(const BVPath& l, const BVPath& k, double t);

/// | int x^n dk^n - int x dk | per n, right-evaluated on (s, t].
std::vector<double> helly_bray_gap(const std::vector<CadlagPath>& x_seq,
                                   const std::vector<BVPath>& k_seq, const CadlagPath& x,
                                   const BVPath& k, double s, double t);

/// Sampled scalar processes on a shared grid; row j = path j.
struct PathEnsemble {
  std::vector<double> times;
  MatrixXd values;  // n_paths x n_times
  int n_paths() const { return static_cast<int>(values.rows()); }
};

struct Regressor {
  enum class Kind { bucket, polynomial };
  Kind kind = Kind::bucket;
  int bins = 32;    // equal-mass bins on the conditioning statistic
  int degree = 2;   // polynomial regression degree
};

/// Estimate of sum_i E| E[ L_{t_{i+1}} - L_{t_i} | state_{t_i} ] | on the given
/// partition; the conditional expectation is fitted by the regressor on the
/// conditioning state (a Markov surrogate for the filtration). The returned
/// value is a lower bound of the partition supremum.
double conditional_variation(const PathEnsemble& ensemble, const PathEnsemble& state,
                             const Partition& pi, const Regressor& regressor);

struct TightnessRow {
  double cv = 0.0;
  double esup = 0.0;
  double total = 0.0;
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  double max_total = 0.0;
  double min_total = 0.0;
};

/// Per-member conditional variation + expected running sup; boundedness of the
/// totals across members is the tightness criterion checked by harnesses.
/// When `states` is empty each ensemble conditions on its own paths.
TightnessReport s_tightness_diagnostic(const std::vector<PathEnsemble>& ensembles,
                                       const Partition& pi, const Regressor& regressor = {},
                                       const std::vector<PathEnsemble>& states = {});

}  // namespace reflekt::cadlag
