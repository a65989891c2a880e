#pragma once

#include <cstdint>
#include <vector>

#include "reflekt/backward.hpp"
#include "reflekt/presets.hpp"

namespace reflekt::valuefn {

/// Scalar value surface u(t, x) on a rectangular grid with optional standard
/// errors; u(T, .) always equals the terminal map exactly.
struct ValueSurface {
  std::vector<double> t_grid;
  std::vector<double> x_grid;
  MatrixXd u;   // n_t x n_x
  MatrixXd se;  // same shape; zero for deterministic engines

  double at(double t, double x) const;       // bilinear interpolation
  int t_index(double t) const;               // nearest grid index
  int x_index(double x) const;
};

struct GridEngineOptions {
  int n_t = 50;
  int n_x = 50;
  backward::TransitionSpec transition;
  backward::SolverParams params;
};

struct RegressionEngineOptions {
  int n_paths = 8192;
  int n_steps = 256;
  backward::SolverParams params;
  std::uint64_t seed = 1;
  int bootstrap_blocks = 32;
};

/// Whole-surface evaluation through the grid engine (m = 1 problems).
ValueSurface value_surface(const Problem& problem, const GridEngineOptions& opts);

struct PointEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// u(t, x) = Y_t started at (t, x). The grid engine reads the nearest node of
/// a dedicated solve; the regression engine runs an ensemble from (t, x) and
/// reports a block-bootstrap standard error.
PointEstimate evaluate_u(const Problem& problem, const GridEngineOptions& opts, double t,
                         double x);
PointEstimate evaluate_u_regression(const Problem& problem, const RegressionEngineOptions& opts,
                                    double t, double x);

struct ModulusRow {
  int n = 0;
  double dt = 0.0;
  double dx = 0.0;
  double gap = 0.0;
  double se = 0.0;
};

struct ModulusReport {
  std::vector<ModulusRow> rows;
  double fitted_exponent_x = 0.0;   // log-log slope of gap against |dx|
  double fitted_exponent_t = 0.0;   // log-log slope of gap against |dt|^(1/2)
  double limit_value = 0.0;
};

/// Empirical continuity modulus of u along (t + dt0 2^-n, x + dx0 2^-n) for
/// n = 1..levels, evaluated on grid nodes of a single deterministic solve so
/// the gaps are free of interpolation error.
ModulusReport continuity_modulus(const Problem& problem, const GridEngineOptions& opts, double t,
                                 double x, double dt0, double dx0, int levels);

struct MarkovRow {
  double s = 0.0;
  double residual = 0.0;  // E | Y_s - u(s, X_s) |
};

/// Cross-engine consistency of u(s, X_s) = Y_s along regression paths against
/// the grid-engine surface.
std::vector<MarkovRow> markov_consistency(const Problem& problem, const GridEngineOptions& grid,
                                          const RegressionEngineOptions& reg, double t, double x,
                                          const std::vector<double>& s_checkpoints);

struct TightnessSequenceRow {
  int n = 0;
  double t_n = 0.0, x_n = 0.0;
  cadlag::TightnessRow y, k1, k2, m;
  double total = 0.0;
};

struct TightnessSequenceReport {
  std::vector<TightnessSequenceRow> rows;
  double max_total = 0.0;
  double min_total = 0.0;
  double ratio() const { return min_total > 0.0 ? max_total / min_total : 0.0; }
};

/// Tightness diagnostics of (Y^n, K1^n, K2^n, M^n) along a sequence of start
/// points; each member conditions on its own forward state.
TightnessSequenceReport tightness_along_sequence(
    const Problem& problem, const RegressionEngineOptions& opts,
    const std::vector<std::pair<double, double>>& sequence, double y_scale_per_member = 1.0);

}  // namespace reflekt::valuefn
