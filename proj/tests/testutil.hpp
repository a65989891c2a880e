#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace testutil {

/// Dense-grid minimization of (1/(2 eps)) (z - y)^2 + phi(z) over [lo, hi];
/// independent oracle for Moreau envelopes and resolvents in one dimension.
inline std::pair<double, double> prox_grid_oracle(const std::function<double(double)>& phi,
                                                  double eps, double y, double lo, double hi,
                                                  int n = 2000001) {
  double best_val = std::numeric_limits<double>::infinity();
  double best_z = y;
  for (int i = 0; i < n; ++i) {
    const double z = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const double p = phi(z);
    if (!(p < std::numeric_limits<double>::infinity())) continue;
    const double v = 0.5 / eps * (z - y) * (z - y) + p;
    if (v < best_val) {
      best_val = v;
      best_z = z;
    }
  }
  return {best_val, best_z};
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace testutil
