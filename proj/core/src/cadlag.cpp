#include "reflekt/cadlag.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reflekt::cadlag {

CadlagPath::CadlagPath(std::vector<double> times, MatrixXd values, Interp interp)
    : times_(std::move(times)), values_(std::move(values)), interp_(interp) {
  if (times_.size() < 2) throw std::invalid_argument("CadlagPath: need at least two grid times");
  if (times_.front() != 0.0) throw std::invalid_argument("CadlagPath: grid must start at 0");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("CadlagPath: grid must be strictly increasing");
  if (static_cast<std::size_t>(values_.rows()) != times_.size())
    throw std::invalid_argument("CadlagPath: one value row per grid time required");
  if (values_.cols() < 1) throw std::invalid_argument("CadlagPath: dimension must be positive");
}

CadlagPath CadlagPath::scalar(std::vector<double> times, std::vector<double> values,
                              Interp interp) {
  MatrixXd m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<int>(i), 0) = values[i];
  return CadlagPath(std::move(times), std::move(m), interp);
}

CadlagPath CadlagPath::identity(double T) {
  return scalar({0.0, T}, {0.0, T}, Interp::linear);
}

int CadlagPath::cell_index(double t) const {
  if (t <= times_.front()) return 0;
  if (t >= times_.back()) return static_cast<int>(times_.size()) - 1;
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<int>(it - times_.begin()) - 1;
}

VectorXd CadlagPath::value(double t) const {
  const int i = cell_index(t);
  if (interp_ == Interp::step || i == static_cast<int>(times_.size()) - 1)
    return values_.row(i).transpose();
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return ((1.0 - w) * values_.row(i) + w * values_.row(i + 1)).transpose();
}

VectorXd CadlagPath::left_limit(double t) const {
  if (interp_ == Interp::linear) return value(t);
  if (t <= times_.front()) return values_.row(0).transpose();  // x_{0-} = x_0
  const int i = cell_index(t);
  if (t == times_[i] && i > 0) return values_.row(i - 1).transpose();
  return values_.row(i).transpose();
}

VectorXd CadlagPath::jump(double t) const { return value(t) - left_limit(t); }

double CadlagPath::sup_norm() const {
  double s = 0.0;
  for (int i = 0; i < values_.rows(); ++i) s = std::max(s, values_.row(i).norm());
  return s;
}

BVPath::BVPath(CadlagPath path) : path_(std::move(path)) {
  const auto& times = path_.times();
  const auto& v = path_.grid_values();
  cell_norm_.resize(times.size() - 1);
  cum_var_.resize(times.size());
  cum_var_[0] = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    cell_norm_[i] = (v.row(static_cast<int>(i) + 1) - v.row(static_cast<int>(i))).norm();
    cum_var_[i + 1] = cum_var_[i] + cell_norm_[i];
  }
  tv_total_ = cum_var_.back();
}

double BVPath::variation_to(double t) const {
  const auto& times = path_.times();
  if (t <= times.front()) return 0.0;
  if (t >= times.back()) return tv_total_;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  if (path_.interp() == Interp::step) return cum_var_[i];
  const double w = (t - times[i]) / (times[i + 1] - times[i]);
  return cum_var_[i] + w * cell_norm_[i];
}

VectorXd BVPath::measure(double s, double t) const { return path_.value(t) - path_.value(s); }

Partition::Partition(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("Partition: need at least {0, T}");
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (!(points_[i] > points_[i - 1]))
      throw std::invalid_argument("Partition: points must be strictly increasing");
  if (points_.front() != 0.0) throw std::invalid_argument("Partition: must start at 0");
}

Partition Partition::uniform(double T, int cells) {
  if (cells < 1) throw std::invalid_argument("Partition: need at least one cell");
  std::vector<double> p(cells + 1);
  for (int i = 0; i <= cells; ++i) p[i] = T * static_cast<double>(i) / cells;
  p.back() = T;
  return Partition(std::move(p));
}

Partition Partition::dyadic(double T, int depth) {
  if (depth < 0) throw std::invalid_argument("Partition: depth must be >= 0");
  return uniform(T, 1 << depth);
}

double Partition::mesh() const {
  double m = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) m = std::max(m, points_[i] - points_[i - 1]);
  return m;
}

double total_variation(const BVPath& k, const Partition& pi) {
  const auto& p = pi.points();
  double v = 0.0;
  VectorXd prev = k.path().value(p[0]);
  for (std::size_t i = 1; i < p.size(); ++i) {
    VectorXd cur = k.path().value(p[i]);
    v += (cur - prev).norm();
    prev = std::move(cur);
  }
  return v;
}

std::vector<double> refinement_sequence(const BVPath& k, int depth) {
  if (depth < 1) throw std::invalid_argument("refinement_sequence: depth must be >= 1");
  const double T = k.path().horizon();
  std::vector<double> out;
  out.reserve(depth);
  for (int n = 1; n <= depth; ++n) out.push_back(total_variation(k, Partition::dyadic(T, n)));
  return out;
}

namespace {

/// Grid times of both paths restricted to the open interval (s, t).
std::vector<double> merged_interior_times(const CadlagPath& x, const CadlagPath& k, double s,
                                          double t) {
  std::vector<double> ev;
  for (double u : x.times())
    if (u > s && u < t) ev.push_back(u);
  for (double u : k.times())
    if (u > s && u < t) ev.push_back(u);
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  return ev;
}

}  // namespace

namespace {

/// Core inner-product integral over (s, t]. For step integrators the measure
/// is purely atomic at interior grid times; for linear integrators it has a
/// constant density per cell and left/right evaluation agree up to a null set.
double stieltjes_inner(const CadlagPath& x, const BVPath& k, double s, double t, bool left_eval) {
  const CadlagPath& kp = k.path();
  if (x.dim() != kp.dim())
    throw std::invalid_argument("stieltjes: integrand and integrator dimensions differ");
  const double T = std::max(kp.horizon(), x.horizon());
  s = std::clamp(s, 0.0, T);
  t = std::clamp(t, 0.0, T);
  if (!(t > s)) return 0.0;

  double total = 0.0;
  if (kp.interp() == Interp::step) {
    const auto& kt = kp.times();
    const auto& kv = kp.grid_values();
    for (std::size_t j = 1; j < kt.size(); ++j) {
      const double tau = kt[j];
      if (tau <= s) continue;
      if (tau > t) break;
      const VectorXd delta =
          (kv.row(static_cast<int>(j)) - kv.row(static_cast<int>(j) - 1)).transpose();
      const VectorXd xe = left_eval ? x.left_limit(tau) : x.value(tau);
      total += xe.dot(delta);
    }
    return total;
  }

  // linear integrator: piecewise-constant density on the merged grid
  std::vector<double> ev = merged_interior_times(x, kp, s, t);
  double a = s;
  for (std::size_t j = 0; j <= ev.size(); ++j) {
    const double b = (j < ev.size()) ? ev[j] : t;
    if (b <= a) continue;
    const VectorXd dk = kp.value(b) - kp.value(a);
    VectorXd xv;
    if (x.interp() == Interp::step) {
      xv = x.value(a);  // constant on [a, b)
    } else {
      xv = 0.5 * (x.value(a) + x.value(b));
    }
    total += xv.dot(dk);
    a = b;
  }
  return total;
}

}  // namespace

double stieltjes_left(const CadlagPath& x, const BVPath& k, double s, double t) {
  return stieltjes_inner(x, k, s, t, true);
}

double stieltjes_right(const CadlagPath& x, const BVPath& k, double s, double t) {
  return stieltjes_inner(x, k, s, t, false);
}

VectorXd stieltjes_right_components(const CadlagPath& x, const BVPath& k, double s, double t) {
  if (k.path().dim() != 1)
    throw std::invalid_argument("stieltjes_right_components: integrator must be scalar");
  VectorXd out(x.dim());
  for (int c = 0; c < x.dim(); ++c) {
    MatrixXd comp = x.grid_values().col(c);
    CadlagPath xc(x.times(), comp, x.interp());
    out[c] = stieltjes_inner(xc, k, s, t, false);
  }
  return out;
}

double jump_covariation(const CadlagPath& x, const BVPath& k, double t) {
  const CadlagPath& kp = k.path();
  if (x.interp() == Interp::linear || kp.interp() == Interp::linear) return 0.0;
  if (x.dim() != kp.dim())
    throw std::invalid_argument("jump_covariation: dimensions differ");
  const auto& xt = x.times();
  const auto& ktimes = kp.times();
  double total = 0.0;
  for (std::size_t j = 1; j < xt.size(); ++j) {
    const double tau = xt[j];
    if (tau > t) break;
    if (!std::binary_search(ktimes.begin(), ktimes.end(), tau)) continue;
    total += x.jump(tau).dot(kp.jump(tau));
  }
  return total;
}

double ibp_residual(const BVPath& l, const BVPath& k, double t) {
  const CadlagPath& lp = l.path();
  const CadlagPath& kp = k.path();
  const double lhs = stieltjes_right(lp, k, 0.0, t) + stieltjes_left(kp, l, 0.0, t) +
                     jump_covariation(kp, l, t);
  const double rhs = lp.value(t).dot(kp.value(t)) - lp.value(0.0).dot(kp.value(0.0)) +
                     jump_covariation(lp, k, t);
  return std::abs(lhs - rhs);
}

std::vector<double> helly_bray_gap(const std::vector<CadlagPath>& x_seq,
                                   const std::vector<BVPath>& k_seq, const CadlagPath& x,
                                   const BVPath& k, double s, double t) {
  if (x_seq.size() != k_seq.size())
    throw std::invalid_argument("helly_bray_gap: sequences must have equal length");
  const double limit = stieltjes_right(x, k, s, t);
  std::vector<double> gaps;
  gaps.reserve(x_seq.size());
  for (std::size_t n = 0; n < x_seq.size(); ++n)
    gaps.push_back(std::abs(stieltjes_right(x_seq[n], k_seq[n], s, t) - limit));
  return gaps;
}

namespace {

int nearest_index(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return static_cast<int>(times.size()) - 1;
  if (it == times.begin()) return 0;
  const int hi = static_cast<int>(it - times.begin());
  return (times[hi] - t <= t - times[hi - 1]) ? hi : hi - 1;
}

/// E| E[dL | S] | with the conditional mean fitted per the regressor.
double abs_conditional_mean(const std::vector<double>& dl, const std::vector<double>& s,
                            const Regressor& reg) {
  const std::size_t n = dl.size();
  if (reg.kind == Regressor::Kind::bucket) {
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] < s[b]; });
    const int bins = std::max(1, std::min<int>(reg.bins, static_cast<int>(n)));
    double acc = 0.0;
    std::size_t lo = 0;
    for (int b = 0; b < bins; ++b) {
      const std::size_t hi = (n * static_cast<std::size_t>(b + 1)) / bins;
      if (hi <= lo) continue;
      double m = 0.0;
      for (std::size_t i = lo; i < hi; ++i) m += dl[order[i]];
      m /= static_cast<double>(hi - lo);
      acc += std::abs(m) * static_cast<double>(hi - lo);
      lo = hi;
    }
    return acc / static_cast<double>(n);
  }

  // polynomial least squares on the standardized statistic; rank-revealing QR
  // reduces a degenerate design to the span it actually has
  double mu = 0.0, sd = 0.0;
  for (double v : s) mu += v;
  mu /= static_cast<double>(n);
  for (double v : s) sd += (v - mu) * (v - mu);
  sd = std::sqrt(sd / static_cast<double>(n));
  if (sd < 1e-300) sd = 1.0;
  const int cols = reg.degree + 1;
  MatrixXd design(n, cols);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (s[i] - mu) / sd;
    double p = 1.0;
    for (int c = 0; c < cols; ++c) {
      design(static_cast<int>(i), c) = p;
      p *= z;
    }
  }
  Eigen::Map<const VectorXd> rhs(dl.data(), static_cast<int>(n));
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  const VectorXd beta = qr.solve(rhs);
  const VectorXd fitted = design * beta;
  double acc = 0.0;
  for (int i = 0; i < fitted.size(); ++i) acc += std::abs(fitted[i]);
  return acc / static_cast<double>(n);
}

}  // namespace

double conditional_variation(const PathEnsemble& ensemble, const PathEnsemble& state,
                             const Partition& pi, const Regressor& regressor) {
  const int n = ensemble.n_paths();
  if (n < 100)
    throw std::invalid_argument("conditional_variation: need an ensemble of at least 100 paths");
  if (state.values.rows() != ensemble.values.rows())
    throw std::invalid_argument("conditional_variation: state ensemble size mismatch");

  // snap partition points to the shared grid
  std::vector<int> idx;
  for (double p : pi.points()) {
    const int i = nearest_index(ensemble.times, p);
    if (idx.empty() || i > idx.back()) idx.push_back(i);
  }

  double total = 0.0;
  std::vector<double> dl(n), s(n);
  for (std::size_t c = 0; c + 1 < idx.size(); ++c) {
    const int i0 = idx[c], i1 = idx[c + 1];
    for (int j = 0; j < n; ++j) {
      dl[j] = ensemble.values(j, i1) - ensemble.values(j, i0);
      s[j] = state.values(j, i0);
    }
    total += abs_conditional_mean(dl, s, regressor);
  }
  return total;
}

TightnessReport s_tightness_diagnostic(const std::vector<PathEnsemble>& ensembles,
                                       const Partition& pi, const Regressor& regressor,
                                       const std::vector<PathEnsemble>& states) {
  if (ensembles.size() < 2)
    throw std::invalid_argument("s_tightness_diagnostic: need at least two ensembles");
  if (!states.empty() && states.size() != ensembles.size())
    throw std::invalid_argument("s_tightness_diagnostic: one state ensemble per member");

  TightnessReport report;
  report.rows.reserve(ensembles.size());
  for (std::size_t n = 0; n < ensembles.size(); ++n) {
    const PathEnsemble& L = ensembles[n];
    const PathEnsemble& S = states.empty() ? L : states[n];
    TightnessRow row;
    row.cv = conditional_variation(L, S, pi, regressor);
    double esup = 0.0;
    for (int j = 0; j < L.values.rows(); ++j)
      esup += L.values.row(j).cwiseAbs().maxCoeff();
    row.esup = esup / static_cast<double>(L.values.rows());
    row.total = row.cv + row.esup;
    report.rows.push_back(row);
  }
  report.max_total = report.rows.front().total;
  report.min_total = report.rows.front().total;
  for (const auto& r : report.rows) {
    report.max_total = std::max(report.max_total, r.total);
    report.min_total = std::min(report.min_total, r.total);
  }
  return report;
}

}  // namespace reflekt::cadlag
