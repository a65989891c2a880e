#include "reflekt/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reflekt::csv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& file) {
  std::ofstream out(file, std::ios::binary);  // fixed newlines on every platform
  if (!out) throw std::runtime_error("cannot open for writing: " + file);
  return out;
}

}  // namespace

void write_path(const std::string& file, const cadlag::CadlagPath& path) {
  auto out = open_out(file);
  out << "time";
  for (int c = 0; c < path.dim(); ++c) out << ",v" << c;
  out << "\n";
  const auto& times = path.times();
  const auto& v = path.grid_values();
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << format_double(times[i]);
    for (int c = 0; c < path.dim(); ++c)
      out << "," << format_double(v(static_cast<int>(i), c));
    out << "\n";
  }
}

cadlag::CadlagPath read_path(const std::string& file, cadlag::Interp interp) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open for reading: " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty path file: " + file);
  int dim = -1;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 2) throw std::runtime_error("bad path row: " + line);
    if (dim < 0) dim = static_cast<int>(vals.size()) - 1;
    times.push_back(vals[0]);
    rows.push_back({vals.begin() + 1, vals.end()});
  }
  Eigen::MatrixXd values(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < dim; ++c) values(static_cast<int>(i), c) = rows[i][c];
  return cadlag::CadlagPath(std::move(times), std::move(values), interp);
}

void write_ensemble_paths(const std::string& file, const cadlag::PathEnsemble& ens,
                          int max_paths) {
  auto out = open_out(file);
  out << "path_id,time,v0\n";
  const int n = std::min<int>(max_paths, ens.n_paths());
  for (int p = 0; p < n; ++p)
    for (std::size_t i = 0; i < ens.times.size(); ++i)
      out << p << "," << format_double(ens.times[i]) << ","
          << format_double(ens.values(p, static_cast<int>(i))) << "\n";
}

void write_tightness(const std::string& file, const cadlag::TightnessReport& report) {
  auto out = open_out(file);
  out << "n,cv,esup,total\n";
  for (std::size_t n = 0; n < report.rows.size(); ++n)
    out << (n + 1) << "," << format_double(report.rows[n].cv) << ","
        << format_double(report.rows[n].esup) << "," << format_double(report.rows[n].total)
        << "\n";
}

namespace {

void write_surface_impl(const std::string& file, const valuefn::ValueSurface& surface,
                        const char* se_name) {
  auto out = open_out(file);
  out << "t,x,u," << se_name << "\n";
  for (std::size_t i = 0; i < surface.t_grid.size(); ++i)
    for (std::size_t j = 0; j < surface.x_grid.size(); ++j)
      out << format_double(surface.t_grid[i]) << "," << format_double(surface.x_grid[j]) << ","
          << format_double(surface.u(static_cast<int>(i), static_cast<int>(j))) << ","
          << format_double(surface.se(static_cast<int>(i), static_cast<int>(j))) << "\n";
}

}  // namespace

void write_surface(const std::string& file, const valuefn::ValueSurface& surface) {
  write_surface_impl(file, surface, "se");
}

void write_value_grid(const std::string& file, const valuefn::ValueSurface& surface) {
  write_surface_impl(file, surface, "u_se");
}

void write_path_solution(const std::string& file, const backward::RegressionSolution& sol,
                         int max_paths) {
  if (sol.m != 1)
    throw std::invalid_argument("write_path_solution: scalar solutions only");
  auto out = open_out(file);
  out << "path_id,t,Y,U,V,K1,K2\n";
  const int n = std::min<int>(max_paths, static_cast<int>(sol.Y[0].rows()));
  for (int p = 0; p < n; ++p)
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
      const int ii = static_cast<int>(i);
      out << p << "," << format_double(sol.times[i]) << "," << format_double(sol.Y[0](p, ii))
          << "," << format_double(sol.U[0](p, ii)) << "," << format_double(sol.V[0](p, ii))
          << "," << format_double(sol.K1[0](p, ii)) << "," << format_double(sol.K2[0](p, ii))
          << "\n";
    }
}

void write_continuity_table(const std::string& file,
                            const std::vector<forward::ContinuityRow>& rows) {
  auto out = open_out(file);
  out << "pair_id,dx,dt,est_X,est_A,ratio,se\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    out << i << "," << format_double(rows[i].dx) << "," << format_double(rows[i].dt_gap) << ","
        << format_double(rows[i].est_X) << "," << format_double(rows[i].est_A) << ","
        << format_double(rows[i].ratio) << "," << format_double(rows[i].se_X + rows[i].se_A)
        << "\n";
}

void write_modulus(const std::string& file, const valuefn::ModulusReport& report) {
  auto out = open_out(file);
  out << "n,dt,dx,gap,se\n";
  for (const auto& row : report.rows)
    out << row.n << "," << format_double(row.dt) << "," << format_double(row.dx) << ","
        << format_double(row.gap) << "," << format_double(row.se) << "\n";
  // summary row: fitted exponents in the dt/dx columns
  out << "fit," << format_double(report.fitted_exponent_t) << ","
      << format_double(report.fitted_exponent_x) << "," << format_double(report.limit_value)
      << ",0\n";
}

void write_rows(const std::string& file, const std::string& header,
                const std::vector<std::vector<double>>& rows) {
  auto out = open_out(file);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << format_double(row[i]);
    }
    out << "\n";
  }
}

}  // namespace reflekt::csv
