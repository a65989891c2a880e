#pragma once

#include <string>
#include <vector>

#include "reflekt/backward.hpp"
#include "reflekt/cadlag.hpp"
#include "reflekt/forward.hpp"
#include "reflekt/valuefn.hpp"

namespace reflekt::csv {

/// All writers format doubles with "%.17g" so identical inputs give
/// byte-identical files.
std::string format_double(double v);

void write_path(const std::string& file, const cadlag::CadlagPath& path);
cadlag::CadlagPath read_path(const std::string& file, cadlag::Interp interp);

void write_ensemble_paths(const std::string& file, const cadlag::PathEnsemble& ens,
                          int max_paths);

/// Flat diagnostics: n,cv,esup,total
void write_tightness(const std::string& file, const cadlag::TightnessReport& report);

/// t,x,u,se
void write_surface(const std::string& file, const valuefn::ValueSurface& surface);

/// t,x,u,u_se (grid-solver export convention)
void write_value_grid(const std::string& file, const valuefn::ValueSurface& surface);

/// path_id,t,Y,U,V,K1,K2 (m = 1 solutions)
void write_path_solution(const std::string& file, const backward::RegressionSolution& sol,
                         int max_paths);

/// pair_id,dx,dt,est_X,est_A,ratio,se
void write_continuity_table(const std::string& file,
                            const std::vector<forward::ContinuityRow>& rows);

/// n,dt,dx,gap,se plus a trailing fitted-exponent summary row
void write_modulus(const std::string& file, const valuefn::ModulusReport& report);

void write_rows(const std::string& file, const std::string& header,
                const std::vector<std::vector<double>>& rows);

}  // namespace reflekt::csv
