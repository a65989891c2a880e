// Config-driven experiment runner: every module is exposed as a subcommand
// and each run leaves CSV artifacts plus a manifest behind.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "reflekt/assumptions.hpp"
#include "reflekt/config.hpp"
#include "reflekt/csv.hpp"
#include "reflekt/pde_oracle.hpp"
#include "reflekt/rng.hpp"
#include "reflekt/version.hpp"

namespace {

namespace fs = std::filesystem;
using reflekt::config::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RunContext {
  ExperimentConfig cfg;
  fs::path out;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }

  void write_manifest() {
    nlohmann::json j;
    j["version"] = std::string("reflekt ") + reflekt::kVersion;
    j["seed"] = cfg.seed;
    j["config_hash"] = reflekt::config::hash_hex(cfg.resolved);
    j["config"] = nlohmann::json::object();
    for (const auto& [k, v] : cfg.resolved) j["config"][k] = v;
    j["outputs"] = outputs;
    j["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream os(out / "manifest.json", std::ios::binary);
    os << j.dump(2) << "\n";
  }
};

int validate_or_exit(RunContext& ctx) {
  reflekt::AssumptionReport report =
      reflekt::validate_assumptions(ctx.cfg.problem, ctx.cfg.validation_samples, ctx.cfg.seed);
  if (!report.passed()) {
    std::cerr << "config validation failed; per-condition residuals:\n";
    for (const auto& c : report.checks)
      std::cerr << "  " << c.name << ": " << c.worst << (c.worst > report.tol ? "  <-- FAIL" : "")
                << "\n";
    return kExitConfig;
  }
  return 0;
}

void write_assumption_csv(RunContext& ctx, const reflekt::AssumptionReport& report) {
  std::ofstream out(ctx.path("assumptions.csv"), std::ios::binary);
  out << "check,worst_violation\n";
  for (const auto& c : report.checks)
    out << c.name << "," << reflekt::csv::format_double(c.worst) << "\n";
}

int cmd_validate(RunContext& ctx) {
  reflekt::AssumptionReport report =
      reflekt::validate_assumptions(ctx.cfg.problem, ctx.cfg.validation_samples, ctx.cfg.seed);
  write_assumption_csv(ctx, report);
  ctx.write_manifest();
  for (const auto& c : report.checks)
    std::cout << c.name << ": " << c.worst << "\n";
  if (!report.passed()) {
    std::cerr << "validation FAILED\n";
    return kExitConfig;
  }
  std::cout << "all assumption checks passed (tol " << report.tol << ")\n";
  return 0;
}

int cmd_simulate_forward(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  Eigen::VectorXd x0(1);
  x0[0] = cfg.x0;
  const int n_steps = static_cast<int>(
      std::stol(cfg.resolved.count("forward.steps") ? cfg.resolved.at("forward.steps") : "256"));
  const int n_paths = static_cast<int>(
      std::stol(cfg.resolved.count("forward.paths") ? cfg.resolved.at("forward.paths") : "1024"));
  reflekt::forward::ForwardEnsemble ens = reflekt::forward::simulate_forward_ensemble(
      cfg.problem.domain, cfg.problem.coeffs, cfg.t0, x0, cfg.problem.T, n_steps, n_paths,
      cfg.seed);
  reflekt::csv::write_ensemble_paths(ctx.path("forward_X.csv"),
                                     reflekt::forward::state_ensemble(ens), 16);
  reflekt::csv::write_ensemble_paths(ctx.path("forward_A.csv"),
                                     reflekt::forward::local_time_ensemble(ens), 16);
  double mean_at = 0.0;
  for (int p = 0; p < ens.n_paths(); ++p) mean_at += ens.A(p, ens.n_steps());
  mean_at /= ens.n_paths();
  reflekt::csv::write_rows(ctx.path("forward_summary.csv"), "n_paths,n_steps,mean_A_T",
                           {{static_cast<double>(n_paths), static_cast<double>(n_steps),
                             mean_at}});
  ctx.write_manifest();
  std::cout << "forward ensemble done; mean A_T = " << mean_at << "\n";
  return 0;
}

int cmd_solve(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.engine == "grid") {
    reflekt::valuefn::ValueSurface surf =
        reflekt::valuefn::value_surface(cfg.problem, cfg.grid);
    reflekt::csv::write_value_grid(ctx.path("value_grid.csv"), surf);
    ctx.write_manifest();
    std::cout << "grid solve done; u(t0, x0) = " << surf.at(cfg.t0, cfg.x0) << "\n";
    return 0;
  }
  Eigen::VectorXd x0(1);
  x0[0] = cfg.x0;
  reflekt::forward::ForwardEnsemble ens = reflekt::forward::simulate_forward_ensemble(
      cfg.problem.domain, cfg.problem.coeffs, cfg.t0, x0, cfg.problem.T,
      cfg.regression.n_steps, cfg.regression.n_paths, cfg.seed);
  reflekt::backward::RegressionSolution sol = reflekt::backward::solve_regression(
      ens, cfg.problem.coeffs, cfg.problem.phi, cfg.problem.psi, cfg.regression.params);
  reflekt::csv::write_path_solution(ctx.path("path_solution.csv"), sol, 16);
  reflekt::csv::write_rows(ctx.path("solve_summary.csv"), "y0,max_condition",
                           {{sol.y0[0], sol.max_condition}});
  ctx.write_manifest();
  std::cout << "regression solve done; Y_0 = " << sol.y0[0] << "\n";
  return 0;
}

int cmd_value_surface(RunContext& ctx) {
  reflekt::valuefn::ValueSurface surf =
      reflekt::valuefn::value_surface(ctx.cfg.problem, ctx.cfg.grid);
  reflekt::csv::write_surface(ctx.path("surface.csv"), surf);
  ctx.write_manifest();
  std::cout << "surface written (" << surf.t_grid.size() << " x " << surf.x_grid.size()
            << ")\n";
  return 0;
}

int cmd_continuity(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  reflekt::valuefn::GridEngineOptions fine = cfg.grid;
  // dedicated fine dyadic grid so the geometric sequence stays on nodes
  fine.n_t = cfg.resolved.count("continuity.nt") ? std::stoi(cfg.resolved.at("continuity.nt"))
                                                 : 512;
  fine.n_x = cfg.resolved.count("continuity.nx") ? std::stoi(cfg.resolved.at("continuity.nx"))
                                                 : 1025;
  reflekt::valuefn::ModulusReport report = reflekt::valuefn::continuity_modulus(
      cfg.problem, fine, cfg.t0, cfg.x0, cfg.modulus_dt0, cfg.modulus_dx0, cfg.modulus_levels);
  reflekt::csv::write_modulus(ctx.path("modulus.csv"), report);
  ctx.write_manifest();
  std::cout << "continuity modulus done; gap at deepest level = "
            << report.rows.back().gap << "\n";
  return 0;
}

int cmd_compare_pde(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  reflekt::valuefn::ValueSurface engine = reflekt::valuefn::value_surface(cfg.problem, cfg.grid);
  reflekt::valuefn::ValueSurface oracle = reflekt::pde::solve_pvi(
      cfg.problem.domain, cfg.problem.coeffs, cfg.problem.phi, cfg.problem.psi, cfg.problem.T,
      cfg.fd);
  double sup_gap = 0.0, t_at = 0.0, x_at = 0.0;
  for (std::size_t i = 0; i < engine.t_grid.size(); ++i)
    for (std::size_t j = 0; j < engine.x_grid.size(); ++j) {
      const double gap = std::abs(engine.u(static_cast<int>(i), static_cast<int>(j)) -
                                  oracle.at(engine.t_grid[i], engine.x_grid[j]));
      if (gap > sup_gap) {
        sup_gap = gap;
        t_at = engine.t_grid[i];
        x_at = engine.x_grid[j];
      }
    }
  reflekt::csv::write_surface(ctx.path("engine_surface.csv"), engine);
  reflekt::csv::write_surface(ctx.path("oracle_surface.csv"), oracle);
  reflekt::csv::write_rows(ctx.path("compare_report.csv"), "sup_gap,t_at_max,x_at_max",
                           {{sup_gap, t_at, x_at}});
  ctx.write_manifest();
  std::cout << "sup gap engine vs oracle = " << sup_gap << " at (t=" << t_at << ", x=" << x_at
            << ")\n";
  return 0;
}

int cmd_tightness(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  std::vector<std::pair<double, double>> sequence;
  for (int n = 1; n <= cfg.tightness_members; ++n) {
    const double s = std::pow(2.0, -n);
    sequence.push_back({cfg.t0 + 0.25 * s, cfg.x0 + 0.25 * s});
  }
  reflekt::valuefn::RegressionEngineOptions opts = cfg.regression;
  reflekt::valuefn::TightnessSequenceReport report = reflekt::valuefn::tightness_along_sequence(
      cfg.problem, opts, sequence, cfg.tightness_scale);

  auto per_process = [&](const char* name,
                         const std::function<reflekt::cadlag::TightnessRow(
                             const reflekt::valuefn::TightnessSequenceRow&)>& pick) {
    reflekt::cadlag::TightnessReport flat;
    for (const auto& row : report.rows) flat.rows.push_back(pick(row));
    reflekt::csv::write_tightness(ctx.path(std::string("tightness_") + name + ".csv"), flat);
  };
  per_process("Y", [](const auto& r) { return r.y; });
  per_process("K1", [](const auto& r) { return r.k1; });
  per_process("K2", [](const auto& r) { return r.k2; });
  per_process("M", [](const auto& r) { return r.m; });
  std::vector<std::vector<double>> totals;
  for (const auto& r : report.rows)
    totals.push_back({static_cast<double>(r.n), r.t_n, r.x_n, r.total});
  reflekt::csv::write_rows(ctx.path("tightness_totals.csv"), "n,t_n,x_n,total", totals);
  ctx.write_manifest();
  std::cout << "tightness totals: max/min = "
            << (report.min_total > 0 ? report.max_total / report.min_total : 0.0) << "\n";
  return 0;
}

int cmd_convex_selftest(RunContext& ctx) {
  using namespace reflekt::convex;
  reflekt::CounterRng rng(reflekt::CounterRng::derive_key(ctx.cfg.seed, "selftest", 0));
  Eigen::VectorXd lo(2), hi(2);
  lo << -1.0, -0.5;
  hi << 1.0, 2.0;
  std::vector<ConvexSpec> specs = {
      ConvexSpec::zero(2), ConvexSpec::quadratic(2, 1.5), ConvexSpec::abs_norm(2, 0.7),
      ConvexSpec::indicator_box(lo, hi),
      ConvexSpec::sum({ConvexSpec::quadratic(2, 1.0), ConvexSpec::abs_norm(2, 0.5)})};
  double worst_identity = 0.0, worst_nonexp = 0.0, worst_selection = 0.0;
  const std::vector<double> eps_list{1e-3, 1e-1, 1.0};
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 500; ++trial) {
      Eigen::VectorXd y(2), y2(2);
      for (int i = 0; i < 2; ++i) {
        y[i] = 3.0 * rng.normal();
        y2[i] = 3.0 * rng.normal();
      }
      for (double e : eps_list) {
        MoreauParams eps(e);
        const Eigen::VectorXd j1 = resolvent(spec, eps, y);
        const Eigen::VectorXd j2 = resolvent(spec, eps, y2);
        const Eigen::VectorXd g = moreau_gradient(spec, eps, y);
        worst_identity = std::max(
            worst_identity, std::abs(moreau_envelope(spec, eps, y) -
                                     (0.5 * e * g.squaredNorm() + evaluate(spec, j1))));
        worst_nonexp = std::max(worst_nonexp, (j1 - j2).norm() - (y - y2).norm());
        worst_selection = std::max(
            worst_selection, subgradient_inequality_residual(spec, j1, g, {y2, j2,
                                                                           0.5 * (j1 + j2)}));
      }
    }
  }
  reflekt::csv::write_rows(ctx.path("selftest_convex.csv"),
                           "moreau_identity,firm_nonexpansive,selection_residual",
                           {{worst_identity, worst_nonexp, worst_selection}});
  ctx.write_manifest();
  std::cout << "convex selftest: identity " << worst_identity << ", nonexpansive "
            << worst_nonexp << ", selection " << worst_selection << "\n";
  return (worst_identity < 1e-8 && worst_nonexp < 1e-10 && worst_selection < 1e-8)
             ? 0
             : kExitNumerical;
}

int cmd_cadlag_selftest(RunContext& ctx) {
  using namespace reflekt::cadlag;
  reflekt::CounterRng rng(reflekt::CounterRng::derive_key(ctx.cfg.seed, "selftest", 1));
  // total variation of one sine period sampled densely
  const int n = 10000;
  std::vector<double> times(n + 1), vals(n + 1);
  for (int i = 0; i <= n; ++i) {
    times[i] = static_cast<double>(i) / n;
    vals[i] = std::sin(2.0 * 3.14159265358979323846 * times[i]);
  }
  BVPath sine(CadlagPath::scalar(times, vals, Interp::linear));
  const double tv_gap = std::abs(refinement_sequence(sine, 14).back() - 4.0);

  double worst_ibp = 0.0, worst_link = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> t(11), a(11), b(11);
    for (int i = 0; i <= 10; ++i) {
      t[i] = static_cast<double>(i) / 10.0;
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    BVPath l(CadlagPath::scalar(t, a, Interp::step));
    BVPath k(CadlagPath::scalar(t, b, Interp::step));
    worst_ibp = std::max(worst_ibp, ibp_residual(l, k, 1.0));
    const double link = stieltjes_right(l.path(), k, 0.0, 1.0) -
                        stieltjes_left(l.path(), k, 0.0, 1.0) -
                        jump_covariation(l.path(), k, 1.0);
    worst_link = std::max(worst_link, std::abs(link));
  }
  reflekt::csv::write_rows(ctx.path("selftest_cadlag.csv"),
                           "tv_refinement_gap,ibp_residual,left_right_jump_link",
                           {{tv_gap, worst_ibp, worst_link}});
  ctx.write_manifest();
  std::cout << "cadlag selftest: tv gap " << tv_gap << ", ibp " << worst_ibp << ", link "
            << worst_link << "\n";
  return (tv_gap < 1e-4 && worst_ibp < 1e-10 && worst_link < 1e-12) ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflekt: reflected forward-backward stochastic system workbench"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, engine, seed_str;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--preset", preset, "named preset (heat, drifted, obstacle_interior, ...)");
  app.add_option("--seed", seed_str, "master seed (overrides config and REFLEKT_SEED)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--engine", engine, "solver engine: grid | regression");
  app.add_option("--override", overrides, "section.key=value override (repeatable)");

  auto* sc_validate = app.add_subcommand("validate-assumptions", "sampled assumption checks");
  auto* sc_forward = app.add_subcommand("simulate-forward", "reflected SDE ensemble");
  auto* sc_solve = app.add_subcommand("solve", "backward solve (grid or regression engine)");
  auto* sc_surface = app.add_subcommand("value-surface", "u(t, x) on the full grid");
  auto* sc_continuity = app.add_subcommand("continuity", "continuity modulus of u");
  auto* sc_compare = app.add_subcommand("compare-pde", "engine vs finite-difference oracle");
  auto* sc_tightness = app.add_subcommand("tightness", "tightness diagnostics along a sequence");
  auto* sc_convex = app.add_subcommand("convex-selftest", "convex toolkit identities");
  auto* sc_cadlag = app.add_subcommand("cadlag-selftest", "path machinery identities");

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  try {
    reflekt::config::FlatMap map =
        reflekt::config::defaults_for(preset.empty() ? "heat" : preset);
    if (!config_path.empty()) {
      for (const auto& [k, v] : reflekt::config::parse_file(config_path)) map[k] = v;
    }
    if (!preset.empty()) map["problem.preset"] = preset;
    if (!seed_str.empty()) map["run.seed"] = seed_str;
    if (!out_dir.empty()) map["run.out"] = out_dir;
    if (!engine.empty()) map["run.engine"] = engine;
    for (const auto& o : overrides) reflekt::config::apply_override(map, o);
    ctx.cfg = reflekt::config::resolve(map);
    if (!seed_str.empty()) {
      // the explicit flag wins over REFLEKT_SEED as well
      ctx.cfg.seed = std::stoull(seed_str);
      ctx.cfg.resolved["run.seed"] = std::to_string(ctx.cfg.seed);
    }
    ctx.out = ctx.cfg.out_dir;
    std::filesystem::create_directories(ctx.out);
  } catch (const reflekt::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const bool needs_validation = !sc_convex->parsed() && !sc_cadlag->parsed();
    if (needs_validation && !sc_validate->parsed()) {
      const int rc = validate_or_exit(ctx);
      if (rc != 0) return rc;
    }
    if (sc_validate->parsed()) return cmd_validate(ctx);
    if (sc_forward->parsed()) return cmd_simulate_forward(ctx);
    if (sc_solve->parsed()) return cmd_solve(ctx);
    if (sc_surface->parsed()) return cmd_value_surface(ctx);
    if (sc_continuity->parsed()) return cmd_continuity(ctx);
    if (sc_compare->parsed()) return cmd_compare_pde(ctx);
    if (sc_tightness->parsed()) return cmd_tightness(ctx);
    if (sc_convex->parsed()) return cmd_convex_selftest(ctx);
    if (sc_cadlag->parsed()) return cmd_cadlag_selftest(ctx);
  } catch (const reflekt::convex::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
