#include "reflekt/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace reflekt::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const FlatMap& map, const std::string& key, double fallback) {
  auto it = map.find(key);
  if (it == map.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + it->second + "'");
  }
}

long to_long(const FlatMap& map, const std::string& key, long fallback) {
  auto it = map.find(key);
  if (it == map.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + it->second + "'");
  }
}

std::string to_string(const FlatMap& map, const std::string& key, const std::string& fallback) {
  auto it = map.find(key);
  return it == map.end() ? fallback : it->second;
}

bool to_bool(const FlatMap& map, const std::string& key, bool fallback) {
  auto it = map.find(key);
  if (it == map.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + it->second + "'");
}

std::vector<double> to_list(const FlatMap& map, const std::string& key) {
  auto it = map.find(key);
  std::vector<double> out;
  if (it == map.end()) return out;
  std::stringstream ss(it->second);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    if (cell == "inf" || cell == "+inf") {
      out.push_back(convex::kPlusInfinity);
    } else if (cell == "-inf") {
      out.push_back(-convex::kPlusInfinity);
    } else {
      try {
        out.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(key, "bad list entry '" + cell + "'");
      }
    }
  }
  return out;
}

/// Optional override of a convex function from the "[phi]" / "[psi]" sections.
convex::ConvexSpec parse_convex(const FlatMap& map, const std::string& section,
                                const convex::ConvexSpec& fallback) {
  const std::string kind = to_string(map, section + ".kind", "");
  if (kind.empty()) return fallback;
  const int dim = static_cast<int>(to_long(map, section + ".dim", 1));
  if (kind == "zero") return convex::ConvexSpec::zero(dim);
  if (kind == "quadratic")
    return convex::ConvexSpec::quadratic(dim, to_double(map, section + ".scale", 1.0));
  if (kind == "abs_norm")
    return convex::ConvexSpec::abs_norm(dim, to_double(map, section + ".scale", 1.0));
  if (kind == "indicator_box") {
    std::vector<double> lo = to_list(map, section + ".lo");
    std::vector<double> hi = to_list(map, section + ".hi");
    if (lo.empty() || lo.size() != hi.size())
      throw ConfigError(section + ".lo", "indicator_box needs matching lo/hi lists");
    Eigen::VectorXd l(lo.size()), h(hi.size());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      l[static_cast<int>(i)] = lo[i];
      h[static_cast<int>(i)] = hi[i];
    }
    return convex::ConvexSpec::indicator_box(l, h);
  }
  if (kind == "custom_1d") {
    std::vector<double> breaks = to_list(map, section + ".breakpoints");
    std::vector<double> values = to_list(map, section + ".values");
    return convex::ConvexSpec::custom_1d(breaks, values);
  }
  throw ConfigError(section + ".kind", "unknown convex kind '" + kind + "'");
}

}  // namespace

FlatMap parse_text(const std::string& text) {
  FlatMap map;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    map[section.empty() ? key : section + "." + key] = value;
  }
  return map;
}

FlatMap parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void apply_override(FlatMap& map, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError(key_value, "override must look like section.key=value");
  map[trim(key_value.substr(0, eq))] = trim(key_value.substr(eq + 1));
}

std::string canonical_text(const FlatMap& map) {
  std::string out;
  for (const auto& [k, v] : map) {
    out += k;
    out += "=";
    out += v;
    out += "\n";
  }
  return out;
}

std::string hash_hex(const FlatMap& map) {
  // FNV-1a over the canonical serialization
  const std::string text = canonical_text(map);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FlatMap defaults_for(const std::string& preset) {
  FlatMap map;
  map["problem.preset"] = preset;
  map["run.seed"] = "20240601";
  map["run.engine"] = "grid";
  map["run.out"] = "out";
  map["grid.nt"] = "50";
  map["grid.nx"] = "50";
  map["grid.transition"] = "exact_gaussian_projected";
  map["grid.mc_paths"] = "4096";
  map["regression.paths"] = "8192";
  map["regression.steps"] = "256";
  map["regression.degree"] = "5";
  map["solver.prox_mode"] = "exact_resolvent";
  map["solver.epsilon"] = "0.01";
  map["solver.tol"] = "1e-12";
  map["solver.n_inner"] = "200";
  map["solver.phi_first"] = "true";
  map["pde.nx"] = "200";
  map["pde.nt"] = "2000";
  map["pde.theta"] = "0.5";
  return map;
}

ExperimentConfig resolve(const FlatMap& map) {
  ExperimentConfig cfg;
  cfg.preset = to_string(map, "problem.preset", "heat");
  try {
    cfg.problem = make_preset(cfg.preset);
  } catch (const std::exception& e) {
    throw ConfigError("problem.preset", e.what());
  }
  cfg.problem.T = to_double(map, "problem.T", cfg.problem.T);
  if (!(cfg.problem.T > 0.0)) throw ConfigError("problem.T", "horizon must be > 0");

  cfg.problem.phi = parse_convex(map, "phi", cfg.problem.phi);
  cfg.problem.psi = parse_convex(map, "psi", cfg.problem.psi);

  cfg.seed = static_cast<std::uint64_t>(to_long(map, "run.seed", 20240601));
  if (const char* env = std::getenv("REFLEKT_SEED")) {
    try {
      cfg.seed = static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw ConfigError("REFLEKT_SEED", "environment override is not an integer");
    }
  }
  cfg.out_dir = to_string(map, "run.out", "out");
  cfg.engine = to_string(map, "run.engine", "grid");
  if (cfg.engine != "grid" && cfg.engine != "regression")
    throw ConfigError("run.engine", "must be 'grid' or 'regression'");

  cfg.t0 = to_double(map, "run.t0", cfg.problem.t0);
  cfg.x0 = to_double(map, "run.x0", cfg.problem.x0);
  cfg.validation_samples = static_cast<int>(to_long(map, "run.validation_samples", 256));

  cfg.grid.n_t = static_cast<int>(to_long(map, "grid.nt", 50));
  cfg.grid.n_x = static_cast<int>(to_long(map, "grid.nx", 50));
  if (cfg.grid.n_t < 1 || cfg.grid.n_x < 2)
    throw ConfigError("grid.nt", "grid must have nt >= 1 steps and nx >= 2 nodes");
  const std::string trans = to_string(map, "grid.transition", "exact_gaussian_projected");
  if (trans == "exact_gaussian_projected") {
    cfg.grid.transition.kind = backward::TransitionSpec::Kind::exact_gaussian_projected;
  } else if (trans == "mc") {
    cfg.grid.transition.kind = backward::TransitionSpec::Kind::mc;
  } else {
    throw ConfigError("grid.transition", "must be 'exact_gaussian_projected' or 'mc'");
  }
  cfg.grid.transition.mc_paths = static_cast<int>(to_long(map, "grid.mc_paths", 4096));
  cfg.grid.transition.seed = cfg.seed;

  cfg.regression.n_paths = static_cast<int>(to_long(map, "regression.paths", 8192));
  cfg.regression.n_steps = static_cast<int>(to_long(map, "regression.steps", 256));
  cfg.regression.seed = cfg.seed;
  if (cfg.regression.n_paths < 1000)
    throw ConfigError("regression.paths", "regression engine needs at least 1000 paths");

  backward::SolverParams params;
  const std::string prox = to_string(map, "solver.prox_mode", "exact_resolvent");
  if (prox == "exact_resolvent") {
    params.prox_mode = backward::SolverParams::ProxMode::exact_resolvent;
  } else if (prox == "moreau_penalized") {
    params.prox_mode = backward::SolverParams::ProxMode::moreau_penalized;
  } else {
    throw ConfigError("solver.prox_mode", "must be 'exact_resolvent' or 'moreau_penalized'");
  }
  params.penal_epsilon = to_double(map, "solver.epsilon", 1e-2);
  if (!(params.penal_epsilon > 0.0)) throw ConfigError("solver.epsilon", "must be > 0");
  params.tol = to_double(map, "solver.tol", 1e-12);
  if (!(params.tol > 0.0)) throw ConfigError("solver.tol", "must be > 0");
  params.n_inner = static_cast<int>(to_long(map, "solver.n_inner", 200));
  params.phi_first = to_bool(map, "solver.phi_first", true);
  params.basis_degree = static_cast<int>(to_long(map, "regression.degree", 5));
  cfg.grid.params = params;
  cfg.regression.params = params;

  cfg.fd.n_x = static_cast<int>(to_long(map, "pde.nx", 200));
  cfg.fd.n_t = static_cast<int>(to_long(map, "pde.nt", 2000));
  cfg.fd.theta = to_double(map, "pde.theta", 0.5);
  if (!(cfg.fd.theta >= 0.5 && cfg.fd.theta <= 1.0))
    throw ConfigError("pde.theta", "theta must lie in [1/2, 1]");

  cfg.modulus_dt0 = to_double(map, "continuity.dt0", 0.25);
  cfg.modulus_dx0 = to_double(map, "continuity.dx0", 0.25);
  cfg.modulus_levels = static_cast<int>(to_long(map, "continuity.levels", 8));

  cfg.tightness_members = static_cast<int>(to_long(map, "tightness.members", 4));
  cfg.tightness_scale = to_double(map, "tightness.scale", 1.0);

  cfg.resolved = map;
  FlatMap defaults = defaults_for(cfg.preset);
  for (const auto& [k, v] : defaults)
    if (!cfg.resolved.count(k)) cfg.resolved[k] = v;
  cfg.resolved["run.seed"] = std::to_string(cfg.seed);
  return cfg;
}

}  // namespace reflekt::config
