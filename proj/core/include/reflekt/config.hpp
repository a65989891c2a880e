#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reflekt/backward.hpp"
#include "reflekt/pde_oracle.hpp"
#include "reflekt/presets.hpp"
#include "reflekt/valuefn.hpp"

namespace reflekt::config {

/// Flat "section.key = value" text config. Sections are [bracketed]; values
/// are scalars, names, or comma-separated number lists. No nesting, no
/// includes: a resolved config is a diff-able list of key=value lines.
using FlatMap = std::map<std::string, std::string>;

FlatMap parse_file(const std::string& path);
FlatMap parse_text(const std::string& text);
/// "key=value" command-line override.
void apply_override(FlatMap& map, const std::string& key_value);
std::string canonical_text(const FlatMap& map);
std::string hash_hex(const FlatMap& map);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A fully resolved experiment: problem instance plus engine settings.
struct ExperimentConfig {
  Problem problem;
  std::string preset = "heat";
  std::uint64_t seed = 20240601;
  std::string out_dir = "out";
  std::string engine = "grid";  // grid | regression

  valuefn::GridEngineOptions grid;
  valuefn::RegressionEngineOptions regression;
  pde::FDGrid fd;

  double t0 = 0.25;
  double x0 = 0.1;
  int validation_samples = 256;

  // continuity experiment
  double modulus_dt0 = 0.25;
  double modulus_dx0 = 0.25;
  int modulus_levels = 8;

  // tightness experiment
  int tightness_members = 4;
  double tightness_scale = 1.0;  // per-member scaling (negative control > 1)

  FlatMap resolved;  // the flat view this config was built from
};

/// Build an ExperimentConfig from a flat map (preset name required unless the
/// map overrides phi/psi on top of a preset). Throws ConfigError with the
/// offending field on bad values.
ExperimentConfig resolve(const FlatMap& map);

/// The defaults for a preset as a flat map (useful to print and to hash).
FlatMap defaults_for(const std::string& preset);

}  // namespace reflekt::config
