#pragma once

// JSON run configuration. Lengths in mm, forces in N, stiffness in N/mm,
// moduli in MPa, angles in degrees (converted to radians on load).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "graspsynth/design_search.hpp"
#include "graspsynth/fe_oracle.hpp"
#include "graspsynth/mechanism.hpp"

namespace graspsynth {

struct SweepSettings {
  double travel_max = 5.0;
  int n_samples = kDefaultCurveSamples;
  int ring_points = 81;  // grasper table resolution over the calibrated ring travel
  bool operator==(const SweepSettings&) const = default;
};

struct DesignSettings {
  DesignSpec spec;
  GridDensity grid;
  std::uint64_t grid_cap = kDefaultGridCap;
  int refine_max_evals = 200;
  bool operator==(const DesignSettings&) const = default;
};

struct FeSettings {
  int n_elements = fe::kDefaultElements;
  int n_steps = 100;
  double tolerance = 1e-8;
  int max_iterations = 25;
  bool arc_length_fallback = true;

  fe::SolverSettings solver() const;
  bool operator==(const FeSettings&) const = default;
};

struct RunConfig {
  MechanismConfig mechanism;  // mechanism.material mirrors `material`
  MaterialModel material;
  SweepSettings sweep;
  std::optional<DesignSettings> design;
  std::optional<FeSettings> fe;
  std::string output_dir = ".";

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Schema, Invariant };
  ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

/// Strict parse: unknown keys are rejected with their key path; omitted
/// optional blocks get defaults. Whitespace-only text is an empty object.
RunConfig parse_config(std::string_view text);

RunConfig load_config(const std::string& path);

/// Full JSON document (every field spelled out) accepted by parse_config.
std::string serialize_config(const RunConfig& config);

}  // namespace graspsynth
