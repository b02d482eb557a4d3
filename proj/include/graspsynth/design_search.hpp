#pragma once

// Derivative-free sizing of V-beam geometry and beam count against a target
// ring force and travel: exhaustive grid evaluation with a deterministic
// ranking, followed by coordinate pattern search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "graspsynth/errors.hpp"
#include "graspsynth/tebc.hpp"

namespace graspsynth {

struct ParamRange {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v, double slack = 1e-12) const {
    const double tol = slack * std::max(1.0, std::max(std::abs(min), std::abs(max)));
    return v >= min - tol && v <= max + tol;
  }
  bool operator==(const ParamRange&) const = default;
};

struct BeamCountRange {
  int min = 1;
  int max = 1;
  bool operator==(const BeamCountRange&) const = default;
};

struct DesignBounds {
  ParamRange length_L;
  ParamRange thickness_T;
  ParamRange width_W;
  ParamRange tilt_theta;  // radians
  BeamCountRange n_beams;
  bool operator==(const DesignBounds&) const = default;
};

struct DesignSpec {
  double target_force = 20.0;  // N, ring level
  double target_travel = 5.0;  // mm
  DesignBounds bounds;
  double stress_limit = 50.0;         // MPa, screening surrogate
  double length_budget = 200.0;       // mm
  double fixture_allowance = 20.0;    // mm added to 2 L cos(theta)
  bool require_non_bistable_at_travel = false;
  MaterialModel material;
  int curve_samples = kDefaultCurveSamples;

  void validate() const;
  bool operator==(const DesignSpec&) const = default;
};

struct Violation {
  std::string name;
  double magnitude = 0.0;  // relative excess, > 0
  bool operator==(const Violation&) const = default;
};

struct Candidate {
  VBeamGeometry geometry;
  int n_beams = 1;
  double peak_force = 0.0;  // aggregate ring force, N
  double objective = 0.0;   // |peak - target| / target
  double root_stress = 0.0; // surrogate beam-root stress, MPa
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  double total_violation() const;
  bool operator==(const Candidate&) const = default;
};

/// Ranking order: feasible before infeasible; feasible by objective,
/// infeasible by total violation; ties by (L, T, theta, W, n_beams).
bool ranks_before(const Candidate& a, const Candidate& b);

/// Strict improvement ignoring the lexicographic tie-break.
bool strictly_better(const Candidate& a, const Candidate& b);

/// Throws ValidationError for invalid geometry or parameters outside bounds.
Candidate evaluate_candidate(const DesignSpec& spec, const VBeamGeometry& geom, int n_beams);

struct GridDensity {
  int length_L = 5;
  int thickness_T = 5;
  int width_W = 5;
  int tilt_theta = 5;
  int n_beams = 3;
  bool operator==(const GridDensity&) const = default;
};

inline constexpr std::uint64_t kDefaultGridCap = 1'000'000;

class GridCapExceeded : public ValidationError {
 public:
  GridCapExceeded(std::uint64_t required, std::uint64_t cap);
  std::uint64_t required;
};

/// Evenly spaced axis values; a single point sits at the range midpoint.
std::vector<double> grid_axis(const ParamRange& range, int count);
std::vector<int> grid_axis(const BeamCountRange& range, int count);

struct GridResult {
  std::vector<Candidate> ranked;
  std::uint64_t grid_points = 0;
  std::uint64_t skipped_invalid = 0;  // e.g. T >= L combinations
};

/// Exhaustive evaluation, parallel over grid points with an ordered merge.
GridResult grid_search(const DesignSpec& spec, const GridDensity& density,
                       std::uint64_t cap = kDefaultGridCap);

struct RefineResult {
  Candidate best;
  int evaluations = 0;
  bool exhausted = false;
};

/// Coordinate pattern search polling (L, T, W, theta, n_beams) in that order,
/// halving the continuous steps when a full poll fails. Never returns a
/// candidate ranked worse than `start`.
RefineResult refine(const DesignSpec& spec, const Candidate& start, int max_evals);

/// Writes `rank,L_mm,T_mm,W_mm,theta_deg,n_beams,peak_force_N,objective,violations`.
void write_candidates_csv(const std::vector<Candidate>& ranked, const std::string& destination);

namespace serial {
GridResult grid_search(const DesignSpec& spec, const GridDensity& density,
                       std::uint64_t cap = kDefaultGridCap);
}  // namespace serial

}  // namespace graspsynth
