#pragma once

// Whole-grasper model built on the closed-form beam chain: multi-beam force
// superposition, series-compliance shuttle transfer, the notch latch, jaw
// kinematics and cantilever stress.

#include <variant>
#include <vector>

#include "graspsynth/tebc.hpp"

namespace graspsynth {

struct CantileverSection {
  double out_of_plane_b = 3.0;  // mm
  double in_plane_h = 1.0;      // mm
  double jaw_length = 30.0;     // mm

  void validate() const;
  bool operator==(const CantileverSection&) const = default;
};

struct JawAnchor {
  double trigger_disp = 0.0;  // mm
  double jaw_disp = 0.0;      // mm
  bool operator==(const JawAnchor&) const = default;
};

/// FE-reported jaw opening during trigger retraction (ring pull of 3.2, 6.4, 8 mm).
std::vector<JawAnchor> default_jaw_calibration();

struct MechanismConfig {
  VBeamGeometry beam_geometry;
  int n_beams = 12;
  MaterialModel material;
  double latch_travel = 8.0;  // ring displacement at which the notch engages
  std::vector<JawAnchor> jaw_calibration = default_jaw_calibration();  // (0,0) implicit
  double series_stiffness_ks = 10.0;  // N/mm
  CantileverSection jaw_section;
  double overall_length_budget = 200.0;
  double latch_ramp_gain = 1.5;        // force multiplier reached at latch_travel
  double latch_ramp_fraction = 0.05;   // ramp spans the final fraction of latch_travel

  void validate() const;
  double max_ring_travel() const;  // last calibration anchor
  bool operator==(const MechanismConfig&) const = default;
};

enum class LatchPhase { Unstressed, StressedLatched };

std::string_view to_string(LatchPhase phase);

struct LatchState {
  LatchPhase phase = LatchPhase::Unstressed;
  double ring_displacement = 0.0;
  bool operator==(const LatchState&) const = default;
};

struct PullRing {
  double displacement = 0.0;
};
struct PressTrigger {};
using LatchEvent = std::variant<PullRing, PressTrigger>;

struct GrasperResponse {
  double ring_force = 0.0;            // N
  double shuttle_displacement = 0.0;  // mm
  double jaw_opening = 0.0;           // mm
  LatchState latch;
  double jaw_root_stress = 0.0;       // MPa
};

/// Single-beam force is half the double-beam value; N beams superpose linearly.
ForceDisplacementCurve aggregate_ring_force(const ForceDisplacementCurve& double_beam_curve,
                                            int n_beams);

/// Half of the closed-form double V-beam force.
double single_beam_force(const VBeamGeometry& geom, const MaterialModel& mat, double delta_y);

/// Central difference (step 1e-3 mm, one-sided at the origin) of the single-beam force.
double single_beam_tangent_stiffness(const VBeamGeometry& geom, const MaterialModel& mat,
                                     double delta_y);

/// k_s / (k_s + n * max(k_b, 0)).
double shuttle_transfer_ratio(const MechanismConfig& config, double delta_y);

/// Integrates d(shuttle)/d(ring) = shuttle_transfer_ratio(shuttle) from zero.
double shuttle_displacement(const MechanismConfig& config, double ring_disp);

/// Piecewise-linear through (0,0) and the anchors. Throws RangeError outside.
double jaw_opening(const MechanismConfig& config, double trigger_disp);

/// 6 M / (b h^2).
double cantilever_stress(double bending_moment, const CantileverSection& section);

LatchState latch_step(const LatchState& state, const LatchEvent& event, double latch_travel);

/// Multiplier 1 -> latch_ramp_gain (smoothstep) over the final ramp fraction of latch_travel.
double latch_ramp_factor(const MechanismConfig& config, double ring_disp);

GrasperResponse grasper_response(const MechanismConfig& config, double ring_disp);

}  // namespace graspsynth
