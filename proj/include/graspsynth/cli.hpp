#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "graspsynth/config.hpp"
#include "graspsynth/fe_oracle.hpp"

namespace graspsynth::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kConfigError = 2, kNumericalFailure = 3 };

/// `delta_y_mm,branch,f_o,p_o,force_single_N,force_ring_N`; forces derive from
/// the double-beam curve (single = F/2, ring = F/2 * n_beams).
void write_curve_csv(const ForceDisplacementCurve& double_beam_curve, int n_beams,
                     const std::string& destination);

/// `delta_y_mm,d1,satisfied`.
void write_d1_csv(const VBeamGeometry& geom, double travel_max, int n_samples,
                  const std::string& destination);

/// `ring_mm,shuttle_mm,ring_force_N,jaw_opening_mm,latch,jaw_root_stress_MPa`.
void write_grasper_csv(const MechanismConfig& config, int n_points, const std::string& destination);

struct VerifyOutcome {
  fe::CurveComparison halved;  // closed-form single beam (F/2) vs FE single beam
  fe::CurveComparison full;    // closed-form F vs FE single beam, diagnostic
  bool single_peak_tebc = false;
  bool single_peak_fe = false;
  bool passed = false;
};

/// Thresholds applied by `verify`.
inline constexpr double kVerifyRmsRel = 0.20;
inline constexpr double kVerifyPeakLocation = 0.5;  // mm

/// True when the force rises to one maximum and then declines, ending below
/// `near_zero_fraction` of the peak.
bool single_peak_then_decline(const ForceDisplacementCurve& curve, double near_zero_fraction = 0.25);

VerifyOutcome verify_against_fe(const RunConfig& config, fe::EquilibriumPath* path_out = nullptr);

/// `comparison,rms_rel,max_rel,peak_force_rel_diff,peak_location_diff_mm,points,pass`.
void write_verify_report(const VerifyOutcome& outcome, const std::string& destination);

/// Entry point shared by the executable and tests. `args` excludes argv[0].
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graspsynth::cli
