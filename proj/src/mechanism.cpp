#include "graspsynth/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "graspsynth/errors.hpp"

namespace graspsynth {

namespace {

constexpr double kTangentStep = 1e-3;      // mm
constexpr double kShuttleIncrement = 0.01; // mm of ring travel per integration step

std::string num(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void CantileverSection::validate() const {
  if (!(out_of_plane_b > 0.0)) throw ValidationError("jaw_section: out_of_plane_b must be > 0");
  if (!(in_plane_h > 0.0)) throw ValidationError("jaw_section: in_plane_h must be > 0");
  if (!(jaw_length > 0.0)) throw ValidationError("jaw_section: jaw_length must be > 0");
}

std::vector<JawAnchor> default_jaw_calibration() {
  return {{3.2, 7.13}, {6.4, 15.99}, {8.0, 20.52}};
}

void MechanismConfig::validate() const {
  beam_geometry.validate();
  material.validate();
  jaw_section.validate();
  if (n_beams < 1) throw ValidationError("mechanism: n_beams must be >= 1");
  if (!(latch_travel > 0.0)) throw ValidationError("mechanism: latch_travel must be > 0");
  if (!(series_stiffness_ks > 0.0) || !std::isfinite(series_stiffness_ks))
    throw ValidationError("mechanism: series_stiffness_ks must be > 0");
  if (!(overall_length_budget > 0.0))
    throw ValidationError("mechanism: overall_length_budget must be > 0");
  if (!(latch_ramp_gain >= 1.0)) throw ValidationError("mechanism: latch_ramp_gain must be >= 1");
  if (!(latch_ramp_fraction > 0.0 && latch_ramp_fraction <= 1.0))
    throw ValidationError("mechanism: latch_ramp_fraction must lie in (0, 1]");
  if (jaw_calibration.empty())
    throw ValidationError("mechanism: jaw_calibration needs at least one anchor");
  double prev_t = 0.0;
  double prev_j = 0.0;
  for (const auto& a : jaw_calibration) {
    if (!(a.trigger_disp > prev_t) || !(a.jaw_disp > prev_j))
      throw ValidationError(
          "mechanism: jaw_calibration anchors must be strictly increasing in both coordinates "
          "starting after (0,0)");
    prev_t = a.trigger_disp;
    prev_j = a.jaw_disp;
  }
}

double MechanismConfig::max_ring_travel() const { return jaw_calibration.back().trigger_disp; }

std::string_view to_string(LatchPhase phase) {
  return phase == LatchPhase::Unstressed ? "Unstressed" : "StressedLatched";
}

ForceDisplacementCurve aggregate_ring_force(const ForceDisplacementCurve& double_beam_curve,
                                            int n_beams) {
  if (n_beams < 1) throw ValidationError("aggregate_ring_force: n_beams must be >= 1");
  if (double_beam_curve.empty()) throw ValidationError("aggregate_ring_force: curve is empty");
  std::vector<CurveSample> out(double_beam_curve.samples().begin(),
                               double_beam_curve.samples().end());
  for (auto& s : out) s.force = (s.force / 2.0) * n_beams;
  CurveProvenance prov = double_beam_curve.provenance();
  prov.beams_aggregated = n_beams;
  return ForceDisplacementCurve(std::move(out), std::move(prov));
}

double single_beam_force(const VBeamGeometry& geom, const MaterialModel& mat, double delta_y) {
  return actuation_force(geom, mat, delta_y) / 2.0;
}

double single_beam_tangent_stiffness(const VBeamGeometry& geom, const MaterialModel& mat,
                                     double delta_y) {
  const double lo = std::max(delta_y - kTangentStep, 0.0);
  const double hi = delta_y + kTangentStep;
  return (single_beam_force(geom, mat, hi) - single_beam_force(geom, mat, lo)) / (hi - lo);
}

double shuttle_transfer_ratio(const MechanismConfig& config, double delta_y) {
  config.validate();
  const double kb =
      single_beam_tangent_stiffness(config.beam_geometry, config.material, delta_y);
  if (!std::isfinite(kb))
    throw NumericalError("shuttle transfer: non-finite tangent stiffness at delta_y = " + num(delta_y));
  const double ks = config.series_stiffness_ks;
  return ks / (ks + config.n_beams * std::max(kb, 0.0));
}

double shuttle_displacement(const MechanismConfig& config, double ring_disp) {
  if (!(ring_disp >= 0.0)) throw ValidationError("shuttle: ring displacement must be >= 0");
  if (ring_disp == 0.0) return 0.0;
  const int steps = std::max(1, static_cast<int>(std::ceil(ring_disp / kShuttleIncrement)));
  const double h = ring_disp / steps;
  double s = 0.0;
  // Midpoint rule; the ratio is bounded in (0, 1], so s never exceeds the ring travel.
  for (int i = 0; i < steps; ++i) {
    const double half = s + 0.5 * h * shuttle_transfer_ratio(config, s);
    s += h * shuttle_transfer_ratio(config, half);
  }
  return s;
}

double jaw_opening(const MechanismConfig& config, double trigger_disp) {
  const auto& anchors = config.jaw_calibration;
  if (anchors.empty()) throw ValidationError("jaw_opening: no calibration anchors");
  const double span = anchors.back().trigger_disp;
  if (!(trigger_disp >= 0.0 && trigger_disp <= span)) {
    throw RangeError("jaw_opening: trigger displacement " + num(trigger_disp) +
                     " mm outside calibrated span [0, " + num(span) + "] mm");
  }
  double t0 = 0.0;
  double j0 = 0.0;
  for (const auto& a : anchors) {
    if (trigger_disp == a.trigger_disp) return a.jaw_disp;
    if (trigger_disp < a.trigger_disp) {
      const double u = (trigger_disp - t0) / (a.trigger_disp - t0);
      return j0 + u * (a.jaw_disp - j0);
    }
    t0 = a.trigger_disp;
    j0 = a.jaw_disp;
  }
  return anchors.back().jaw_disp;
}

double cantilever_stress(double bending_moment, const CantileverSection& section) {
  section.validate();
  const double b = section.out_of_plane_b;
  const double h = section.in_plane_h;
  return 6.0 * bending_moment / (b * h * h);
}

LatchState latch_step(const LatchState& state, const LatchEvent& event, double latch_travel) {
  if (!(latch_travel > 0.0)) throw ValidationError("latch: latch_travel must be > 0");
  return std::visit(
      overloaded{
          [&](const PullRing& pull) -> LatchState {
            if (!(pull.displacement >= 0.0))
              throw ValidationError("latch: ring displacement must be >= 0 (got " +
                                    num(pull.displacement) + ")");
            if (state.phase == LatchPhase::StressedLatched)
              return {LatchPhase::StressedLatched, std::max(pull.displacement, latch_travel)};
            if (pull.displacement >= latch_travel)
              return {LatchPhase::StressedLatched, pull.displacement};
            return {LatchPhase::Unstressed, pull.displacement};
          },
          [&](const PressTrigger&) -> LatchState {
            if (state.phase == LatchPhase::StressedLatched) return {LatchPhase::Unstressed, 0.0};
            return state;
          },
      },
      event);
}

double latch_ramp_factor(const MechanismConfig& config, double ring_disp) {
  const double start = (1.0 - config.latch_ramp_fraction) * config.latch_travel;
  const double width = config.latch_ramp_fraction * config.latch_travel;
  const double u = std::clamp((ring_disp - start) / width, 0.0, 1.0);
  const double smooth = u * u * (3.0 - 2.0 * u);
  return 1.0 + (config.latch_ramp_gain - 1.0) * smooth;
}

GrasperResponse grasper_response(const MechanismConfig& config, double ring_disp) {
  config.validate();
  if (!(ring_disp >= 0.0 && ring_disp <= config.max_ring_travel())) {
    throw RangeError("grasper_response: ring displacement " + num(ring_disp) +
                     " mm outside [0, " + num(config.max_ring_travel()) + "] mm");
  }
  GrasperResponse r;
  r.latch = latch_step(LatchState{}, PullRing{ring_disp}, config.latch_travel);
  if (ring_disp == 0.0) return r;

  r.shuttle_displacement = shuttle_displacement(config, ring_disp);
  r.ring_force = single_beam_force(config.beam_geometry, config.material, r.shuttle_displacement) *
                 config.n_beams * latch_ramp_factor(config, ring_disp);
  r.jaw_opening = jaw_opening(config, ring_disp);

  // Linear cantilever: tip force from tip deflection, then root moment.
  const auto& sec = config.jaw_section;
  const double inertia = sec.out_of_plane_b * std::pow(sec.in_plane_h, 3) / 12.0;
  const double tip_force = 3.0 * config.material.youngs_modulus_E * inertia * r.jaw_opening /
                           std::pow(sec.jaw_length, 3);
  r.jaw_root_stress = cantilever_stress(tip_force * sec.jaw_length, sec);
  return r;
}

}  // namespace graspsynth
