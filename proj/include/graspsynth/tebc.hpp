#pragma once

// Closed-form two-element beam constraint (TEBC) model of a symmetric,
// parallel-guided double V-beam. Units are mm / N / MPa throughout; angles
// are radians internally.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graspsynth {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Tilted flexure dimensions. `thickness_T` is in-plane, `width_W` out-of-plane.
struct VBeamGeometry {
  double length_L = 0.0;
  double thickness_T = 0.0;
  double width_W = 0.0;
  double tilt_theta = 0.0;  // radians

  static VBeamGeometry from_degrees(double length, double thickness, double width,
                                    double tilt_deg);

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  /// Area moment of inertia W*T^3/12 about the out-of-plane axis.
  double second_moment() const { return width_W * thickness_T * thickness_T * thickness_T / 12.0; }
  double area() const { return width_W * thickness_T; }

  bool operator==(const VBeamGeometry&) const = default;
};

struct MaterialModel {
  double youngs_modulus_E = 1800.0;  // MPa
  double poisson_ratio = 0.3;        // carried for the FE oracle only

  void validate() const;
  bool operator==(const MaterialModel&) const = default;
};

struct NormalizedDeflection {
  double x_o = 0.0;
  double y_o = 0.0;
  double t = 0.0;
  double delta_y = 0.0;  // mm
};

enum class Branch { Bistable, Monostable };

std::string_view to_string(Branch branch);

struct BeamLoadState {
  double f_o = 0.0;
  double p_o = 0.0;
  // No closed-form expression for the end moment exists in the model.
  std::optional<double> m_o;
  Branch branch = Branch::Monostable;
  double d1_value = 0.0;
};

/// Coefficients of k1 p^3 + k2 p^2 + k3 p + k4 = 0 and the Cardano pieces.
/// `c2` is NaN when the cubic has three real roots (the real-radical form
/// does not exist there); `p1` is the Cardano root when `c2` exists.
struct MonostableIntermediates {
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
  double c1 = 0.0, c2 = 0.0, p1 = 0.0;

  static MonostableIntermediates from_deflection(const NormalizedDeflection& nd);

  double cubic(double p) const { return ((k1 * p + k2) * p + k3) * p + k4; }
  double residual_bound() const;
};

struct BistabilityMargin {
  double d1 = 0.0;
  bool satisfied = false;
};

NormalizedDeflection normalize_deflection(const VBeamGeometry& geom, double delta_y);

BistabilityMargin bistability_margin(const VBeamGeometry& geom, double delta_y);

/// Travel at which d1 changes sign; d1 is affine in travel. Empty when the
/// slope is non-positive (d1 < 0 for every travel).
std::optional<double> bistability_crossover(const VBeamGeometry& geom);

/// All real roots of the cubic, ascending, each Newton-polished.
std::vector<double> real_cubic_roots(const MonostableIntermediates& inter);

/// Real root nearest `previous` (the continuation rule). With a single real
/// root the hint is irrelevant. Throws NumericalError when the residual bound
/// fails; warns when the Cardano radical form disagrees by > 1e-6 relative.
double solve_monostable_cubic(const MonostableIntermediates& inter, double previous = 0.0);

BeamLoadState branch_loads(const VBeamGeometry& geom, double delta_y);

/// Force to displace the symmetric double V-beam shuttle by `delta_y`.
double actuation_force(const VBeamGeometry& geom, const MaterialModel& mat, double delta_y);

struct CurveSample {
  double delta_y = 0.0;  // mm
  double force = 0.0;    // N
  std::optional<Branch> branch;
  std::optional<double> f_o;
  std::optional<double> p_o;

  bool operator==(const CurveSample&) const = default;
};

struct CurveProvenance {
  std::string source;  // "tebc", "fe", ...
  std::optional<VBeamGeometry> geometry;
  std::optional<MaterialModel> material;
  int beams_aggregated = 0;  // 0: raw double-beam force

  bool operator==(const CurveProvenance&) const = default;
};

/// Immutable sampled force/travel path. Samples are strictly increasing in
/// travel and start above zero.
class ForceDisplacementCurve {
 public:
  ForceDisplacementCurve(std::vector<CurveSample> samples, CurveProvenance provenance);

  std::span<const CurveSample> samples() const { return samples_; }
  const CurveProvenance& provenance() const { return provenance_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  bool operator==(const ForceDisplacementCurve&) const = default;

 private:
  std::vector<CurveSample> samples_;
  CurveProvenance provenance_;
};

inline constexpr int kDefaultCurveSamples = 500;

/// Uniform samples at travel_max * i / n_samples, i = 1..n_samples.
/// Parallel over samples; bit-identical to serial::force_curve.
ForceDisplacementCurve force_curve(const VBeamGeometry& geom, const MaterialModel& mat,
                                   double travel_max, int n_samples = kDefaultCurveSamples);

struct PeakForce {
  double delta_y = 0.0;
  double force = 0.0;
};

/// Maximal force sample; ties go to the smaller travel.
PeakForce peak_force(const ForceDisplacementCurve& curve);

/// First sample tagged Bistable, if any.
std::optional<double> first_bistable_travel(const ForceDisplacementCurve& curve);

namespace serial {
ForceDisplacementCurve force_curve(const VBeamGeometry& geom, const MaterialModel& mat,
                                   double travel_max, int n_samples = kDefaultCurveSamples);
}  // namespace serial

}  // namespace graspsynth
