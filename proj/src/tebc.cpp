#include "graspsynth/tebc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "graspsynth/errors.hpp"
#include "graspsynth/parallel.hpp"

namespace graspsynth {

namespace {

// Bistable-branch constants and D1 coefficients.
constexpr double kBistableForceSlope = -4.8618;
constexpr double kBistableAxialLoad = -9.8837;
constexpr double kD1Cos = -4.652;
constexpr double kD1Sin = 6.514;
constexpr double kD1Thickness = -21.46;

constexpr int kContinuationSteps = 256;
constexpr double kDenominatorGuard = 1e-9;
constexpr double kCardanoWarnTolerance = 1e-6;

std::string fmt_value(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

void require_travel(double delta_y) {
  if (!(delta_y >= 0.0) || !std::isfinite(delta_y)) {
    throw ValidationError("travel delta_y must be finite and >= 0 (got " + fmt_value(delta_y) + ")");
  }
}

// One Newton step on the full cubic, kept only if it reduces the residual.
double polish(const MonostableIntermediates& c, double p) {
  for (int i = 0; i < 3; ++i) {
    const double f = c.cubic(p);
    const double df = (3.0 * c.k1 * p + 2.0 * c.k2) * p + c.k3;
    if (f == 0.0 || df == 0.0) break;
    const double next = p - f / df;
    if (!(std::abs(c.cubic(next)) < std::abs(f))) break;
    p = next;
  }
  return p;
}

// Radical (Cardano) root. Valid only when the radicand is non-negative.
// The sign under the square root is chosen to avoid cancellation; both
// choices give the same root.
double cardano_root(double k1, double k2, double c1, double delta, double radicand) {
  const double cbrt2 = std::cbrt(2.0);
  const double s = std::sqrt(radicand);
  const double inner = delta >= 0.0 ? delta + s : delta - s;
  const double c2 = std::cbrt(inner);
  if (c2 == 0.0) return -k2 / (3.0 * k1);
  return -k2 / (3.0 * k1) - cbrt2 * c1 / (3.0 * k1 * c2) + c2 / (3.0 * cbrt2 * k1);
}

double monostable_transverse_load(double y_o, double p) {
  const double denom = 4.0 + (2.0 / 15.0) * p - (11.0 / 6300.0) * p * p;
  if (std::abs(denom) < kDenominatorGuard) {
    throw NumericalError("transverse-load expression is singular at p_o = " + fmt_value(p));
  }
  const double a = 12.0 + (6.0 / 5.0) * p + p * p / 700.0;
  const double b = -6.0 - p / 10.0 + p * p / 1400.0;
  return 0.5 * y_o * (a - b * b / denom);
}

}  // namespace

VBeamGeometry VBeamGeometry::from_degrees(double length, double thickness, double width,
                                          double tilt_deg) {
  return VBeamGeometry{length, thickness, width, deg_to_rad(tilt_deg)};
}

void VBeamGeometry::validate() const {
  if (!(length_L > 0.0) || !std::isfinite(length_L))
    throw ValidationError("geometry: length_L must be > 0 (got " + fmt_value(length_L) + ")");
  if (!(thickness_T > 0.0) || !std::isfinite(thickness_T))
    throw ValidationError("geometry: thickness_T must be > 0 (got " + fmt_value(thickness_T) + ")");
  if (!(width_W > 0.0) || !std::isfinite(width_W))
    throw ValidationError("geometry: width_W must be > 0 (got " + fmt_value(width_W) + ")");
  if (!(tilt_theta >= 0.0 && tilt_theta < kPi / 2.0))
    throw ValidationError("geometry: tilt_theta must lie in [0, pi/2) (got " + fmt_value(tilt_theta) +
                          " rad)");
  if (!(thickness_T < length_L))
    throw ValidationError("geometry: slender beam requires thickness_T < length_L (T=" +
                          fmt_value(thickness_T) + ", L=" + fmt_value(length_L) + ")");
}

void MaterialModel::validate() const {
  if (!(youngs_modulus_E > 0.0) || !std::isfinite(youngs_modulus_E))
    throw ValidationError("material: youngs_modulus_E must be > 0 (got " +
                          fmt_value(youngs_modulus_E) + ")");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    throw ValidationError("material: poisson_ratio must lie in [0, 0.5) (got " +
                          fmt_value(poisson_ratio) + ")");
}

std::string_view to_string(Branch branch) {
  return branch == Branch::Bistable ? "Bistable" : "Monostable";
}

MonostableIntermediates MonostableIntermediates::from_deflection(const NormalizedDeflection& nd) {
  const double t2 = nd.t * nd.t;
  const double y2 = nd.y_o * nd.y_o;
  const double x = nd.x_o;
  MonostableIntermediates m;
  m.k1 = 4.0 * t2 / 675.0 + y2 / 42000.0;
  m.k2 = 16.0 * t2 / 45.0 - 17.0 * y2 / 2100.0 - 8.0 * x / 225.0;
  m.k3 = 16.0 * t2 / 3.0 - 96.0 * y2 / 175.0 - 32.0 * x / 15.0;
  m.k4 = -48.0 * y2 / 5.0 - 32.0 * x;
  m.c1 = -m.k2 * m.k2 + 3.0 * m.k1 * m.k3;
  const double delta = -2.0 * m.k2 * m.k2 * m.k2 + 9.0 * m.k1 * m.k2 * m.k3 - 27.0 * m.k1 * m.k1 * m.k4;
  const double radicand = 4.0 * m.c1 * m.c1 * m.c1 + delta * delta;
  if (radicand >= 0.0 && m.k1 > 0.0) {
    m.c2 = std::cbrt(delta + std::sqrt(radicand));
    m.p1 = cardano_root(m.k1, m.k2, m.c1, delta, radicand);
  } else {
    m.c2 = std::numeric_limits<double>::quiet_NaN();
    m.p1 = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

double MonostableIntermediates::residual_bound() const {
  return 1e-9 * std::max(1.0, std::abs(k4));
}

NormalizedDeflection normalize_deflection(const VBeamGeometry& geom, double delta_y) {
  geom.validate();
  require_travel(delta_y);
  NormalizedDeflection nd;
  nd.x_o = -2.0 * delta_y * std::sin(geom.tilt_theta) / geom.length_L;
  nd.y_o = -2.0 * delta_y * std::cos(geom.tilt_theta) / geom.length_L;
  nd.t = 2.0 * geom.thickness_T / geom.length_L;
  nd.delta_y = delta_y;
  return nd;
}

BistabilityMargin bistability_margin(const VBeamGeometry& geom, double delta_y) {
  geom.validate();
  require_travel(delta_y);
  const double L = geom.length_L;
  const double c = std::cos(geom.tilt_theta);
  const double s = std::sin(geom.tilt_theta);
  const double d1 = kD1Cos * c * c / (L * L) * delta_y + kD1Sin * s / L * delta_y +
                    kD1Thickness * geom.thickness_T * geom.thickness_T / (L * L);
  return {d1, d1 >= 0.0};
}

std::optional<double> bistability_crossover(const VBeamGeometry& geom) {
  geom.validate();
  const double L = geom.length_L;
  const double c = std::cos(geom.tilt_theta);
  const double s = std::sin(geom.tilt_theta);
  const double slope = kD1Cos * c * c / (L * L) + kD1Sin * s / L;
  if (!(slope > 0.0)) return std::nullopt;
  return -kD1Thickness * geom.thickness_T * geom.thickness_T / (L * L) / slope;
}

std::vector<double> real_cubic_roots(const MonostableIntermediates& m) {
  if (!(m.k1 > 0.0)) throw ValidationError("cubic: leading coefficient k1 must be > 0");
  const double a = m.k2 / m.k1;
  const double b = m.k3 / m.k1;
  const double c = m.k4 / m.k1;
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double q3 = q * q * q;
  std::vector<double> roots;
  if (r * r < q3) {
    const double ratio = std::clamp(r / std::sqrt(q3), -1.0, 1.0);
    const double phi = std::acos(ratio);
    const double scale = -2.0 * std::sqrt(q);
    roots = {scale * std::cos(phi / 3.0) - a / 3.0,
             scale * std::cos((phi + 2.0 * kPi) / 3.0) - a / 3.0,
             scale * std::cos((phi - 2.0 * kPi) / 3.0) - a / 3.0};
  } else {
    double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double small = big != 0.0 ? q / big : 0.0;
    roots = {big + small - a / 3.0};
  }
  for (double& p : roots) p = polish(m, p);
  std::sort(roots.begin(), roots.end());
  return roots;
}

double solve_monostable_cubic(const MonostableIntermediates& inter, double previous) {
  const auto roots = real_cubic_roots(inter);
  double best = roots.front();
  for (double p : roots) {
    if (std::abs(p - previous) < std::abs(best - previous)) best = p;
  }
  if (!(std::abs(inter.cubic(best)) < inter.residual_bound())) {
    throw NumericalError("cubic root residual " + fmt_value(inter.cubic(best)) +
                         " exceeds bound " + fmt_value(inter.residual_bound()) + " at p_o = " +
                         fmt_value(best));
  }
  if (roots.size() == 1 && std::isfinite(inter.p1)) {
    const double rel = std::abs(inter.p1 - best) / std::max(1.0, std::abs(best));
    if (rel > kCardanoWarnTolerance) {
      warn("Cardano radical root " + fmt_value(inter.p1) + " disagrees with polished root " +
           fmt_value(best));
    }
  }
  return best;
}

BeamLoadState branch_loads(const VBeamGeometry& geom, double delta_y) {
  const BistabilityMargin margin = bistability_margin(geom, delta_y);
  const NormalizedDeflection nd = normalize_deflection(geom, delta_y);
  BeamLoadState state;
  state.d1_value = margin.d1;
  if (margin.satisfied) {
    state.branch = Branch::Bistable;
    state.f_o = kBistableForceSlope * nd.y_o;
    state.p_o = kBistableAxialLoad;
    return state;
  }
  state.branch = Branch::Monostable;
  if (delta_y == 0.0) return state;

  const auto inter = MonostableIntermediates::from_deflection(nd);
  double p = 0.0;
  if (real_cubic_roots(inter).size() == 1) {
    p = solve_monostable_cubic(inter);
  } else {
    // Several real roots: follow the branch that starts at p = 0 for zero travel.
    for (int k = 1; k <= kContinuationSteps; ++k) {
      const double dy = delta_y * static_cast<double>(k) / kContinuationSteps;
      const auto step = MonostableIntermediates::from_deflection(normalize_deflection(geom, dy));
      p = solve_monostable_cubic(step, p);
    }
  }
  state.p_o = p;
  state.f_o = monostable_transverse_load(nd.y_o, p);
  return state;
}

double actuation_force(const VBeamGeometry& geom, const MaterialModel& mat, double delta_y) {
  mat.validate();
  const BeamLoadState s = branch_loads(geom, delta_y);
  const double scale = 4.0 * mat.youngs_modulus_E * geom.second_moment() /
                       (geom.length_L * geom.length_L);
  return -(scale * s.f_o * std::cos(geom.tilt_theta) + scale * s.p_o * std::sin(geom.tilt_theta));
}

ForceDisplacementCurve::ForceDisplacementCurve(std::vector<CurveSample> samples,
                                               CurveProvenance provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i].delta_y) || !std::isfinite(samples_[i].force))
      throw ValidationError("curve: non-finite sample at index " + std::to_string(i));
    if (i == 0 && !(samples_[i].delta_y > 0.0))
      throw ValidationError("curve: first sample must have delta_y > 0");
    if (i > 0 && !(samples_[i].delta_y > samples_[i - 1].delta_y))
      throw ValidationError("curve: delta_y must be strictly increasing (index " +
                            std::to_string(i) + ")");
  }
}

namespace {

void check_sampling(double travel_max, int n_samples) {
  if (!(travel_max > 0.0) || !std::isfinite(travel_max))
    throw ValidationError("sampling: travel_max must be > 0 (got " + fmt_value(travel_max) + ")");
  if (n_samples < 2)
    throw ValidationError("sampling: n_samples must be >= 2 (got " + std::to_string(n_samples) + ")");
}

CurveSample tebc_sample(const VBeamGeometry& geom, const MaterialModel& mat, double travel_max,
                        int i, int n_samples) {
  const double dy = travel_max * static_cast<double>(i) / static_cast<double>(n_samples);
  const BeamLoadState s = branch_loads(geom, dy);
  const double scale = 4.0 * mat.youngs_modulus_E * geom.second_moment() /
                       (geom.length_L * geom.length_L);
  const double f = -(scale * s.f_o * std::cos(geom.tilt_theta) +
                     scale * s.p_o * std::sin(geom.tilt_theta));
  return CurveSample{dy, f, s.branch, s.f_o, s.p_o};
}

CurveProvenance tebc_provenance(const VBeamGeometry& geom, const MaterialModel& mat) {
  return CurveProvenance{"tebc", geom, mat, 0};
}

}  // namespace

ForceDisplacementCurve force_curve(const VBeamGeometry& geom, const MaterialModel& mat,
                                   double travel_max, int n_samples) {
  geom.validate();
  mat.validate();
  check_sampling(travel_max, n_samples);
  std::vector<CurveSample> samples(static_cast<std::size_t>(n_samples));
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(parallel::worker_threads())
  for (int i = 1; i <= n_samples; ++i) {
    try {
      samples[static_cast<std::size_t>(i - 1)] = tebc_sample(geom, mat, travel_max, i, n_samples);
    } catch (...) {
#pragma omp critical(graspsynth_curve_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ForceDisplacementCurve(std::move(samples), tebc_provenance(geom, mat));
}

namespace serial {

ForceDisplacementCurve force_curve(const VBeamGeometry& geom, const MaterialModel& mat,
                                   double travel_max, int n_samples) {
  geom.validate();
  mat.validate();
  check_sampling(travel_max, n_samples);
  std::vector<CurveSample> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 1; i <= n_samples; ++i) samples.push_back(tebc_sample(geom, mat, travel_max, i, n_samples));
  return ForceDisplacementCurve(std::move(samples), tebc_provenance(geom, mat));
}

}  // namespace serial

PeakForce peak_force(const ForceDisplacementCurve& curve) {
  if (curve.empty()) throw ValidationError("peak_force: curve is empty");
  const auto samples = curve.samples();
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].force > samples[best].force) best = i;
  }
  return {samples[best].delta_y, samples[best].force};
}

std::optional<double> first_bistable_travel(const ForceDisplacementCurve& curve) {
  for (const auto& s : curve.samples()) {
    if (s.branch == Branch::Bistable) return s.delta_y;
  }
  return std::nullopt;
}

}  // namespace graspsynth
