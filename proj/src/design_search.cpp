#include "graspsynth/design_search.hpp"

#include <array>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <tuple>

#include "graspsynth/mechanism.hpp"
#include "graspsynth/parallel.hpp"

namespace graspsynth {

namespace {

void check_range(const ParamRange& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max)
    throw ValidationError(std::string("design bounds: ") + name + " must satisfy min <= max");
}

auto tie_key(const Candidate& c) {
  return std::make_tuple(c.geometry.length_L, c.geometry.thickness_T, c.geometry.tilt_theta,
                         c.geometry.width_W, c.n_beams);
}

}  // namespace

void DesignSpec::validate() const {
  if (!(target_force > 0.0)) throw ValidationError("design: target_force must be > 0");
  if (!(target_travel > 0.0)) throw ValidationError("design: target_travel must be > 0");
  check_range(bounds.length_L, "length_L");
  check_range(bounds.thickness_T, "thickness_T");
  check_range(bounds.width_W, "width_W");
  check_range(bounds.tilt_theta, "tilt_theta");
  if (bounds.n_beams.min < 1 || bounds.n_beams.min > bounds.n_beams.max)
    throw ValidationError("design bounds: n_beams must satisfy 1 <= min <= max");
  if (!(stress_limit > 0.0)) throw ValidationError("design: stress_limit must be > 0");
  if (!(length_budget > 0.0)) throw ValidationError("design: length_budget must be > 0");
  if (!(fixture_allowance >= 0.0)) throw ValidationError("design: fixture_allowance must be >= 0");
  if (curve_samples < 2) throw ValidationError("design: curve_samples must be >= 2");
  material.validate();
}

double Candidate::total_violation() const {
  double total = 0.0;
  for (const auto& v : violations) total += v.magnitude;
  return total;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) {
    if (a.objective != b.objective) return a.objective < b.objective;
  } else {
    const double va = a.total_violation();
    const double vb = b.total_violation();
    if (va != vb) return va < vb;
  }
  return tie_key(a) < tie_key(b);
}

bool strictly_better(const Candidate& a, const Candidate& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) return a.objective < b.objective;
  return a.total_violation() < b.total_violation();
}

Candidate evaluate_candidate(const DesignSpec& spec, const VBeamGeometry& geom, int n_beams) {
  spec.validate();
  geom.validate();
  const auto& b = spec.bounds;
  if (!b.length_L.contains(geom.length_L)) throw ValidationError("candidate: length_L outside bounds");
  if (!b.thickness_T.contains(geom.thickness_T))
    throw ValidationError("candidate: thickness_T outside bounds");
  if (!b.width_W.contains(geom.width_W)) throw ValidationError("candidate: width_W outside bounds");
  if (!b.tilt_theta.contains(geom.tilt_theta))
    throw ValidationError("candidate: tilt_theta outside bounds");
  if (n_beams < b.n_beams.min || n_beams > b.n_beams.max)
    throw ValidationError("candidate: n_beams outside bounds");

  const auto curve = serial::force_curve(geom, spec.material, spec.target_travel, spec.curve_samples);
  const auto ring = aggregate_ring_force(curve, n_beams);

  Candidate c;
  c.geometry = geom;
  c.n_beams = n_beams;
  c.peak_force = peak_force(ring).force;
  c.objective = std::abs(c.peak_force - spec.target_force) / spec.target_force;

  // Root-stress surrogate: guided-end transverse load, moment F_o L / 2.
  double max_fo = 0.0;
  for (const auto& s : curve.samples()) max_fo = std::max(max_fo, std::abs(s.f_o.value_or(0.0)));
  const double transverse = max_fo * 4.0 * spec.material.youngs_modulus_E * geom.second_moment() /
                            (geom.length_L * geom.length_L);
  c.root_stress = cantilever_stress(transverse * geom.length_L / 2.0,
                                    CantileverSection{geom.width_W, geom.thickness_T, geom.length_L});
  if (c.root_stress > spec.stress_limit)
    c.violations.push_back({"stress", (c.root_stress - spec.stress_limit) / spec.stress_limit});

  const double footprint = 2.0 * geom.length_L * std::cos(geom.tilt_theta) + spec.fixture_allowance;
  if (footprint > spec.length_budget)
    c.violations.push_back({"length", (footprint - spec.length_budget) / spec.length_budget});

  if (spec.require_non_bistable_at_travel) {
    const auto margin = bistability_margin(geom, spec.target_travel);
    if (margin.satisfied) c.violations.push_back({"bistable_at_travel", std::max(margin.d1, 1e-12)});
  }
  return c;
}

GridCapExceeded::GridCapExceeded(std::uint64_t required_points, std::uint64_t cap)
    : ValidationError("grid search: " + std::to_string(required_points) +
                      " points exceed the cap of " + std::to_string(cap) +
                      "; raise the cap to at least " + std::to_string(required_points)),
      required(required_points) {}

std::vector<double> grid_axis(const ParamRange& range, int count) {
  if (count < 1) throw ValidationError("grid: per-parameter counts must be >= 1");
  if (count == 1 || range.min == range.max) return {0.5 * (range.min + range.max)};
  std::vector<double> v;
  for (int i = 0; i < count; ++i) {
    v.push_back(range.min + (range.max - range.min) * static_cast<double>(i) / (count - 1));
  }
  v.back() = range.max;
  return v;
}

std::vector<int> grid_axis(const BeamCountRange& range, int count) {
  if (count < 1) throw ValidationError("grid: per-parameter counts must be >= 1");
  if (count == 1) return {(range.min + range.max) / 2};
  std::vector<int> v;
  for (int i = 0; i < count; ++i) {
    const double x = range.min + (range.max - range.min) * static_cast<double>(i) / (count - 1);
    const int n = static_cast<int>(std::lround(x));
    if (v.empty() || v.back() != n) v.push_back(n);
  }
  return v;
}

namespace {

struct Grid {
  std::vector<double> L, T, W, theta;
  std::vector<int> n;
  std::uint64_t size() const {
    return static_cast<std::uint64_t>(L.size()) * T.size() * W.size() * theta.size() * n.size();
  }
  std::pair<VBeamGeometry, int> at(std::uint64_t idx) const {
    const std::size_t in = idx % n.size();
    idx /= n.size();
    const std::size_t ith = idx % theta.size();
    idx /= theta.size();
    const std::size_t iw = idx % W.size();
    idx /= W.size();
    const std::size_t it = idx % T.size();
    idx /= T.size();
    return {VBeamGeometry{L[idx], T[it], W[iw], theta[ith]}, n[in]};
  }
};

Grid make_grid(const DesignSpec& spec, const GridDensity& d, std::uint64_t cap) {
  spec.validate();
  Grid g{grid_axis(spec.bounds.length_L, d.length_L), grid_axis(spec.bounds.thickness_T, d.thickness_T),
         grid_axis(spec.bounds.width_W, d.width_W), grid_axis(spec.bounds.tilt_theta, d.tilt_theta),
         grid_axis(spec.bounds.n_beams, d.n_beams)};
  if (g.size() > cap) throw GridCapExceeded(g.size(), cap);
  return g;
}

// Evaluates one grid point; geometry the model rejects (e.g. T >= L) yields nothing.
std::optional<Candidate> evaluate_point(const DesignSpec& spec, const Grid& g, std::uint64_t idx) {
  const auto [geom, n] = g.at(idx);
  try {
    geom.validate();
  } catch (const ValidationError&) {
    return std::nullopt;
  }
  return evaluate_candidate(spec, geom, n);
}

GridResult finish(std::vector<std::optional<Candidate>>&& slots) {
  GridResult out;
  out.grid_points = slots.size();
  for (auto& s : slots) {
    if (s) {
      out.ranked.push_back(std::move(*s));
    } else {
      ++out.skipped_invalid;
    }
  }
  std::sort(out.ranked.begin(), out.ranked.end(), ranks_before);
  return out;
}

}  // namespace

GridResult grid_search(const DesignSpec& spec, const GridDensity& density, std::uint64_t cap) {
  const Grid g = make_grid(spec, density, cap);
  const auto total = static_cast<std::int64_t>(g.size());
  std::vector<std::optional<Candidate>> slots(static_cast<std::size_t>(total));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16) num_threads(parallel::worker_threads())
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      slots[static_cast<std::size_t>(i)] = evaluate_point(spec, g, static_cast<std::uint64_t>(i));
    } catch (...) {
#pragma omp critical(graspsynth_grid_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finish(std::move(slots));
}

namespace serial {

GridResult grid_search(const DesignSpec& spec, const GridDensity& density, std::uint64_t cap) {
  const Grid g = make_grid(spec, density, cap);
  std::vector<std::optional<Candidate>> slots;
  slots.reserve(static_cast<std::size_t>(g.size()));
  for (std::uint64_t i = 0; i < g.size(); ++i) slots.push_back(evaluate_point(spec, g, i));
  return finish(std::move(slots));
}

}  // namespace serial

RefineResult refine(const DesignSpec& spec, const Candidate& start, int max_evals) {
  spec.validate();
  const auto& b = spec.bounds;
  const std::array<ParamRange, 4> ranges{b.length_L, b.thickness_T, b.width_W, b.tilt_theta};
  auto get = [](const VBeamGeometry& g, std::size_t k) {
    switch (k) {
      case 0: return g.length_L;
      case 1: return g.thickness_T;
      case 2: return g.width_W;
      default: return g.tilt_theta;
    }
  };
  auto set = [](VBeamGeometry& g, std::size_t k, double v) {
    switch (k) {
      case 0: g.length_L = v; break;
      case 1: g.thickness_T = v; break;
      case 2: g.width_W = v; break;
      default: g.tilt_theta = v; break;
    }
  };
  for (std::size_t k = 0; k < 4; ++k) {
    if (!ranges[k].contains(get(start.geometry, k)))
      throw ValidationError("refine: start candidate lies outside the design bounds");
  }
  if (start.n_beams < b.n_beams.min || start.n_beams > b.n_beams.max)
    throw ValidationError("refine: start n_beams lies outside the design bounds");

  RefineResult result{start, 0, false};
  std::array<double, 4> step{};
  std::array<double, 4> min_step{};
  bool pollable = b.n_beams.min < b.n_beams.max;
  for (std::size_t k = 0; k < 4; ++k) {
    const double width = ranges[k].max - ranges[k].min;
    step[k] = width / 4.0;
    min_step[k] = 1e-9 * std::max(width, 1e-300);
    pollable = pollable || width > 0.0;
  }
  if (!pollable) return result;

  // Returns true when a trial improved the incumbent.
  auto try_point = [&](const VBeamGeometry& g, int n) {
    ++result.evaluations;
    try {
      Candidate c = evaluate_candidate(spec, g, n);
      if (strictly_better(c, result.best)) {
        result.best = std::move(c);
        return true;
      }
    } catch (const ValidationError&) {
    }
    return false;
  };

  while (true) {
    bool improved = false;
    bool active = false;
    for (std::size_t k = 0; k < 4 && !improved; ++k) {
      if (step[k] < min_step[k] || ranges[k].max == ranges[k].min) continue;
      active = true;
      for (double dir : {1.0, -1.0}) {
        if (result.evaluations >= max_evals) {
          result.exhausted = true;
          return result;
        }
        const double current = get(result.best.geometry, k);
        const double v = std::clamp(current + dir * step[k], ranges[k].min, ranges[k].max);
        if (v == current) continue;
        VBeamGeometry g = result.best.geometry;
        set(g, k, v);
        if (try_point(g, result.best.n_beams)) {
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (int dir : {1, -1}) {
        const int n = result.best.n_beams + dir;
        if (n < b.n_beams.min || n > b.n_beams.max) continue;
        if (result.evaluations >= max_evals) {
          result.exhausted = true;
          return result;
        }
        if (try_point(result.best.geometry, n)) {
          improved = true;
          break;
        }
      }
    }
    if (improved) continue;
    if (!active) return result;
    for (auto& s : step) s *= 0.5;
  }
}

void write_candidates_csv(const std::vector<Candidate>& ranked, const std::string& destination) {
  std::ofstream os(destination, std::ios::binary);
  if (!os) throw IoError("cannot open " + destination + " for writing");
  os << "rank,L_mm,T_mm,W_mm,theta_deg,n_beams,peak_force_N,objective,violations\n";
  char buf[512];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& c = ranked[i];
    std::string violations;
    for (const auto& v : c.violations) {
      if (!violations.empty()) violations += ';';
      char vb[96];
      std::snprintf(vb, sizeof vb, "%s=%.9g", v.name.c_str(), v.magnitude);
      violations += vb;
    }
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,", i + 1,
                  c.geometry.length_L, c.geometry.thickness_T, c.geometry.width_W,
                  rad_to_deg(c.geometry.tilt_theta), c.n_beams, c.peak_force, c.objective);
    os << buf << violations << '\n';
  }
  if (!os) throw IoError("write failed for " + destination);
}

}  // namespace graspsynth
