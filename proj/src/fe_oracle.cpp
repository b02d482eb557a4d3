#include "graspsynth/fe_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace graspsynth::fe {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

std::string num(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

int gdof(int node, int dof) { return node * kDofsPerNode + dof; }

struct Chord {
  double l0 = 0.0, l = 0.0, c = 0.0, s = 0.0, alpha = 0.0;
};

Chord chord(const FrameModel& m, const BeamElement& el, const Eigen::VectorXd& u) {
  const Node& a = m.nodes[static_cast<std::size_t>(el.node_i)];
  const Node& b = m.nodes[static_cast<std::size_t>(el.node_j)];
  const double dx0 = b.x - a.x;
  const double dy0 = b.y - a.y;
  const double dx = dx0 + u[gdof(el.node_j, Ux)] - u[gdof(el.node_i, Ux)];
  const double dy = dy0 + u[gdof(el.node_j, Uy)] - u[gdof(el.node_i, Uy)];
  Chord ch;
  ch.l0 = std::hypot(dx0, dy0);
  ch.l = std::hypot(dx, dy);
  ch.c = dx / ch.l;
  ch.s = dy / ch.l;
  const double c0 = dx0 / ch.l0;
  const double s0 = dy0 / ch.l0;
  ch.alpha = std::atan2(c0 * ch.s - s0 * ch.c, c0 * ch.c + s0 * ch.s);
  return ch;
}

}  // namespace

void FrameModel::validate() const {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw ValidationError("frame: at least two nodes required");
  if (fixed.size() != nodes.size()) throw ValidationError("frame: one constraint entry per node required");
  auto node_ok = [n](int i) { return i >= 0 && i < n; };
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& el = elements[e];
    if (!node_ok(el.node_i) || !node_ok(el.node_j) || el.node_i == el.node_j)
      throw ValidationError("frame: element " + std::to_string(e) + " references invalid nodes");
    const auto& a = nodes[static_cast<std::size_t>(el.node_i)];
    const auto& b = nodes[static_cast<std::size_t>(el.node_j)];
    if (!(std::hypot(b.x - a.x, b.y - a.y) > 0.0))
      throw ValidationError("frame: element " + std::to_string(e) + " has zero length");
    if (!(el.E > 0.0 && el.A > 0.0 && el.I > 0.0))
      throw ValidationError("frame: element " + std::to_string(e) + " needs E, A, I > 0");
  }
  for (const auto& sp : springs) {
    if (!node_ok(sp.node_i) || !node_ok(sp.node_j) || sp.node_i == sp.node_j)
      throw ValidationError("frame: spring references invalid nodes");
    if (!(sp.stiffness > 0.0)) throw ValidationError("frame: spring stiffness must be > 0");
  }
  for (const auto& p : prescribed) {
    if (!node_ok(p.node)) throw ValidationError("frame: prescribed DOF references invalid node");
    if (fixed[static_cast<std::size_t>(p.node)][static_cast<std::size_t>(p.dof)])
      throw ValidationError("frame: DOF cannot be both fixed and prescribed");
  }
  const bool anchored = std::any_of(fixed.begin(), fixed.end(), [](const auto& f) {
    return f[0] && f[1] && f[2];
  });
  if (!anchored) throw ValidationError("frame: at least one fully constrained node required");
}

ElementDeformation element_deformation(const FrameModel& model, const BeamElement& el,
                                       const Eigen::VectorXd& u) {
  const Chord ch = chord(model, el, u);
  ElementDeformation d;
  d.axial = (ch.l * ch.l - ch.l0 * ch.l0) / (ch.l + ch.l0);
  d.theta_i = u[gdof(el.node_i, Rz)] - ch.alpha;
  d.theta_j = u[gdof(el.node_j, Rz)] - ch.alpha;
  return d;
}

void element_response(const FrameModel& model, const BeamElement& el, const Eigen::VectorXd& u,
                      Vec6& force, Mat6* tangent) {
  const Chord ch = chord(model, el, u);
  const double axial = (ch.l * ch.l - ch.l0 * ch.l0) / (ch.l + ch.l0);
  const double th_i = u[gdof(el.node_i, Rz)] - ch.alpha;
  const double th_j = u[gdof(el.node_j, Rz)] - ch.alpha;
  const double ea = el.E * el.A / ch.l0;
  const double ei = el.E * el.I / ch.l0;
  const double n = ea * axial;
  const double m_i = ei * (4.0 * th_i + 2.0 * th_j);
  const double m_j = ei * (2.0 * th_i + 4.0 * th_j);

  Vec6 r;
  r << -ch.c, -ch.s, 0.0, ch.c, ch.s, 0.0;
  Vec6 z;
  z << ch.s, -ch.c, 0.0, -ch.s, ch.c, 0.0;
  Vec6 b_i = -z / ch.l;
  b_i[2] += 1.0;
  Vec6 b_j = -z / ch.l;
  b_j[5] += 1.0;

  force = r * n + b_i * m_i + b_j * m_j;
  if (tangent != nullptr) {
    Eigen::Matrix<double, 3, 6> b;
    b.row(0) = r.transpose();
    b.row(1) = b_i.transpose();
    b.row(2) = b_j.transpose();
    Eigen::Matrix3d kl;
    kl << ea, 0.0, 0.0, 0.0, 4.0 * ei, 2.0 * ei, 0.0, 2.0 * ei, 4.0 * ei;
    *tangent = b.transpose() * kl * b + (n / ch.l) * z * z.transpose() +
               ((m_i + m_j) / (ch.l * ch.l)) * (r * z.transpose() + z * r.transpose());
  }
}

namespace {

std::array<int, 6> element_dofs(const BeamElement& el) {
  return {gdof(el.node_i, Ux), gdof(el.node_i, Uy), gdof(el.node_i, Rz),
          gdof(el.node_j, Ux), gdof(el.node_j, Uy), gdof(el.node_j, Rz)};
}

// Internal force plus optional global tangent triplets.
Eigen::VectorXd assemble(const FrameModel& model, const Eigen::VectorXd& u,
                         std::vector<Eigen::Triplet<double>>* triplets) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(model.dof_count());
  Vec6 fe;
  Mat6 ke;
  for (const auto& el : model.elements) {
    element_response(model, el, u, fe, triplets != nullptr ? &ke : nullptr);
    const auto dofs = element_dofs(el);
    for (int a = 0; a < 6; ++a) {
      f[dofs[static_cast<std::size_t>(a)]] += fe[a];
      if (triplets != nullptr) {
        for (int b = 0; b < 6; ++b) {
          triplets->emplace_back(dofs[static_cast<std::size_t>(a)], dofs[static_cast<std::size_t>(b)],
                                 ke(a, b));
        }
      }
    }
  }
  for (const auto& sp : model.springs) {
    const int i = gdof(sp.node_i, sp.dof);
    const int j = gdof(sp.node_j, sp.dof);
    const double stretch = u[j] - u[i];
    f[i] -= sp.stiffness * stretch;
    f[j] += sp.stiffness * stretch;
    if (triplets != nullptr) {
      triplets->emplace_back(i, i, sp.stiffness);
      triplets->emplace_back(j, j, sp.stiffness);
      triplets->emplace_back(i, j, -sp.stiffness);
      triplets->emplace_back(j, i, -sp.stiffness);
    }
  }
  return f;
}

}  // namespace

Eigen::VectorXd internal_force(const FrameModel& model, const Eigen::VectorXd& u) {
  return assemble(model, u, nullptr);
}

double strain_energy(const FrameModel& model, const Eigen::VectorXd& u) {
  double energy = 0.0;
  for (const auto& el : model.elements) {
    const auto d = element_deformation(model, el, u);
    const Chord ch = chord(model, el, u);
    const double ea = el.E * el.A / ch.l0;
    const double ei = el.E * el.I / ch.l0;
    energy += 0.5 * ea * d.axial * d.axial +
              ei * (2.0 * d.theta_i * d.theta_i + 2.0 * d.theta_i * d.theta_j +
                    2.0 * d.theta_j * d.theta_j);
  }
  for (const auto& sp : model.springs) {
    const double stretch = u[gdof(sp.node_j, sp.dof)] - u[gdof(sp.node_i, sp.dof)];
    energy += 0.5 * sp.stiffness * stretch * stretch;
  }
  return energy;
}

FrameModel build_vbeam_mesh(const VBeamGeometry& geom, const MaterialModel& mat, int n_elements) {
  geom.validate();
  mat.validate();
  if (n_elements < 4)
    throw ValidationError("mesh: n_elements must be >= 4 (got " + std::to_string(n_elements) + ")");
  FrameModel m;
  const double c = std::cos(geom.tilt_theta);
  const double s = std::sin(geom.tilt_theta);
  for (int i = 0; i <= n_elements; ++i) {
    const double d = geom.length_L * static_cast<double>(i) / n_elements;
    m.nodes.push_back({d * c, d * s});
  }
  m.fixed.assign(m.nodes.size(), {false, false, false});
  m.fixed.front() = {true, true, true};
  m.fixed.back() = {true, false, true};
  for (int i = 0; i < n_elements; ++i) {
    m.elements.push_back({i, i + 1, mat.youngs_modulus_E, geom.area(), geom.second_moment()});
  }
  m.prescribed.push_back({n_elements, Uy, -1.0});
  m.validate();
  return m;
}

FrameSolver::FrameSolver(FrameModel model, SolverSettings settings)
    : model_(std::move(model)), settings_(settings) {
  model_.validate();
  if (!(settings_.tolerance > 0.0) || settings_.max_iterations < 1)
    throw ValidationError("solver: tolerance must be > 0 and max_iterations >= 1");
  std::vector<int> status(static_cast<std::size_t>(model_.dof_count()), 0);  // 0 free, 1 fixed, 2 prescribed
  for (std::size_t n = 0; n < model_.nodes.size(); ++n) {
    for (int d = 0; d < kDofsPerNode; ++d) {
      if (model_.fixed[n][static_cast<std::size_t>(d)]) status[n * kDofsPerNode + static_cast<std::size_t>(d)] = 1;
    }
  }
  for (const auto& p : model_.prescribed) {
    const int g = gdof(p.node, p.dof);
    if (status[static_cast<std::size_t>(g)] == 2)
      throw ValidationError("solver: DOF prescribed twice");
    status[static_cast<std::size_t>(g)] = 2;
    part_.prescribed.push_back(g);
    part_.per_unit.push_back(p.per_unit_control);
  }
  for (int g = 0; g < model_.dof_count(); ++g) {
    if (status[static_cast<std::size_t>(g)] == 0) part_.free.push_back(g);
  }
}

void FrameSolver::impose(double control, Eigen::VectorXd& u) const {
  for (std::size_t k = 0; k < part_.prescribed.size(); ++k) {
    u[part_.prescribed[k]] = control * part_.per_unit[k];
  }
}

double FrameSolver::reaction(const Eigen::VectorXd& f_int) const {
  double r = 0.0;
  for (std::size_t k = 0; k < part_.prescribed.size(); ++k) {
    r += f_int[part_.prescribed[k]] * part_.per_unit[k];
  }
  return r;
}

Eigen::VectorXd FrameSolver::free_residual(const Eigen::VectorXd& f_int) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(part_.free.size()));
  for (std::size_t k = 0; k < part_.free.size(); ++k) r[static_cast<Eigen::Index>(k)] = f_int[part_.free[k]];
  return r;
}

namespace {

// Free-free tangent block and the free rows of K * (prescribed direction).
struct Linearization {
  Eigen::SparseMatrix<double> kff;
  Eigen::VectorXd kfp_dir;
  Eigen::VectorXd f_int;
};

}  // namespace

// Linearization shared by Newton and arc-length iterations.
static Linearization linearize(const FrameModel& model, const Eigen::VectorXd& u,
                               const std::vector<int>& free, const std::vector<int>& prescribed,
                               const std::vector<double>& per_unit) {
  std::vector<Eigen::Triplet<double>> trips;
  Linearization lin;
  lin.f_int = assemble(model, u, &trips);
  std::vector<int> free_index(static_cast<std::size_t>(model.dof_count()), -1);
  std::vector<double> dir(static_cast<std::size_t>(model.dof_count()), 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) free_index[static_cast<std::size_t>(free[k])] = static_cast<int>(k);
  for (std::size_t k = 0; k < prescribed.size(); ++k) dir[static_cast<std::size_t>(prescribed[k])] = per_unit[k];
  const auto nf = static_cast<Eigen::Index>(free.size());
  std::vector<Eigen::Triplet<double>> ff;
  ff.reserve(trips.size());
  lin.kfp_dir = Eigen::VectorXd::Zero(nf);
  for (const auto& t : trips) {
    const int fi = free_index[static_cast<std::size_t>(t.row())];
    if (fi < 0) continue;
    const int fj = free_index[static_cast<std::size_t>(t.col())];
    if (fj >= 0) {
      ff.emplace_back(fi, fj, t.value());
    } else {
      lin.kfp_dir[fi] += t.value() * dir[static_cast<std::size_t>(t.col())];
    }
  }
  lin.kff.resize(nf, nf);
  lin.kff.setFromTriplets(ff.begin(), ff.end());
  return lin;
}

bool FrameSolver::newton(double control, Eigen::VectorXd& u, int& iterations,
                         double& residual) const {
  impose(control, u);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (iterations = 0; iterations <= settings_.max_iterations; ++iterations) {
    const Linearization lin = linearize(model_, u, part_.free, part_.prescribed, part_.per_unit);
    const Eigen::VectorXd r = free_residual(lin.f_int);
    residual = r.norm();
    if (!std::isfinite(residual)) return false;
    if (residual < settings_.tolerance) return true;
    if (iterations == settings_.max_iterations) break;
    lu.compute(lin.kff);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd du = lu.solve(-r);
    if (!du.allFinite()) return false;
    for (std::size_t k = 0; k < part_.free.size(); ++k) u[part_.free[k]] += du[static_cast<Eigen::Index>(k)];
  }
  return false;
}

bool FrameSolver::arc_length_to(double control_target, double control_start,
                                Eigen::VectorXd& u) const {
  // Spherical constraint |du_free|^2 + dlambda^2 = ds^2 in (mm, mm).
  const auto nf = static_cast<Eigen::Index>(part_.free.size());
  double lambda = control_start;
  double ds = std::abs(control_target - control_start) / 8.0;
  const double ds_min = ds / 1024.0;
  Eigen::VectorXd prev_du = Eigen::VectorXd::Zero(nf);
  double prev_dl = 1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  auto free_of = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd v(nf);
    for (Eigen::Index k = 0; k < nf; ++k) v[k] = full[part_.free[static_cast<std::size_t>(k)]];
    return v;
  };
  auto set_free = [&](Eigen::VectorXd& full, const Eigen::VectorXd& v) {
    for (Eigen::Index k = 0; k < nf; ++k) full[part_.free[static_cast<std::size_t>(k)]] = v[k];
  };

  for (int increment = 0; increment < 400 && lambda < control_target; ++increment) {
    const Eigen::VectorXd u0 = free_of(u);
    Linearization lin = linearize(model_, u, part_.free, part_.prescribed, part_.per_unit);
    lu.compute(lin.kff);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd dir_u = lu.solve(-lin.kfp_dir);
    double sign = 1.0;
    if (increment > 0 && dir_u.dot(prev_du) + prev_dl < 0.0) sign = -1.0;
    double dl = sign * ds / std::sqrt(dir_u.squaredNorm() + 1.0);
    Eigen::VectorXd du = dl * dir_u;

    bool converged = false;
    Eigen::VectorXd trial = u;
    for (int it = 0; it < settings_.max_iterations; ++it) {
      set_free(trial, u0 + du);
      impose(lambda + dl, trial);
      lin = linearize(model_, trial, part_.free, part_.prescribed, part_.per_unit);
      const Eigen::VectorXd r = free_residual(lin.f_int);
      if (!r.allFinite()) break;
      if (r.norm() < settings_.tolerance) {
        converged = true;
        break;
      }
      lu.compute(lin.kff);
      if (lu.info() != Eigen::Success) break;
      const Eigen::VectorXd du_r = lu.solve(-r);
      const Eigen::VectorXd du_t = lu.solve(-lin.kfp_dir);
      const Eigen::VectorXd base = du + du_r;
      const double a = du_t.squaredNorm() + 1.0;
      const double b = 2.0 * (du_t.dot(base) + dl);
      const double c = base.squaredNorm() + dl * dl - ds * ds;
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) break;
      const double q = std::sqrt(disc);
      const double roots[2] = {(-b + q) / (2.0 * a), (-b - q) / (2.0 * a)};
      double best = roots[0];
      double best_dot = -1e300;
      for (double g : roots) {
        const Eigen::VectorXd cand = base + g * du_t;
        const double dot = cand.dot(du) + (dl + g) * dl;
        if (dot > best_dot) {
          best_dot = dot;
          best = g;
        }
      }
      du = base + best * du_t;
      dl += best;
    }
    if (!converged) {
      ds *= 0.5;
      if (ds < ds_min) return false;
      set_free(u, u0);
      impose(lambda, u);
      --increment;
      continue;
    }
    u = trial;
    lambda += dl;
    prev_du = du;
    prev_dl = dl;
  }
  if (lambda < control_target) return false;
  int its = 0;
  double res = 0.0;
  return newton(control_target, u, its, res);
}

EquilibriumPath FrameSolver::solve_sweep(double travel_max, int n_steps) {
  if (!(travel_max >= 0.0) || !std::isfinite(travel_max))
    throw ValidationError("sweep: travel_max must be >= 0");
  if (n_steps < 1) throw ValidationError("sweep: n_steps must be >= 1");

  EquilibriumPath path;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model_.dof_count());
  {
    PathStep s0;
    s0.displacement = u;
    path.steps.push_back(s0);
  }
  if (travel_max == 0.0) return path;

  const double floor = travel_max * settings_.bisection_floor_fraction;
  double current = 0.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int k = 1; k <= n_steps; ++k) {
    const double target = travel_max * static_cast<double>(k) / n_steps;
    double h = target - current;
    int iterations = 0;
    double residual = 0.0;
    while (current < target) {
      const double next = std::min(current + h, target);
      Eigen::VectorXd trial = u;
      // Linear predictor from the converged state.
      const Linearization lin = linearize(model_, u, part_.free, part_.prescribed, part_.per_unit);
      lu.compute(lin.kff);
      if (lu.info() == Eigen::Success) {
        const Eigen::VectorXd du = lu.solve(-lin.kfp_dir * (next - current));
        if (du.allFinite()) {
          for (std::size_t i = 0; i < part_.free.size(); ++i)
            trial[part_.free[i]] += du[static_cast<Eigen::Index>(i)];
        }
      }
      if (newton(next, trial, iterations, residual)) {
        u = trial;
        current = next;
        h = std::min(2.0 * h, target - current);
        continue;
      }
      h *= 0.5;
      ++path.bisections;
      if (h >= floor) continue;

      Eigen::VectorXd rescue = u;
      if (settings_.arc_length_fallback && arc_length_to(target, current, rescue)) {
        ++path.arc_length_rescues;
        u = rescue;
        current = target;
        newton(target, u, iterations, residual);
        break;
      }
      throw ConvergenceError("FE sweep failed to converge between control " + num(current) +
                                 " and " + num(target) + " mm (residual " + num(residual) + " N)",
                             path.steps.back());
    }
    PathStep step;
    step.control = target;
    step.displacement = u;
    step.reaction = reaction(internal_force(model_, u));
    step.iterations = iterations;
    step.residual = residual;
    path.steps.push_back(std::move(step));
  }
  return path;
}

EquilibriumPath solve_guided_sweep(const FrameModel& model, double travel_max, int n_steps,
                                   const SolverSettings& settings) {
  FrameSolver solver(model, settings);
  return solver.solve_sweep(travel_max, n_steps);
}

ForceDisplacementCurve path_to_curve(const EquilibriumPath& path, std::string source) {
  std::vector<CurveSample> samples;
  for (const auto& s : path.steps) {
    if (s.control <= 0.0) continue;
    samples.push_back(CurveSample{s.control, s.reaction, std::nullopt, std::nullopt, std::nullopt});
  }
  return ForceDisplacementCurve(std::move(samples), CurveProvenance{std::move(source), {}, {}, 0});
}

AssemblyResult solve_multibeam_assembly(const MechanismConfig& config, double ring_disp,
                                        int n_elements, int n_steps,
                                        const SolverSettings& settings) {
  config.validate();
  if (!(ring_disp >= 0.0)) throw ValidationError("assembly: ring_disp must be >= 0");
  if (n_elements < 4) throw ValidationError("assembly: n_elements must be >= 4");
  if (ring_disp == 0.0) return {};

  const auto& g = config.beam_geometry;
  const double c = std::cos(g.tilt_theta);
  const double s = std::sin(g.tilt_theta);
  FrameModel m;
  m.nodes.push_back({0.0, 0.0});                              // ground
  m.nodes.push_back({g.length_L * c, g.length_L * s});        // shuttle
  m.nodes.push_back({g.length_L * c, g.length_L * s - 1.0});  // ring (position is immaterial)
  m.fixed = {{true, true, true}, {true, false, true}, {true, false, true}};
  constexpr int kGround = 0, kShuttle = 1, kRing = 2;
  for (int b = 0; b < config.n_beams; ++b) {
    int prev = kGround;
    for (int i = 1; i <= n_elements; ++i) {
      int node = kShuttle;
      if (i < n_elements) {
        const double d = g.length_L * static_cast<double>(i) / n_elements;
        m.nodes.push_back({d * c, d * s});
        m.fixed.push_back({false, false, false});
        node = static_cast<int>(m.nodes.size()) - 1;
      }
      m.elements.push_back({prev, node, config.material.youngs_modulus_E, g.area(), g.second_moment()});
      prev = node;
    }
  }
  m.springs.push_back({kShuttle, kRing, Uy, config.series_stiffness_ks});
  m.prescribed.push_back({kRing, Uy, -1.0});

  FrameSolver solver(std::move(m), settings);
  const EquilibriumPath path = solver.solve_sweep(ring_disp, n_steps);
  const PathStep& last = path.steps.back();
  return {-last.displacement[gdof(kShuttle, Uy)], last.reaction};
}

CurveComparison compare_curves(const ForceDisplacementCurve& a, const ForceDisplacementCurve& b) {
  if (a.empty() || b.empty()) throw ValidationError("compare_curves: empty curve");
  const auto sa = a.samples();
  const auto sb = b.samples();
  const double lo = std::max(sa.front().delta_y, sb.front().delta_y);
  const double hi = std::min(sa.back().delta_y, sb.back().delta_y);
  if (lo > hi) throw ValidationError("compare_curves: curves have disjoint travel domains");

  auto interp_b = [&](double x) {
    if (sb.size() == 1) return sb.front().force;
    auto it = std::lower_bound(sb.begin(), sb.end(), x,
                               [](const CurveSample& s, double v) { return s.delta_y < v; });
    if (it == sb.begin()) return it->force;
    if (it == sb.end()) return sb.back().force;
    if (it->delta_y == x) return it->force;
    const auto& right = *it;
    const auto& left = *(it - 1);
    const double w = (x - left.delta_y) / (right.delta_y - left.delta_y);
    return left.force + w * (right.force - left.force);
  };

  double norm = peak_force(a).force;
  if (!(norm > 0.0)) {
    norm = 0.0;
    for (const auto& s : sa) norm = std::max(norm, std::abs(s.force));
  }
  if (!(norm > 0.0)) throw ValidationError("compare_curves: reference curve has zero force");

  CurveComparison out;
  double sum_sq = 0.0;
  double peak_a = -1e300, peak_b = -1e300, loc_a = 0.0, loc_b = 0.0;
  for (const auto& s : sa) {
    if (s.delta_y < lo || s.delta_y > hi) continue;
    const double fb = interp_b(s.delta_y);
    const double diff = fb - s.force;
    sum_sq += diff * diff;
    out.max_rel = std::max(out.max_rel, std::abs(diff) / norm);
    if (s.force > peak_a) {
      peak_a = s.force;
      loc_a = s.delta_y;
    }
    if (fb > peak_b) {
      peak_b = fb;
      loc_b = s.delta_y;
    }
    ++out.points;
  }
  if (out.points == 0) throw ValidationError("compare_curves: no reference samples in the common domain");
  out.rms_rel = std::sqrt(sum_sq / out.points) / norm;
  out.peak_force_rel_diff = std::abs(peak_b - peak_a) / norm;
  out.peak_location_diff = std::abs(loc_b - loc_a);
  return out;
}

void write_path_csv(const EquilibriumPath& path, const std::string& destination) {
  std::ofstream os(destination, std::ios::binary);
  if (!os) throw IoError("cannot open " + destination + " for writing");
  os << "step,control_mm,reaction_N,iters,residual\n";
  char buf[256];
  for (std::size_t i = 0; i < path.steps.size(); ++i) {
    const auto& s = path.steps[i];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%d,%.9g\n", i, s.control, s.reaction, s.iterations,
                  s.residual);
    os << buf;
  }
  if (!os) throw IoError("write failed for " + destination);
}

}  // namespace graspsynth::fe
