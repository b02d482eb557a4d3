#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "graspsynth/fe_oracle.hpp"
#include "support/oracles.hpp"

using namespace graspsynth;
using doctest::Approx;

namespace {

fe::FrameModel single_element(double angle) {
  fe::FrameModel m;
  m.nodes = {{0.0, 0.0}, {10.0 * std::cos(angle), 10.0 * std::sin(angle)}};
  m.elements = {{0, 1, 1800.0, 6.0, 0.72}};
  m.fixed = {{true, true, true}, {false, false, false}};
  return m;
}

double peak_reaction(const fe::EquilibriumPath& p) {
  double best = 0.0;
  for (const auto& s : p.steps) best = std::max(best, s.reaction);
  return best;
}

}  // namespace

TEST_CASE("rigid motion produces no internal force") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-3.0, 3.0), tr(-50, 50);
  for (int k = 0; k < 50; ++k) {
    const auto m = single_element(ang(rng));
    const double phi = ang(rng), tx = tr(rng), ty = tr(rng);
    Eigen::VectorXd u(6);
    for (int n = 0; n < 2; ++n) {
      const auto& p = m.nodes[static_cast<std::size_t>(n)];
      u[3 * n] = std::cos(phi) * p.x - std::sin(phi) * p.y + tx - p.x;
      u[3 * n + 1] = std::sin(phi) * p.x + std::cos(phi) * p.y + ty - p.y;
      u[3 * n + 2] = phi;
    }
    const auto f = fe::internal_force(m, u);
    CHECK(f.norm() < 1e-10);
    CHECK(std::abs(fe::strain_energy(m, u)) < 1e-12);
    const auto d = fe::element_deformation(m, m.elements[0], u);
    CHECK(std::abs(d.axial) < 1e-12);
    CHECK(std::abs(d.theta_i) < 1e-12);
    CHECK(std::abs(d.theta_j) < 1e-12);
  }
}

TEST_CASE("element tangent matches finite differences of the internal force") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(-1.5, 1.5), du(-0.5, 0.5), dr(-0.3, 0.3);
  for (int k = 0; k < 30; ++k) {
    const auto m = single_element(ang(rng));
    Eigen::VectorXd u(6);
    u << du(rng), du(rng), dr(rng), du(rng), du(rng), dr(rng);
    Eigen::Matrix<double, 6, 1> f;
    Eigen::Matrix<double, 6, 6> K;
    fe::element_response(m, m.elements[0], u, f, &K);
    Eigen::Matrix<double, 6, 6> Kfd;
    const double h = 1e-6;
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd up = u, um = u;
      up[j] += h;
      um[j] -= h;
      Eigen::Matrix<double, 6, 1> fp, fm;
      fe::element_response(m, m.elements[0], up, fp, nullptr);
      fe::element_response(m, m.elements[0], um, fm, nullptr);
      Kfd.col(j) = (fp - fm) / (2 * h);
    }
    CHECK((K - Kfd).norm() <= 1e-6 * K.norm());
    CHECK((K - K.transpose()).norm() <= 1e-10 * K.norm());
  }
}

TEST_CASE("internal force is the gradient of the strain energy") {
  const auto m = single_element(0.4);
  Eigen::VectorXd u(6);
  u << 0.1, -0.2, 0.05, 0.3, 0.4, -0.1;
  const auto f = fe::internal_force(m, u);
  const double h = 1e-6;
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd up = u, um = u;
    up[j] += h;
    um[j] -= h;
    CHECK(f[j] == Approx((fe::strain_energy(m, up) - fe::strain_energy(m, um)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("straight guided beam has the classical transverse stiffness") {
  const auto g = VBeamGeometry::from_degrees(40.0, 1.2, 5.0, 0.0);
  const auto mesh = fe::build_vbeam_mesh(g, MaterialModel{}, 16);
  const auto path = fe::solve_guided_sweep(mesh, 0.01, 1);
  const double k = path.steps.back().reaction / 0.01;
  const double ref = oracle::guided_beam_stiffness(1800.0, g.second_moment(), 40.0);
  CHECK(ref == Approx(0.243).epsilon(1e-3));
  CHECK(k == Approx(ref).epsilon(0.01));
}

TEST_CASE("inclined beam small-deflection slope combines axial and bending stiffness") {
  const auto g = oracle::table1();
  const auto mesh = fe::build_vbeam_mesh(g, MaterialModel{}, 16);
  const auto path = fe::solve_guided_sweep(mesh, 1e-4, 1);
  const double s = std::sin(g.tilt_theta), c = std::cos(g.tilt_theta);
  const double ref = 1800.0 * g.area() / 40.0 * s * s +
                     oracle::guided_beam_stiffness(1800.0, g.second_moment(), 40.0) * c * c;
  CHECK(path.steps.back().reaction / 1e-4 == Approx(ref).epsilon(0.01));
}

TEST_CASE("work along the path equals the stored strain energy") {
  const auto mesh = fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 16);
  const auto path = fe::solve_guided_sweep(mesh, 5.0, 100);
  double work = 0.0;
  for (std::size_t i = 1; i < path.steps.size(); ++i) {
    const auto& a = path.steps[i - 1];
    const auto& b = path.steps[i];
    work += 0.5 * (a.reaction + b.reaction) * (b.control - a.control);
  }
  const double energy = fe::strain_energy(mesh, path.steps.back().displacement);
  CHECK(work == Approx(energy).epsilon(0.02));
}

TEST_CASE("reference beam sweep rises to one peak and declines") {
  const auto mesh = fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 16);
  const auto path = fe::solve_guided_sweep(mesh, 5.0, 100);
  REQUIRE(path.steps.size() == 101);
  CHECK(path.steps.front().control == 0.0);
  CHECK(path.steps.front().reaction == 0.0);
  std::size_t ip = 0;
  for (std::size_t i = 0; i < path.steps.size(); ++i)
    if (path.steps[i].reaction > path.steps[ip].reaction) ip = i;
  for (std::size_t i = 1; i <= ip; ++i) CHECK(path.steps[i].reaction >= path.steps[i - 1].reaction);
  for (std::size_t i = ip + 1; i < path.steps.size(); ++i)
    CHECK(path.steps[i].reaction <= path.steps[i - 1].reaction);
  CHECK(std::abs(path.steps.back().reaction) < 0.25 * path.steps[ip].reaction);
  for (const auto& s : path.steps) CHECK(s.residual <= 1e-8);
}

TEST_CASE("peak force is converged in the mesh") {
  const auto g = oracle::table1();
  const double p16 = peak_reaction(fe::solve_guided_sweep(fe::build_vbeam_mesh(g, MaterialModel{}, 16), 5.0, 100));
  const double p32 = peak_reaction(fe::solve_guided_sweep(fe::build_vbeam_mesh(g, MaterialModel{}, 32), 5.0, 100));
  CHECK(p16 == Approx(p32).epsilon(0.01));
}

TEST_CASE("zero travel returns the undeformed state") {
  const auto mesh = fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 8);
  const auto path = fe::solve_guided_sweep(mesh, 0.0, 10);
  REQUIRE(path.steps.size() == 1);
  CHECK(path.steps[0].displacement.norm() == 0.0);
}

TEST_CASE("unconverged sweep reports the last converged step") {
  const auto mesh = fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 8);
  fe::SolverSettings s;
  s.tolerance = 1e-30;
  s.max_iterations = 1;
  s.arc_length_fallback = false;
  try {
    fe::solve_guided_sweep(mesh, 5.0, 10, s);
    FAIL("expected a convergence failure");
  } catch (const fe::ConvergenceError& e) {
    REQUIRE(e.last_converged.has_value());
    CHECK(e.last_converged->control == 0.0);
  }
}

TEST_CASE("mesh construction and model validation") {
  CHECK_THROWS_AS(fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 3), ValidationError);
  const auto mesh = fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 16);
  CHECK(mesh.nodes.size() == 17);
  CHECK(mesh.nodes.back().x == Approx(40.0 * std::cos(oracle::table1().tilt_theta)));
  CHECK(mesh.nodes.back().y == Approx(40.0 * std::sin(oracle::table1().tilt_theta)));
  CHECK(mesh.elements.front().I == Approx(0.72));

  auto bad = single_element(0.0);
  bad.elements[0].node_j = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = single_element(0.0);
  bad.fixed[0] = {false, true, true};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = single_element(0.0);
  bad.prescribed = {{0, fe::Uy, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("multibeam assembly: beam count and series stiffness") {
  MechanismConfig c;
  c.beam_geometry = oracle::table1();
  c.n_beams = 10;
  const auto a10 = fe::solve_multibeam_assembly(c, 3.0, 8, 30);
  c.n_beams = 12;
  const auto a12 = fe::solve_multibeam_assembly(c, 3.0, 8, 30);
  CHECK(a10.shuttle_disp > a12.shuttle_disp);
  CHECK(a12.shuttle_disp > 0.0);
  CHECK(a12.shuttle_disp < 3.0);
  // Spring force balances the beams.
  CHECK(a12.ring_force == Approx(c.series_stiffness_ks * (3.0 - a12.shuttle_disp)).epsilon(1e-6));

  c.series_stiffness_ks = 1e6;
  const auto stiff = fe::solve_multibeam_assembly(c, 2.0, 8, 30);
  CHECK(stiff.shuttle_disp == Approx(2.0).epsilon(1e-4));
}

TEST_CASE("curve comparison metrics") {
  const CurveProvenance p{"t", std::nullopt, std::nullopt, 0};
  const ForceDisplacementCurve a({{1, 1}, {2, 2}, {3, 1}}, p);
  const auto same = fe::compare_curves(a, a);
  CHECK(same.rms_rel == 0.0);
  CHECK(same.max_rel == 0.0);
  CHECK(same.peak_location_diff == 0.0);
  CHECK(same.points == 3);

  const ForceDisplacementCurve b({{1, 1.2}, {2, 2.4}, {3, 1.2}}, p);
  const auto scaled = fe::compare_curves(a, b);
  CHECK(scaled.rms_rel == Approx(std::sqrt((0.04 + 0.16 + 0.04) / 3) / 2));
  CHECK(scaled.max_rel == Approx(0.2));
  CHECK(scaled.peak_force_rel_diff == Approx(0.2));

  // b is resampled onto a; only the overlap counts.
  const ForceDisplacementCurve c({{0.5, 0.5}, {2.5, 3.5}}, p);
  const auto partial = fe::compare_curves(a, c);
  CHECK(partial.points == 2);
  CHECK(partial.max_rel == Approx(0.375));

  const ForceDisplacementCurve far({{10, 1}, {11, 1}}, p);
  CHECK_THROWS_AS(fe::compare_curves(a, far), ValidationError);
}

TEST_CASE("path csv has the fixed header and one row per step") {
  const auto path = fe::solve_guided_sweep(fe::build_vbeam_mesh(oracle::table1(), MaterialModel{}, 8), 1.0, 4);
  const auto file = std::filesystem::temp_directory_path() / "graspsynth_path_test.csv";
  fe::write_path_csv(path, file.string());
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,control_mm,reaction_N,iters,residual");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(fe::write_path_csv(path, "/nonexistent-dir/x.csv"), IoError);
}
