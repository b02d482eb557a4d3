#pragma once

// Geometrically nonlinear planar frame solver (corotational Euler-Bernoulli
// elements) used as an independent check of the closed-form beam chain.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graspsynth/errors.hpp"
#include "graspsynth/mechanism.hpp"
#include "graspsynth/tebc.hpp"

namespace graspsynth::fe {

enum Dof : int { Ux = 0, Uy = 1, Rz = 2 };
inline constexpr int kDofsPerNode = 3;

struct Node {
  double x = 0.0;
  double y = 0.0;
};

struct BeamElement {
  int node_i = 0;
  int node_j = 0;
  double E = 0.0;  // MPa
  double A = 0.0;  // mm^2
  double I = 0.0;  // mm^4
};

/// Linear spring between one DOF of each of two nodes.
struct DofSpring {
  int node_i = 0;
  int node_j = 0;
  Dof dof = Uy;
  double stiffness = 0.0;  // N/mm
};

/// Displacement of `dof` at `node` equals control * `per_unit_control`.
struct PrescribedDof {
  int node = 0;
  Dof dof = Uy;
  double per_unit_control = 1.0;
};

struct FrameModel {
  std::vector<Node> nodes;
  std::vector<BeamElement> elements;
  std::vector<DofSpring> springs;
  std::vector<std::array<bool, 3>> fixed;  // per node: (u_x, u_y, rotation) held at zero
  std::vector<PrescribedDof> prescribed;

  /// Throws ValidationError for bad connectivity, zero-length elements,
  /// missing supports or conflicting constraints.
  void validate() const;
  int dof_count() const { return static_cast<int>(nodes.size()) * kDofsPerNode; }
};

struct SolverSettings {
  double tolerance = 1e-8;   // residual force norm, N
  int max_iterations = 25;
  double bisection_floor_fraction = 1.0 / 4096.0;  // of the sweep travel
  bool arc_length_fallback = true;
};

struct PathStep {
  double control = 0.0;        // prescribed displacement magnitude, mm
  Eigen::VectorXd displacement;
  double reaction = 0.0;       // force along the prescribed motion, N
  int iterations = 0;
  double residual = 0.0;
};

struct EquilibriumPath {
  std::vector<PathStep> steps;
  int bisections = 0;
  int arc_length_rescues = 0;
};

/// Thrown when a step cannot converge; carries the last converged state.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::optional<PathStep> last)
      : NumericalError(what), last_converged(std::move(last)) {}
  std::optional<PathStep> last_converged;
};

/// Local (rotation-free) deformation of one element.
struct ElementDeformation {
  double axial = 0.0;    // l - l0
  double theta_i = 0.0;  // end rotations relative to the chord
  double theta_j = 0.0;
};

ElementDeformation element_deformation(const FrameModel& model, const BeamElement& el,
                                       const Eigen::VectorXd& u);

/// Corotational internal force (6) and tangent (6x6) in global coordinates.
void element_response(const FrameModel& model, const BeamElement& el, const Eigen::VectorXd& u,
                      Eigen::Matrix<double, 6, 1>& force, Eigen::Matrix<double, 6, 6>* tangent);

Eigen::VectorXd internal_force(const FrameModel& model, const Eigen::VectorXd& u);

double strain_energy(const FrameModel& model, const Eigen::VectorXd& u);

/// Straight V-beam: node 0 clamped at the origin, guided end at
/// (L cos theta, L sin theta) with rotation and u_x held, u_y prescribed
/// toward the fixed end (-1 per unit control).
FrameModel build_vbeam_mesh(const VBeamGeometry& geom, const MaterialModel& mat,
                            int n_elements = 16);

inline constexpr int kDefaultElements = 16;

class FrameSolver {
 public:
  explicit FrameSolver(FrameModel model, SolverSettings settings = {});

  /// Displacement-controlled sweep of the prescribed DOFs from 0 to travel_max
  /// in n_steps equal increments. Returns one PathStep per increment plus the
  /// initial state.
  EquilibriumPath solve_sweep(double travel_max, int n_steps);

  const FrameModel& model() const { return model_; }

 private:
  struct Partition {
    std::vector<int> free;
    std::vector<int> prescribed;
    std::vector<double> per_unit;
  };

  bool newton(double control, Eigen::VectorXd& u, int& iterations, double& residual) const;
  bool arc_length_to(double control_target, double control_start, Eigen::VectorXd& u) const;
  void impose(double control, Eigen::VectorXd& u) const;
  double reaction(const Eigen::VectorXd& f_int) const;
  Eigen::VectorXd free_residual(const Eigen::VectorXd& f_int) const;

  FrameModel model_;
  SolverSettings settings_;
  Partition part_;
};

/// Guided sweep of a single-beam model; the path's reactions form the
/// single V-beam force/travel curve.
EquilibriumPath solve_guided_sweep(const FrameModel& model, double travel_max, int n_steps,
                                   const SolverSettings& settings = {});

ForceDisplacementCurve path_to_curve(const EquilibriumPath& path, std::string source = "fe");

struct AssemblyResult {
  double shuttle_disp = 0.0;  // mm
  double ring_force = 0.0;    // N
};

/// N identical beams in parallel between ground and a guided shuttle, which
/// connects to the ring through a series spring of stiffness k_s. The ring
/// is displaced by `ring_disp` in `n_steps` increments.
AssemblyResult solve_multibeam_assembly(const MechanismConfig& config, double ring_disp,
                                        int n_elements = kDefaultElements, int n_steps = 40,
                                        const SolverSettings& settings = {});

struct CurveComparison {
  double rms_rel = 0.0;
  double max_rel = 0.0;
  double peak_force_rel_diff = 0.0;
  double peak_location_diff = 0.0;  // mm
  int points = 0;
};

/// Resamples `b` onto the samples of `a` inside the common travel domain by
/// linear interpolation. Differences are normalized by the peak force of `a`.
CurveComparison compare_curves(const ForceDisplacementCurve& a, const ForceDisplacementCurve& b);

/// Writes `step,control_mm,reaction_N,iters,residual`.
void write_path_csv(const EquilibriumPath& path, const std::string& destination);

}  // namespace graspsynth::fe
