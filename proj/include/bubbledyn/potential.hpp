#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bubbledyn/linalg.hpp"
#include "bubbledyn/shapes.hpp"
#include "bubbledyn/surface_mesh.hpp"

namespace bubbledyn::potential {

/// Relative flux tolerance for the cavity compatibility check.
inline constexpr double kCompatibilityTolerance = 1e-3;
/// Source panels closer than this many panel diameters use refined quadrature;
/// farther panels use a moment-corrected one-point rule.
inline constexpr double kNearFieldRatio = 2.5;

/// All boundary surfaces of one configuration: bubbles in order, then the
/// cavity wall when bounded. Panels are numbered consecutively.
struct Boundary {
  std::vector<SurfaceMesh> meshes;
  /// Bubble index of each mesh, -1 for the wall.
  std::vector<int> owners;
  /// First panel of each mesh; offsets.back() == panel_count().
  std::vector<int> offsets;
  bool bounded = false;

  // Flattened panel data, indexed by global panel number.
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<double> weights;
  std::vector<double> diameters;
  std::vector<int> panel_mesh;
  /// First and second moments of each panel about its collocation point.
  std::vector<Vec3> first_moments;
  std::vector<Mat3> second_moments;

  int panel_count() const { return offsets.back(); }
  std::span<const QuadratureNode> nodes(int panel) const {
    const int m = panel_mesh[panel];
    return meshes[m].panel_nodes(panel - offsets[m]);
  }
};

/// Assembles a Boundary from meshes (bubble meshes first, wall last).
std::shared_ptr<const Boundary> make_boundary(std::vector<SurfaceMesh> meshes,
                                              std::vector<int> owners, bool bounded);

std::shared_ptr<const Boundary> make_boundary(const shapes::Configuration& config, int level);

/// Normal velocity <V_m, mdot> at the collocation point of every bubble panel, zero on
/// the wall. `direction` is a flat tangent vector of the whole configuration.
Vector boundary_data(const Boundary& boundary, const shapes::Configuration& config,
                     const Vector& direction);

struct NeumannProblem {
  std::shared_ptr<const Boundary> boundary;
  /// Normal derivative prescribed at each panel.
  Vector data;
};

/// Single-layer representation phi(x) = sum_j G(x, y_j) q_j |panel_j| with
/// G(x, y) = -1 / (4 pi |x - y|).
struct PotentialSolution {
  std::shared_ptr<const Boundary> boundary;
  Vector density;
  Vector boundary_data;
  Vector boundary_potential;
  /// Bordering multiplier absorbing residual flux in cavity mode (0 otherwise).
  double compatibility_multiplier = 0.0;
};

/// Collocation operator of one boundary, factorised once and reused for any
/// number of right-hand sides.
class NeumannSolver {
public:
  explicit NeumannSolver(std::shared_ptr<const Boundary> boundary);

  /// Throws ConstraintError if bounded and the data carry net flux.
  PotentialSolution solve(const Vector& data) const;
  double condition_estimate() const { return condition_; }
  const Boundary& boundary() const { return *boundary_; }
  /// Single-layer matrix mapping densities to boundary potential values.
  const Matrix& single_layer() const { return single_layer_; }
  /// Collocation matrix (-> normal derivative), before bordering.
  const Matrix& neumann_matrix() const { return neumann_; }

private:
  std::shared_ptr<const Boundary> boundary_;
  Matrix single_layer_;
  Matrix neumann_;
  Eigen::PartialPivLU<Matrix> lu_;
  double condition_ = 0.0;
};

PotentialSolution solve_neumann(const NeumannProblem& problem);

struct FieldValues {
  std::vector<double> phi;
  std::vector<Vec3> gradient;
};

/// phi and grad phi by direct summation; refined quadrature for close panels.
/// Accuracy is not guaranteed within about one panel diameter of a surface.
FieldValues evaluate(const PotentialSolution& solution, std::span<const Vec3> points);

/// One potential per column of `directions` (flat tangent vectors).
std::vector<PotentialSolution> basis_potentials(const shapes::Configuration& config, int level,
                                                const Matrix& directions);
/// Canonical coordinate directions.
std::vector<PotentialSolution> basis_potentials(const shapes::Configuration& config, int level);

struct AddedMassMatrix {
  Matrix entries;
  /// max |A_ij - A_ji| / max |A_ij| before symmetrisation.
  double reciprocity_defect = 0.0;
  double min_eigenvalue = 0.0;
  double condition_number = 0.0;
  /// Condition estimate of the collocation matrix.
  double collocation_condition = 0.0;
};

/// Gram matrix of the basis gradients, reduced to the boundary by Green's
/// identity: A_ij = -rho sum_bubble panels phi^i g_j |panel|, symmetrised.
/// Throws DiscretizationError when the result is not positive definite.
AddedMassMatrix added_mass(const shapes::Configuration& config, int level, double liquid_density,
                           const Matrix& directions);
AddedMassMatrix added_mass(const shapes::Configuration& config, int level, double liquid_density);

/// Gram matrix from already solved potentials (columns of the direction set).
AddedMassMatrix gram_matrix(std::span<const PotentialSolution> basis, double liquid_density);

/// Central-difference step used for parameter derivatives of the added mass.
inline double jacobian_fd_step(double parameter, double scale = 1e-4) {
  return scale * (1.0 + std::abs(parameter));
}

struct MatrixJacobian {
  /// slices[k] = dA / dq_k
  std::vector<Matrix> slices;
  std::vector<std::string> warnings;
};

/// Central differences of a matrix-valued function of the coordinates.
/// When a central step leaves the admissible set the one-sided difference on
/// the admissible side is used and a warning recorded. Slices are symmetrised.
/// When `indices` is non-empty only those slices are computed; the others
/// are left empty.
MatrixJacobian finite_difference_jacobian(const std::function<Matrix(const Vector&)>& f,
                                          const std::function<bool(const Vector&)>& admissible,
                                          const Vector& q, double step_scale = 1e-4,
                                          const std::vector<int>& indices = {});

/// dA/dq for canonical coordinates of an unbounded configuration.
MatrixJacobian added_mass_jacobian(const shapes::Configuration& config, int level,
                                   double liquid_density, double step_scale = 1e-4);

}  // namespace bubbledyn::potential
