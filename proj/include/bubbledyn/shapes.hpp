#pragma once

#include <cmath>
#include <concepts>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bubbledyn/linalg.hpp"
#include "bubbledyn/surface_mesh.hpp"

namespace bubbledyn::shapes {

/// Finite-difference step for measure gradients without a closed form.
inline double measure_fd_step(double parameter) { return 1e-5 * (1.0 + std::abs(parameter)); }

/// Sphere S(c, r). Coordinates: (c1, c2, c3, r).
struct SphereParams {
  static constexpr int kDim = 4;

  Vec3 center = Vec3::Zero();
  double radius = 1.0;

  /// Throws DegenerateShapeError unless radius > 0 and all entries finite.
  static SphereParams make(const Vec3& center, double radius);
  static SphereParams from_coords(const Vector& q);
  Vector coords() const;

  Vec3 map(const Vec3& unit) const { return center + radius * unit; }
  Vec3 normal(const Vec3& unit) const { return unit; }
  double area_density(const Vec3&) const { return radius * radius; }
  double normal_velocity(const Vector& mdot, const Vec3& x, const Vec3& n) const;

  double volume() const;
  double area() const;
  Vector volume_gradient() const;
  Vector area_gradient() const;
  /// Support function h(u) = max over the closed ball of u . x.
  double support(const Vec3& u) const { return u.dot(center) + radius * u.norm(); }
  double max_semi_axis() const { return radius; }
  double min_semi_axis() const { return radius; }

  bool operator==(const SphereParams&) const = default;
};

/// Ellipsoid E(c, S) = {c + S y : |y| = 1}, S symmetric positive definite.
/// Coordinates: (c1, c2, c3, s11, s12, s13, s22, s23, s33); moving one
/// off-diagonal coordinate moves both symmetric entries.
struct EllipsoidParams {
  static constexpr int kDim = 9;
  /// Rejection threshold on smallest/largest eigenvalue.
  static constexpr double kDegeneracyRatio = 1e-10;

  Vec3 center = Vec3::Zero();
  Mat3 shape = Mat3::Identity();

  /// Validates symmetry (to round-off, then symmetrises) and definiteness.
  static EllipsoidParams make(const Vec3& center, const Mat3& shape);
  static EllipsoidParams from_coords(const Vector& q);
  Vector coords() const;

  Vec3 map(const Vec3& unit) const { return center + shape * unit; }
  Vec3 normal(const Vec3& unit) const;
  double area_density(const Vec3& unit) const;
  /// c_dot . n + S_dot S^-1 (x - c) . n
  double normal_velocity(const Vector& mdot, const Vec3& x, const Vec3& n) const;

  double volume() const;
  /// Exact surface area through incomplete elliptic integrals.
  double area() const;
  Vector volume_gradient() const;
  /// Central differences of area() with measure_fd_step.
  Vector area_gradient() const;
  double support(const Vec3& u) const { return u.dot(center) + (shape * u).norm(); }
  double max_semi_axis() const;
  double min_semi_axis() const;

  bool operator==(const EllipsoidParams& o) const {
    return center == o.center && shape == o.shape;
  }
};

/// Symmetric matrix from the six upper-triangle coordinates (s11, s12, s13, s22, s23, s33).
Mat3 symmetric_from_coords(const Vector& six);
Vector coords_from_symmetric(const Mat3& s);

/// What a shape family must provide to be meshed, moved and measured.
template <class F>
concept ShapeFamily = requires(const F& f, const Vec3& u, const Vector& v) {
  { F::kDim } -> std::convertible_to<int>;
  { F::from_coords(v) } -> std::same_as<F>;
  { f.coords() } -> std::same_as<Vector>;
  { f.map(u) } -> std::same_as<Vec3>;
  { f.normal(u) } -> std::same_as<Vec3>;
  { f.area_density(u) } -> std::convertible_to<double>;
  { f.normal_velocity(v, u, u) } -> std::convertible_to<double>;
  { f.volume() } -> std::convertible_to<double>;
  { f.area() } -> std::convertible_to<double>;
  { f.volume_gradient() } -> std::same_as<Vector>;
  { f.area_gradient() } -> std::same_as<Vector>;
  { f.support(u) } -> std::convertible_to<double>;
};

static_assert(ShapeFamily<SphereParams>);
static_assert(ShapeFamily<EllipsoidParams>);

using ShapeParams = std::variant<SphereParams, EllipsoidParams>;

int dimension(const ShapeParams& m);
Vector coords(const ShapeParams& m);
/// Same family as `like`, new coordinates. Throws DegenerateShapeError.
ShapeParams with_coords(const ShapeParams& like, const Vector& q);
Vec3 center(const ShapeParams& m);
double min_semi_axis(const ShapeParams& m);

/// Tangent coordinates for a sphere: (c_dot, r_dot).
Vector sphere_tangent(const Vec3& center_rate, double radius_rate);
/// Tangent coordinates for an ellipsoid: (c_dot, S_dot upper triangle).
/// Throws DegenerateShapeError if S_dot is not symmetric.
Vector ellipsoid_tangent(const Vec3& center_rate, const Mat3& shape_rate);

/// <V_m(x), mdot> for a point x on the surface of m with unit normal n.
double normal_velocity(const ShapeParams& m, const Vector& mdot, const Vec3& x, const Vec3& n);

struct Measures {
  double volume = 0.0;
  double area = 0.0;
  Vector d_volume;
  Vector d_area;
};

Measures measures(const ShapeParams& m);

/// The fixed reference icosphere of `level` mapped onto the surface of m.
SurfaceMesh surface_mesh(const ShapeParams& m, int level);

// ---------------------------------------------------------------------------
// Configurations

struct Unbounded {
  bool operator==(const Unbounded&) const = default;
};

struct CavitySphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  bool operator==(const CavitySphere&) const = default;
};

/// Closed triangulated cavity wall read from an OFF file.
struct CavityMesh {
  std::string path;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  bool operator==(const CavityMesh& o) const {
    return path == o.path && vertices == o.vertices && triangles == o.triangles;
  }
};

using Domain = std::variant<Unbounded, CavitySphere, CavityMesh>;

struct Configuration {
  std::vector<ShapeParams> bubbles;
  Domain domain = Unbounded{};

  bool bounded() const { return !std::holds_alternative<Unbounded>(domain); }
  /// Total parameter dimension p.
  int dimension() const;
  /// Offset of bubble k in the flat coordinate vector.
  int offset(int bubble) const;
  /// Bubble owning flat coordinate index i.
  int owner(int index) const;
  Vector coords() const;
  Configuration with_coords(const Vector& q) const;

  bool operator==(const Configuration&) const = default;
};

/// Wall mesh of a bounded domain, normals pointing into the liquid.
SurfaceMesh wall_mesh(const Domain& domain, int level);

struct Clearance {
  enum class Kind { Pair, Wall };
  Kind kind = Kind::Pair;
  int first = 0;
  int second = -1;  // -1 for the wall
  /// Lower bound on the separation distance (negative means overlap).
  double gap = 0.0;
  bool ok = true;
};

struct AdmissibilityReport {
  bool ok = true;
  std::vector<Clearance> clearances;
  std::vector<std::string> messages;

  /// Smallest gap over all checked pairs/walls (infinity when none).
  double min_gap() const;
  /// Smallest gap relative to the smaller semi-axis involved.
  double min_relative_gap(const Configuration& config) const;
};

/// Pairwise disjointness and cavity containment. Sphere pairs are checked
/// exactly; anything involving an ellipsoid uses a separating-direction lower
/// bound on the distance, which can only err towards reporting overlap.
AdmissibilityReport check_admissible(const Configuration& config);

}  // namespace bubbledyn::shapes
