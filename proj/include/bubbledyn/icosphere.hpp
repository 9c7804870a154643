#pragma once

#include <array>
#include <vector>

#include "bubbledyn/linalg.hpp"

namespace bubbledyn {

/// Subdivision depth used for near-field panel quadrature (4^depth nodes).
inline constexpr int kNearFieldSubdivision = 3;
inline constexpr int kMaxMeshLevel = 6;

/// Recursively subdivided icosahedron on the unit sphere, plus the
/// per-panel quadrature directions used to integrate over the spherical
/// triangle each flat panel stands for.
struct ReferenceSphereMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Normalised flat centroid of each panel.
  std::vector<Vec3> centroid_directions;
  /// Exact solid angle of each spherical panel.
  std::vector<double> solid_angles;
  int nodes_per_panel = 1;
  std::vector<Vec3> node_directions;
  std::vector<double> node_solid_angles;
};

/// Immutable reference mesh for `level` (0 <= level <= kMaxMeshLevel).
/// Built once per level and shared.
const ReferenceSphereMesh& reference_icosphere(int level);

/// Splits a triangle into 4^depth congruent sub-triangles.
std::vector<std::array<Vec3, 3>> subdivide_triangle(const Vec3& a, const Vec3& b,
                                                    const Vec3& c, int depth);

}  // namespace bubbledyn
