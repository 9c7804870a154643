#pragma once

#include <array>
#include <span>
#include <vector>

#include "bubbledyn/linalg.hpp"

namespace bubbledyn {

struct QuadratureNode {
  Vec3 point;
  Vec3 normal;
  double weight;
};

/// Triangulated boundary surface.
///
/// Two geometric descriptions are carried side by side. The flat panel data
/// (`centroids`, `normals`, `areas`) describe the polyhedron spanned by the
/// vertices. The collocation data (`collocation_points`, `collocation_normals`,
/// `weights`, `fine_nodes`) describe the surface the panels stand for: for a
/// mapped analytic shape this is the exact surface patch, for an imported mesh
/// it coincides with the flat panels. Boundary integrals use the latter.
///
/// Normals always point into the liquid.
struct SurfaceMesh {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  std::vector<Vec3> centroids;
  std::vector<Vec3> normals;
  std::vector<double> areas;

  std::vector<Vec3> collocation_points;
  std::vector<Vec3> collocation_normals;
  std::vector<double> weights;
  std::vector<double> diameters;

  int nodes_per_panel = 1;
  std::vector<QuadratureNode> fine_nodes;

  int size() const { return static_cast<int>(triangles.size()); }

  std::span<const QuadratureNode> panel_nodes(int panel) const {
    return {fine_nodes.data() + static_cast<std::size_t>(panel) * nodes_per_panel,
            static_cast<std::size_t>(nodes_per_panel)};
  }

  /// Area of the flat polyhedron.
  double flat_area() const;
  /// Sum of quadrature weights (area of the represented surface).
  double quadrature_area() const;
  /// Volume enclosed by the flat polyhedron, positive for either orientation.
  double enclosed_volume() const;

  /// Panels sharing at least one vertex with each panel (excluding itself).
  std::vector<std::vector<int>> vertex_neighbours() const;
};

/// Builds a flat mesh (collocation data equal to the flat panel data) from
/// vertices and triangles. Triangles are reoriented so that normals point
/// into the region `into_interior` selects: the enclosed region when true,
/// the exterior otherwise.
SurfaceMesh make_flat_mesh(std::vector<Vec3> vertices,
                           std::vector<std::array<int, 3>> triangles,
                           bool into_interior, int subdivision_level);

/// Solid angle subtended at the origin by the triangle (a, b, c).
double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace bubbledyn
