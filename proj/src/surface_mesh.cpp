#include "bubbledyn/surface_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bubbledyn/icosphere.hpp"

namespace bubbledyn {

double SurfaceMesh::flat_area() const { return std::accumulate(areas.begin(), areas.end(), 0.0); }

double SurfaceMesh::quadrature_area() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double SurfaceMesh::enclosed_volume() const {
  double six_v = 0.0;
  for (const auto& [a, b, c] : triangles) six_v += vertices[a].dot(vertices[b].cross(vertices[c]));
  return std::abs(six_v) / 6.0;
}

std::vector<std::vector<int>> SurfaceMesh::vertex_neighbours() const {
  std::vector<std::vector<int>> by_vertex(vertices.size());
  for (int t = 0; t < size(); ++t)
    for (int v : triangles[t]) by_vertex[v].push_back(t);
  std::vector<std::vector<int>> result(triangles.size());
  for (int t = 0; t < size(); ++t) {
    auto& nb = result[t];
    for (int v : triangles[t])
      for (int s : by_vertex[v])
        if (s != t) nb.push_back(s);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return result;
}

double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom & Strackee.
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
  return 2.0 * std::atan2(num, den);
}

SurfaceMesh make_flat_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                           bool into_interior, int subdivision_level) {
  SurfaceMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);

  // Orientation from the signed volume: positive means normals point out.
  double six_v = 0.0;
  for (const auto& [a, b, c] : mesh.triangles)
    six_v += mesh.vertices[a].dot(mesh.vertices[b].cross(mesh.vertices[c]));
  const bool outward = six_v > 0.0;
  if (outward == into_interior)
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);

  const int n = mesh.size();
  const int npp = 1 << (2 * subdivision_level);
  mesh.nodes_per_panel = npp;
  mesh.fine_nodes.reserve(static_cast<std::size_t>(n) * npp);
  for (const auto& [ia, ib, ic] : mesh.triangles) {
    const Vec3& a = mesh.vertices[ia];
    const Vec3& b = mesh.vertices[ib];
    const Vec3& c = mesh.vertices[ic];
    const Vec3 cr = (b - a).cross(c - a);
    const double area = 0.5 * cr.norm();
    const Vec3 centroid = (a + b + c) / 3.0;
    mesh.centroids.push_back(centroid);
    mesh.normals.push_back(cr.normalized());
    mesh.areas.push_back(area);
    mesh.collocation_points.push_back(centroid);
    mesh.collocation_normals.push_back(cr.normalized());
    mesh.weights.push_back(area);
    mesh.diameters.push_back(std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()}));
    for (const auto& sub : subdivide_triangle(a, b, c, subdivision_level))
      mesh.fine_nodes.push_back({(sub[0] + sub[1] + sub[2]) / 3.0, cr.normalized(), area / npp});
  }
  mesh.level = 0;
  return mesh;
}

}  // namespace bubbledyn
