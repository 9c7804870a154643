#include "bubbledyn/icosphere.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#include "bubbledyn/surface_mesh.hpp"

namespace bubbledyn {
namespace {

ReferenceSphereMesh build(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoints;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& [a, b, c] : f) {
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }

  ReferenceSphereMesh mesh;
  mesh.level = level;
  mesh.vertices = std::move(v);
  mesh.triangles = std::move(f);
  const int npp = 1 << (2 * kNearFieldSubdivision);
  mesh.nodes_per_panel = npp;
  const auto n = mesh.triangles.size();
  mesh.centroid_directions.reserve(n);
  mesh.solid_angles.reserve(n);
  mesh.node_directions.reserve(n * npp);
  mesh.node_solid_angles.reserve(n * npp);
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    mesh.centroid_directions.push_back(((a + b + c) / 3.0).normalized());
    mesh.solid_angles.push_back(solid_angle(a, b, c));
    for (const auto& sub : subdivide_triangle(a, b, c, kNearFieldSubdivision)) {
      mesh.node_directions.push_back(((sub[0] + sub[1] + sub[2]) / 3.0).normalized());
      mesh.node_solid_angles.push_back(solid_angle(sub[0], sub[1], sub[2]));
    }
  }
  return mesh;
}

}  // namespace

const ReferenceSphereMesh& reference_icosphere(int level) {
  if (level < 0 || level > kMaxMeshLevel)
    throw std::out_of_range("mesh level " + std::to_string(level) + " outside [0, " +
                            std::to_string(kMaxMeshLevel) + "]");
  static std::array<std::once_flag, kMaxMeshLevel + 1> once;
  static std::array<std::unique_ptr<ReferenceSphereMesh>, kMaxMeshLevel + 1> cache;
  std::call_once(once[level], [level] {
    cache[level] = std::make_unique<ReferenceSphereMesh>(build(level));
  });
  return *cache[level];
}

std::vector<std::array<Vec3, 3>> subdivide_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                                                    int depth) {
  std::vector<std::array<Vec3, 3>> tris{{a, b, c}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::array<Vec3, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& [p, q, r] : tris) {
      const Vec3 pq = 0.5 * (p + q), qr = 0.5 * (q + r), rp = 0.5 * (r + p);
      next.push_back({p, pq, rp});
      next.push_back({q, qr, pq});
      next.push_back({r, rp, qr});
      next.push_back({pq, qr, rp});
    }
    tris = std::move(next);
  }
  return tris;
}

}  // namespace bubbledyn
