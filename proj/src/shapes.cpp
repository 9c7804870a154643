#include "bubbledyn/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bubbledyn/error.hpp"
#include "bubbledyn/icosphere.hpp"

namespace bubbledyn::shapes {

using std::numbers::pi;

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

template <ShapeFamily F>
SurfaceMesh map_reference(const F& shape, int level, bool inward) {
  const ReferenceSphereMesh& ref = reference_icosphere(level);
  SurfaceMesh mesh;
  mesh.level = level;
  mesh.vertices.reserve(ref.vertices.size());
  for (const Vec3& u : ref.vertices) mesh.vertices.push_back(shape.map(u));
  mesh.triangles = ref.triangles;
  if (inward)
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);

  const int n = mesh.size();
  const double sign = inward ? -1.0 : 1.0;
  mesh.centroids.reserve(n);
  mesh.normals.reserve(n);
  mesh.areas.reserve(n);
  mesh.collocation_points.reserve(n);
  mesh.collocation_normals.reserve(n);
  mesh.weights.reserve(n);
  mesh.diameters.reserve(n);
  mesh.nodes_per_panel = ref.nodes_per_panel;
  mesh.fine_nodes.reserve(ref.node_directions.size());
  for (int t = 0; t < n; ++t) {
    const auto& [ia, ib, ic] = mesh.triangles[t];
    const Vec3& a = mesh.vertices[ia];
    const Vec3& b = mesh.vertices[ib];
    const Vec3& c = mesh.vertices[ic];
    const Vec3 cr = (b - a).cross(c - a);
    mesh.centroids.push_back((a + b + c) / 3.0);
    mesh.normals.push_back(cr.normalized());
    mesh.areas.push_back(0.5 * cr.norm());
    mesh.diameters.push_back(std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()}));

    const Vec3& u = ref.centroid_directions[t];
    mesh.collocation_points.push_back(shape.map(u));
    mesh.collocation_normals.push_back(sign * shape.normal(u));
    double w = 0.0;
    for (int k = 0; k < ref.nodes_per_panel; ++k) {
      const auto idx = static_cast<std::size_t>(t) * ref.nodes_per_panel + k;
      const Vec3& d = ref.node_directions[idx];
      const double nw = shape.area_density(d) * ref.node_solid_angles[idx];
      mesh.fine_nodes.push_back({shape.map(d), sign * shape.normal(d), nw});
      w += nw;
    }
    mesh.weights.push_back(w);
  }
  return mesh;
}

Vec3 any_perpendicular(const Vec3& u) {
  const Vec3 trial = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(trial).normalized();
}

/// Largest separation -h_a(u) - h_b(-u) over unit u found by sampling plus
/// pattern search. Any u gives a lower bound on the distance of the convex
/// hulls.
template <class A, class B>
double separation_lower_bound(const A& a, const B& b, const Vec3& hint) {
  auto sep = [&](const Vec3& u) { return -a.support(u) - b.support(-u); };
  Vec3 best = hint.norm() > 0 ? hint.normalized() : Vec3::UnitX();
  double best_val = sep(best);
  for (const Vec3& u : reference_icosphere(2).vertices) {
    const double v = sep(u);
    if (v > best_val) {
      best_val = v;
      best = u;
    }
  }
  double step = 0.1;
  while (step > 1e-10) {
    const Vec3 t1 = any_perpendicular(best);
    const Vec3 t2 = best.cross(t1);
    bool moved = false;
    for (const Vec3& dir : {t1, Vec3(-t1), t2, Vec3(-t2)}) {
      const Vec3 cand = (best + step * dir).normalized();
      const double v = sep(cand);
      if (v > best_val) {
        best_val = v;
        best = cand;
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best_val;
}

// Closest point on triangle (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double max_semi_axis(const ShapeParams& m) {
  return std::visit([](const auto& s) { return s.max_semi_axis(); }, m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Sphere

SphereParams SphereParams::make(const Vec3& center, double radius) {
  if (!finite(center) || !std::isfinite(radius))
    throw DegenerateShapeError("sphere parameters must be finite");
  if (!(radius > 0.0))
    throw DegenerateShapeError("sphere radius must be positive, got " + std::to_string(radius));
  return SphereParams{center, radius};
}

SphereParams SphereParams::from_coords(const Vector& q) {
  return make(q.head<3>(), q(3));
}

Vector SphereParams::coords() const {
  Vector q(kDim);
  q << center, radius;
  return q;
}

double SphereParams::normal_velocity(const Vector& mdot, const Vec3&, const Vec3& n) const {
  return mdot.head<3>().dot(n) + mdot(3);
}

double SphereParams::volume() const { return 4.0 / 3.0 * pi * radius * radius * radius; }
double SphereParams::area() const { return 4.0 * pi * radius * radius; }

Vector SphereParams::volume_gradient() const {
  Vector g = Vector::Zero(kDim);
  g(3) = 4.0 * pi * radius * radius;
  return g;
}

Vector SphereParams::area_gradient() const {
  Vector g = Vector::Zero(kDim);
  g(3) = 8.0 * pi * radius;
  return g;
}

// ---------------------------------------------------------------------------
// Ellipsoid

Mat3 symmetric_from_coords(const Vector& six) {
  Mat3 s;
  s << six(0), six(1), six(2), six(1), six(3), six(4), six(2), six(4), six(5);
  return s;
}

Vector coords_from_symmetric(const Mat3& s) {
  Vector six(6);
  six << s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2);
  return six;
}

EllipsoidParams EllipsoidParams::make(const Vec3& center, const Mat3& shape) {
  if (!finite(center) || !shape.allFinite())
    throw DegenerateShapeError("ellipsoid parameters must be finite");
  const double scale = shape.norm();
  if ((shape - shape.transpose()).norm() > 1e-12 * std::max(scale, 1.0))
    throw DegenerateShapeError("ellipsoid shape matrix is not symmetric");
  const Mat3 sym = 0.5 * (shape + shape.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(sym, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues();
  if (!(ev.minCoeff() > kDegeneracyRatio * ev.maxCoeff()) || !(ev.maxCoeff() > 0.0)) {
    std::ostringstream os;
    os << "ellipsoid shape matrix is degenerate (eigenvalues " << ev.transpose() << ")";
    throw DegenerateShapeError(os.str());
  }
  return EllipsoidParams{center, sym};
}

EllipsoidParams EllipsoidParams::from_coords(const Vector& q) {
  return make(q.head<3>(), symmetric_from_coords(q.tail<6>()));
}

Vector EllipsoidParams::coords() const {
  Vector q(kDim);
  q << center, coords_from_symmetric(shape);
  return q;
}

Vec3 EllipsoidParams::normal(const Vec3& unit) const {
  return shape.ldlt().solve(unit).normalized();
}

double EllipsoidParams::area_density(const Vec3& unit) const {
  // dsigma = det(S) |S^-T y| dOmega for x = c + S y.
  return shape.determinant() * shape.ldlt().solve(unit).norm();
}

double EllipsoidParams::normal_velocity(const Vector& mdot, const Vec3& x, const Vec3& n) const {
  const Mat3 sdot = symmetric_from_coords(mdot.tail<6>());
  const Vec3 y = shape.ldlt().solve(x - center);
  return mdot.head<3>().dot(n) + (sdot * y).dot(n);
}

double EllipsoidParams::volume() const { return 4.0 / 3.0 * pi * shape.determinant(); }

double EllipsoidParams::area() const {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(shape, Eigen::EigenvaluesOnly);
  const double c = eig.eigenvalues()(0);
  const double b = eig.eigenvalues()(1);
  const double a = eig.eigenvalues()(2);
  if (a - c <= 1e-14 * a) return 4.0 * pi * a * a;
  const double phi = std::acos(c / a);
  const double s = std::sin(phi);
  const double k2 = a * a * (b * b - c * c) / (b * b * (a * a - c * c));
  const double k = std::sqrt(std::clamp(k2, 0.0, 1.0));
  const double ee = std::ellint_2(k, phi);
  const double ff = std::ellint_1(k, phi);
  return 2.0 * pi * c * c + 2.0 * pi * a * b / s * (ee * s * s + ff * (1.0 - s * s));
}

Vector EllipsoidParams::volume_gradient() const {
  // d det / d s_ij = cofactor; off-diagonal coordinates move two entries.
  const Mat3 cof = shape.determinant() * shape.inverse();
  Vector g = Vector::Zero(kDim);
  g.tail<6>() << cof(0, 0), 2 * cof(0, 1), 2 * cof(0, 2), cof(1, 1), 2 * cof(1, 2), cof(2, 2);
  g *= 4.0 / 3.0 * pi;
  return g;
}

Vector EllipsoidParams::area_gradient() const {
  Vector g = Vector::Zero(kDim);
  const Vector q = coords();
  for (int i = 3; i < kDim; ++i) {
    const double h = measure_fd_step(q(i));
    Vector qp = q, qm = q;
    qp(i) += h;
    qm(i) -= h;
    g(i) = (from_coords(qp).area() - from_coords(qm).area()) / (2.0 * h);
  }
  return g;
}

double EllipsoidParams::max_semi_axis() const {
  return Eigen::SelfAdjointEigenSolver<Mat3>(shape, Eigen::EigenvaluesOnly).eigenvalues()(2);
}

double EllipsoidParams::min_semi_axis() const {
  return Eigen::SelfAdjointEigenSolver<Mat3>(shape, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Variant helpers

int dimension(const ShapeParams& m) {
  return std::visit([](const auto& s) { return std::decay_t<decltype(s)>::kDim; }, m);
}

Vector coords(const ShapeParams& m) {
  return std::visit([](const auto& s) { return s.coords(); }, m);
}

ShapeParams with_coords(const ShapeParams& like, const Vector& q) {
  return std::visit(
      [&](const auto& s) -> ShapeParams { return std::decay_t<decltype(s)>::from_coords(q); },
      like);
}

Vec3 center(const ShapeParams& m) {
  return std::visit([](const auto& s) { return s.center; }, m);
}

double min_semi_axis(const ShapeParams& m) {
  return std::visit([](const auto& s) { return s.min_semi_axis(); }, m);
}

Vector sphere_tangent(const Vec3& center_rate, double radius_rate) {
  Vector t(4);
  t << center_rate, radius_rate;
  return t;
}

Vector ellipsoid_tangent(const Vec3& center_rate, const Mat3& shape_rate) {
  if ((shape_rate - shape_rate.transpose()).norm() > 1e-12 * std::max(shape_rate.norm(), 1.0))
    throw DegenerateShapeError("ellipsoid shape rate must be symmetric");
  Vector t(9);
  t << center_rate, coords_from_symmetric(0.5 * (shape_rate + shape_rate.transpose()));
  return t;
}

double normal_velocity(const ShapeParams& m, const Vector& mdot, const Vec3& x, const Vec3& n) {
  return std::visit([&](const auto& s) { return s.normal_velocity(mdot, x, n); }, m);
}

Measures measures(const ShapeParams& m) {
  return std::visit(
      [](const auto& s) {
        return Measures{s.volume(), s.area(), s.volume_gradient(), s.area_gradient()};
      },
      m);
}

SurfaceMesh surface_mesh(const ShapeParams& m, int level) {
  return std::visit([level](const auto& s) { return map_reference(s, level, false); }, m);
}

// ---------------------------------------------------------------------------
// Configuration

int Configuration::dimension() const {
  int p = 0;
  for (const auto& b : bubbles) p += shapes::dimension(b);
  return p;
}

int Configuration::offset(int bubble) const {
  int p = 0;
  for (int k = 0; k < bubble; ++k) p += shapes::dimension(bubbles[k]);
  return p;
}

int Configuration::owner(int index) const {
  int p = 0;
  for (int k = 0; k < static_cast<int>(bubbles.size()); ++k) {
    p += shapes::dimension(bubbles[k]);
    if (index < p) return k;
  }
  throw std::out_of_range("coordinate index out of range");
}

Vector Configuration::coords() const {
  Vector q(dimension());
  int off = 0;
  for (const auto& b : bubbles) {
    const int d = shapes::dimension(b);
    q.segment(off, d) = shapes::coords(b);
    off += d;
  }
  return q;
}

Configuration Configuration::with_coords(const Vector& q) const {
  Configuration out{{}, domain};
  out.bubbles.reserve(bubbles.size());
  int off = 0;
  for (const auto& b : bubbles) {
    const int d = shapes::dimension(b);
    out.bubbles.push_back(shapes::with_coords(b, q.segment(off, d)));
    off += d;
  }
  return out;
}

SurfaceMesh wall_mesh(const Domain& domain, int level) {
  if (const auto* cs = std::get_if<CavitySphere>(&domain))
    return map_reference(SphereParams::make(cs->center, cs->radius), level, true);
  if (const auto* cm = std::get_if<CavityMesh>(&domain))
    return make_flat_mesh(cm->vertices, cm->triangles, true, kNearFieldSubdivision);
  throw std::logic_error("unbounded domain has no wall");
}

double AdmissibilityReport::min_gap() const {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& c : clearances) g = std::min(g, c.gap);
  return g;
}

double AdmissibilityReport::min_relative_gap(const Configuration& config) const {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& c : clearances) {
    double scale = min_semi_axis(config.bubbles[c.first]);
    if (c.second >= 0) scale = std::min(scale, min_semi_axis(config.bubbles[c.second]));
    g = std::min(g, c.gap / scale);
  }
  return g;
}

AdmissibilityReport check_admissible(const Configuration& config) {
  AdmissibilityReport report;
  const int n = static_cast<int>(config.bubbles.size());
  auto record = [&](Clearance c) {
    c.ok = c.gap > 0.0;
    if (!c.ok) {
      report.ok = false;
      std::ostringstream os;
      if (c.kind == Clearance::Kind::Pair)
        os << "bubbles " << c.first << " and " << c.second << " overlap (gap " << c.gap << ")";
      else
        os << "bubble " << c.first << " is not strictly inside the cavity (gap " << c.gap << ")";
      report.messages.push_back(os.str());
    }
    report.clearances.push_back(c);
  };

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = config.bubbles[i];
      const auto& b = config.bubbles[j];
      double gap;
      const auto* sa = std::get_if<SphereParams>(&a);
      const auto* sb = std::get_if<SphereParams>(&b);
      if (sa && sb) {
        gap = (sa->center - sb->center).norm() - sa->radius - sb->radius;
      } else {
        const Vec3 hint = center(b) - center(a);
        gap = std::visit([&](const auto& x, const auto& y) {
          return separation_lower_bound(x, y, hint);
        }, a, b);
      }
      record({Clearance::Kind::Pair, i, j, gap, true});
    }
  }

  if (const auto* cs = std::get_if<CavitySphere>(&config.domain)) {
    for (int i = 0; i < n; ++i) {
      const double reach = (center(config.bubbles[i]) - cs->center).norm() +
                           max_semi_axis(config.bubbles[i]);
      record({Clearance::Kind::Wall, i, -1, cs->radius - reach, true});
    }
  } else if (const auto* cm = std::get_if<CavityMesh>(&config.domain)) {
    for (int i = 0; i < n; ++i) {
      const Vec3 c = center(config.bubbles[i]);
      double winding = 0.0;
      double dist = std::numeric_limits<double>::infinity();
      for (const auto& [ia, ib, ic] : cm->triangles) {
        const Vec3 a = cm->vertices[ia] - c, b = cm->vertices[ib] - c, d = cm->vertices[ic] - c;
        const double s = a.dot(b.cross(d)) >= 0 ? 1.0 : -1.0;
        winding += s * solid_angle(a, b, d);
        dist = std::min(dist, (closest_on_triangle(c, cm->vertices[ia], cm->vertices[ib],
                                                   cm->vertices[ic]) - c).norm());
      }
      const bool inside = std::abs(winding) > 2.0 * pi;
      const double gap = inside ? dist - max_semi_axis(config.bubbles[i])
                                : -(dist + max_semi_axis(config.bubbles[i]));
      record({Clearance::Kind::Wall, i, -1, gap, true});
    }
  }
  return report;
}

}  // namespace bubbledyn::shapes
