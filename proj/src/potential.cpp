#include "bubbledyn/potential.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "bubbledyn/error.hpp"
#include "bubbledyn/parallel.hpp"

namespace bubbledyn::potential {

using std::numbers::pi;

namespace {

/// Integral of 1/|x - P| over a flat triangle, P in the triangle's plane and
/// strictly inside it.
double flat_self_integral(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3* v[3] = {&a, &b, &c};
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec3& e0 = *v[k];
    const Vec3& e1 = *v[(k + 1) % 3];
    const Vec3 u = (e1 - e0).normalized();
    const double s0 = (e0 - p).dot(u);
    const double s1 = (e1 - p).dot(u);
    const double h = ((e0 - p) - s0 * u).norm();
    sum += h * (std::asinh(s1 / h) - std::asinh(s0 / h));
  }
  return sum;
}

/// Ratio between the outer and inner radius of the zone where the refined
/// and the moment-corrected rules are blended, so that the operators stay
/// smooth in the configuration.
constexpr double kBlendWidth = 1.25;

double blend(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

}  // namespace

std::shared_ptr<const Boundary> make_boundary(std::vector<SurfaceMesh> meshes,
                                              std::vector<int> owners, bool bounded) {
  auto b = std::make_shared<Boundary>();
  b->meshes = std::move(meshes);
  b->owners = std::move(owners);
  b->bounded = bounded;
  b->offsets.push_back(0);
  for (std::size_t m = 0; m < b->meshes.size(); ++m) {
    const SurfaceMesh& mesh = b->meshes[m];
    b->offsets.push_back(b->offsets.back() + mesh.size());
    b->points.insert(b->points.end(), mesh.collocation_points.begin(),
                     mesh.collocation_points.end());
    b->normals.insert(b->normals.end(), mesh.collocation_normals.begin(),
                      mesh.collocation_normals.end());
    b->weights.insert(b->weights.end(), mesh.weights.begin(), mesh.weights.end());
    b->diameters.insert(b->diameters.end(), mesh.diameters.begin(), mesh.diameters.end());
    b->panel_mesh.insert(b->panel_mesh.end(), mesh.size(), static_cast<int>(m));
    for (int j = 0; j < mesh.size(); ++j) {
      Vec3 m1 = Vec3::Zero();
      Mat3 m2 = Mat3::Zero();
      for (const auto& node : mesh.panel_nodes(j)) {
        const Vec3 e = node.point - mesh.collocation_points[j];
        m1 += node.weight * e;
        m2 += node.weight * e * e.transpose();
      }
      b->first_moments.push_back(m1);
      b->second_moments.push_back(m2);
    }
  }
  return b;
}

std::shared_ptr<const Boundary> make_boundary(const shapes::Configuration& config, int level) {
  std::vector<SurfaceMesh> meshes;
  std::vector<int> owners;
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    meshes.push_back(shapes::surface_mesh(config.bubbles[k], level));
    owners.push_back(static_cast<int>(k));
  }
  if (config.bounded()) {
    meshes.push_back(shapes::wall_mesh(config.domain, level));
    owners.push_back(-1);
  }
  return make_boundary(std::move(meshes), std::move(owners), config.bounded());
}

Vector boundary_data(const Boundary& boundary, const shapes::Configuration& config,
                     const Vector& direction) {
  if (direction.size() != config.dimension())
    throw std::invalid_argument("direction has wrong dimension");
  Vector g = Vector::Zero(boundary.panel_count());
  for (std::size_t m = 0; m < boundary.meshes.size(); ++m) {
    const int k = boundary.owners[m];
    if (k < 0) continue;
    const auto& shape = config.bubbles[k];
    const Vector seg = direction.segment(config.offset(k), shapes::dimension(shape));
    if (seg.isZero(0.0)) continue;
    std::visit(
        [&](const auto& s) {
          for (int i = boundary.offsets[m]; i < boundary.offsets[m + 1]; ++i) {
            g(i) = s.normal_velocity(seg, boundary.points[i], boundary.normals[i]);
          }
        },
        shape);
  }
  return g;
}

// ---------------------------------------------------------------------------

NeumannSolver::NeumannSolver(std::shared_ptr<const Boundary> boundary)
    : boundary_(std::move(boundary)) {
  const Boundary& b = *boundary_;
  const int n = b.panel_count();
  single_layer_.resize(n, n);
  Matrix k_prime(n, n);
  const double inv4pi = 1.0 / (4.0 * pi);

  parallel_for(0, n, [&](int i) {
    const Vec3& x = b.points[i];
    const Vec3& nx = b.normals[i];
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 d = x - b.points[j];
      const double r = d.norm();
      const double s = r / b.diameters[j];
      double g = 0.0, kp = 0.0;
      if (s < kNearFieldRatio * kBlendWidth) {
        for (const auto& node : b.nodes(j)) {
          const Vec3 dd = x - node.point;
          const double rr = dd.norm();
          g += node.weight / rr;
          kp += node.weight * dd.dot(nx) / (rr * rr * rr);
        }
      }
      if (s > kNearFieldRatio) {
        // Taylor expansion of both kernels about the collocation point of
        // the source panel, truncated after the second moment.
        const Vec3& m1 = b.first_moments[j];
        const Mat3& m2 = b.second_moments[j];
        const double r2 = r * r;
        const double r3 = r2 * r;
        const double r5 = r3 * r2;
        const double dn = d.dot(nx);
        const double tr = m2.trace();
        const double dmd = d.dot(m2 * d);
        const double g_far = b.weights[j] / r + d.dot(m1) / r3 + 0.5 * (3.0 * dmd - r2 * tr) / r5;
        const double kp_far =
            b.weights[j] * dn / r3 - (nx.dot(m1) / r3 - 3.0 * dn * d.dot(m1) / r5) +
            0.5 * (-6.0 * nx.dot(m2 * d) / r5 - 3.0 * dn * tr / r5 + 15.0 * dn * dmd / (r5 * r2));
        if (s >= kNearFieldRatio * kBlendWidth) {
          g = g_far;
          kp = kp_far;
        } else {
          const double t = blend((s / kNearFieldRatio - 1.0) / (kBlendWidth - 1.0));
          g = (1.0 - t) * g + t * g_far;
          kp = (1.0 - t) * kp + t * kp_far;
        }
      }
      single_layer_(i, j) = -g * inv4pi;
      k_prime(i, j) = kp * inv4pi;
    }
    const int m = b.panel_mesh[i];
    const SurfaceMesh& mesh = b.meshes[m];
    const int local = i - b.offsets[m];
    const auto& tri = mesh.triangles[local];
    const double flat = flat_self_integral(mesh.centroids[local], mesh.vertices[tri[0]],
                                           mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    single_layer_(i, i) = -flat * (b.weights[i] / mesh.areas[local]) * inv4pi;
  });

  // Self terms of the adjoint double layer from Gauss' identity: for y on a
  // closed surface, the flux of grad G(., y) through that surface is +1/2
  // with normals into the exterior liquid and -1/2 for the cavity wall.
  for (std::size_t m = 0; m < b.meshes.size(); ++m) {
    const double target = b.owners[m] >= 0 ? 0.5 : -0.5;
    for (int j = b.offsets[m]; j < b.offsets[m + 1]; ++j) {
      double sum = 0.0;
      for (int i = b.offsets[m]; i < b.offsets[m + 1]; ++i)
        if (i != j) sum += b.weights[i] * k_prime(i, j);
      k_prime(j, j) = target - sum / b.weights[j];
    }
  }

  neumann_ = k_prime;
  neumann_.diagonal().array() += 0.5;

  if (b.bounded) {
    // Interior Neumann problem: one-dimensional kernel and cokernel. Border
    // with zero net density and a constant multiplier column.
    Matrix bordered(n + 1, n + 1);
    bordered.topLeftCorner(n, n) = neumann_;
    bordered.topRightCorner(n, 1).setOnes();
    for (int j = 0; j < n; ++j) bordered(n, j) = b.weights[j];
    bordered(n, n) = 0.0;
    lu_.compute(bordered);
  } else {
    lu_.compute(neumann_);
  }
  const double rcond = lu_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!std::isfinite(condition_) || condition_ > 1e14) {
    std::ostringstream os;
    os << "collocation matrix is singular (condition estimate " << condition_ << ")";
    throw IllPosedProblemError(os.str(), condition_);
  }
}

PotentialSolution NeumannSolver::solve(const Vector& data) const {
  const Boundary& b = *boundary_;
  const int n = b.panel_count();
  if (data.size() != n) throw std::invalid_argument("boundary data size mismatch");
  PotentialSolution sol;
  sol.boundary = boundary_;
  sol.boundary_data = data;
  if (b.bounded) {
    double flux = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      flux += data(i) * b.weights[i];
      scale += std::abs(data(i)) * b.weights[i];
    }
    if (std::abs(flux) > kCompatibilityTolerance * scale) {
      std::ostringstream os;
      os << "boundary data violate the cavity volume constraint: net flux " << flux
         << " (relative " << flux / scale << ")";
      throw ConstraintError(os.str());
    }
    Vector rhs(n + 1);
    rhs << data, 0.0;
    const Vector x = lu_.solve(rhs);
    sol.density = x.head(n);
    sol.compatibility_multiplier = x(n);
  } else {
    sol.density = lu_.solve(data);
  }
  if (!sol.density.allFinite())
    throw IllPosedProblemError("collocation solve produced non-finite density", condition_);
  sol.boundary_potential = single_layer_ * sol.density;
  return sol;
}

PotentialSolution solve_neumann(const NeumannProblem& problem) {
  return NeumannSolver(problem.boundary).solve(problem.data);
}

FieldValues evaluate(const PotentialSolution& solution, std::span<const Vec3> points) {
  const Boundary& b = *solution.boundary;
  const int n = b.panel_count();
  FieldValues out;
  out.phi.resize(points.size());
  out.gradient.resize(points.size());
  const double inv4pi = 1.0 / (4.0 * pi);
  parallel_for(0, static_cast<int>(points.size()), [&](int p) {
    const Vec3& x = points[p];
    double phi = 0.0;
    Vec3 grad = Vec3::Zero();
    for (int j = 0; j < n; ++j) {
      const double q = solution.density(j);
      const Vec3 d = x - b.points[j];
      const double r = d.norm();
      if (r < kNearFieldRatio * b.diameters[j]) {
        for (const auto& node : b.nodes(j)) {
          const Vec3 dd = x - node.point;
          const double rr = dd.norm();
          phi -= q * node.weight / rr;
          grad += (q * node.weight / (rr * rr * rr)) * dd;
        }
      } else {
        phi -= q * b.weights[j] / r;
        grad += (q * b.weights[j] / (r * r * r)) * d;
      }
    }
    out.phi[p] = phi * inv4pi;
    out.gradient[p] = grad * inv4pi;
  });
  return out;
}

std::vector<PotentialSolution> basis_potentials(const shapes::Configuration& config, int level,
                                                const Matrix& directions) {
  const auto boundary = make_boundary(config, level);
  const NeumannSolver solver(boundary);
  std::vector<PotentialSolution> out;
  out.reserve(directions.cols());
  for (int c = 0; c < directions.cols(); ++c)
    out.push_back(solver.solve(boundary_data(*boundary, config, directions.col(c))));
  return out;
}

std::vector<PotentialSolution> basis_potentials(const shapes::Configuration& config, int level) {
  const int p = config.dimension();
  return basis_potentials(config, level, Matrix::Identity(p, p));
}

AddedMassMatrix gram_matrix(std::span<const PotentialSolution> basis, double liquid_density) {
  const int d = static_cast<int>(basis.size());
  AddedMassMatrix out;
  out.entries.resize(d, d);
  if (d == 0) return out;
  const Boundary& b = *basis.front().boundary;
  const int bubble_panels = b.bounded ? b.offsets[b.offsets.size() - 2] : b.panel_count();
  const Eigen::Map<const Vector> w(b.weights.data(), bubble_panels);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      out.entries(i, j) = -liquid_density *
                          (basis[i].boundary_potential.head(bubble_panels).array() *
                           basis[j].boundary_data.head(bubble_panels).array() * w.array())
                              .sum();
  const double scale = out.entries.cwiseAbs().maxCoeff();
  out.reciprocity_defect =
      scale > 0 ? (out.entries - out.entries.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(out.entries, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues()(0);
  out.condition_number = eig.eigenvalues()(d - 1) / out.min_eigenvalue;
  if (!out.entries.allFinite() || !(out.min_eigenvalue > 0.0)) {
    std::ostringstream os;
    os << "added-mass matrix is not positive definite (eigenvalues "
       << eig.eigenvalues().transpose() << ")";
    throw DiscretizationError(os.str(), out.min_eigenvalue);
  }
  return out;
}

AddedMassMatrix added_mass(const shapes::Configuration& config, int level, double liquid_density,
                           const Matrix& directions) {
  const auto boundary = make_boundary(config, level);
  const NeumannSolver solver(boundary);
  std::vector<PotentialSolution> basis;
  basis.reserve(directions.cols());
  for (int c = 0; c < directions.cols(); ++c)
    basis.push_back(solver.solve(boundary_data(*boundary, config, directions.col(c))));
  AddedMassMatrix out = gram_matrix(basis, liquid_density);
  out.collocation_condition = solver.condition_estimate();
  return out;
}

AddedMassMatrix added_mass(const shapes::Configuration& config, int level,
                           double liquid_density) {
  const int p = config.dimension();
  return added_mass(config, level, liquid_density, Matrix::Identity(p, p));
}

MatrixJacobian finite_difference_jacobian(const std::function<Matrix(const Vector&)>& f,
                                          const std::function<bool(const Vector&)>& admissible,
                                          const Vector& q, double step_scale,
                                          const std::vector<int>& indices) {
  MatrixJacobian out;
  out.slices.resize(q.size());
  std::optional<Matrix> centre;
  auto at_centre = [&]() -> const Matrix& {
    if (!centre) centre = f(q);
    return *centre;
  };
  std::vector<int> todo = indices;
  if (todo.empty())
    for (int k = 0; k < q.size(); ++k) todo.push_back(k);
  for (const int k : todo) {
    const double h = jacobian_fd_step(q(k), step_scale);
    Vector qp = q, qm = q;
    qp(k) += h;
    qm(k) -= h;
    const bool ok_p = admissible(qp);
    const bool ok_m = admissible(qm);
    Matrix slice;
    if (ok_p && ok_m) {
      slice = (f(qp) - f(qm)) / (2.0 * h);
    } else if (ok_p || ok_m) {
      std::ostringstream os;
      os << "coordinate " << k << ": central step leaves the admissible set, using "
         << (ok_p ? "forward" : "backward") << " difference";
      out.warnings.push_back(os.str());
      slice = ok_p ? Matrix((f(qp) - at_centre()) / h) : Matrix((at_centre() - f(qm)) / h);
    } else {
      throw CollisionError("finite-difference steps in coordinate " + std::to_string(k) +
                           " leave the admissible set on both sides");
    }
    out.slices[k] = 0.5 * (slice + slice.transpose());
  }
  return out;
}

MatrixJacobian added_mass_jacobian(const shapes::Configuration& config, int level,
                                   double liquid_density, double step_scale) {
  if (config.bounded())
    throw ConstraintError(
        "canonical added-mass Jacobian is undefined in a cavity; use constrained directions");
  auto f = [&](const Vector& q) {
    return added_mass(config.with_coords(q), level, liquid_density).entries;
  };
  auto admissible = [&](const Vector& q) {
    try {
      return shapes::check_admissible(config.with_coords(q)).ok;
    } catch (const DegenerateShapeError&) {
      return false;
    }
  };
  return finite_difference_jacobian(f, admissible, config.coords(), step_scale);
}

}  // namespace bubbledyn::potential
