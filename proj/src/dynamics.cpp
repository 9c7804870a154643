#include "bubbledyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bubbledyn/error.hpp"

namespace bubbledyn::dynamics {

using std::numbers::pi;
using shapes::Configuration;

namespace {

Vector flux_covector(const Configuration& config) {
  Vector ell(config.dimension());
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    const Vector g =
        std::visit([](const auto& s) { return s.volume_gradient(); }, config.bubbles[k]);
    ell.segment(config.offset(static_cast<int>(k)), g.size()) = g;
  }
  return ell;
}

double total_volume(const Configuration& config) {
  double v = 0.0;
  for (const auto& b : config.bubbles)
    v += std::visit([](const auto& s) { return s.volume(); }, b);
  return v;
}

/// Second derivative of the total volume along a constant-rate path. Both
/// volume formulas are cubic polynomials, so the symmetric second difference
/// with unit step is exact.
double volume_second_derivative(const Configuration& config, const Vector& rate) {
  double acc = 0.0;
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    const Vector m = shapes::coords(config.bubbles[k]);
    const Vector dm = rate.segment(config.offset(static_cast<int>(k)), m.size());
    if (std::holds_alternative<shapes::SphereParams>(config.bubbles[k])) {
      const double r = m(3), dr = dm(3);
      auto v = [](double x) { return 4.0 / 3.0 * pi * x * x * x; };
      acc += v(r + dr) + v(r - dr) - 2.0 * v(r);
    } else {
      const Mat3 S = shapes::symmetric_from_coords(m.tail(6));
      const Mat3 dS = shapes::symmetric_from_coords(dm.tail(6));
      acc += 4.0 / 3.0 * pi *
             ((S + dS).determinant() + (S - dS).determinant() - 2.0 * S.determinant());
    }
  }
  return acc;
}

Vec3 point_velocity(const shapes::ShapeParams& m, const Vector& rate, const Vec3& x) {
  if (const auto* s = std::get_if<shapes::SphereParams>(&m))
    return rate.head<3>() + rate(3) * (x - s->center) / s->radius;
  const auto& e = std::get<shapes::EllipsoidParams>(m);
  const Mat3 dS = shapes::symmetric_from_coords(rate.tail(6));
  return rate.head<3>() + dS * e.shape.llt().solve(x - e.center);
}

bool is_admissible(const Configuration& config) {
  return shapes::check_admissible(config).ok;
}

/// Coordinates on the configuration manifold. Unbounded: the canonical
/// coordinates. In a cavity the coordinate with the largest flux weight is
/// dependent and recovered from the total volume.
class Chart {
public:
  explicit Chart(const Configuration& reference) : reference_(reference) {
    full_ = reference.dimension();
    if (!reference.bounded()) return;
    const Vector ell = flux_covector(reference);
    if (ell.cwiseAbs().maxCoeff() == 0.0)
      throw ConstraintError("cavity flux covector vanishes; configuration is not generic");
    ell.cwiseAbs().maxCoeff(&dependent_);
    volume_ = total_volume(reference);
    guess_ = reference.coords()(dependent_);
  }

  bool constrained() const { return dependent_ >= 0; }
  int dimension() const { return constrained() ? full_ - 1 : full_; }
  int dependent() const { return dependent_; }

  Vector reduce(const Vector& q) const {
    if (!constrained()) return q;
    Vector z(full_ - 1);
    z << q.head(dependent_), q.tail(full_ - dependent_ - 1);
    return z;
  }

  Configuration configuration(const Vector& z) const {
    if (!constrained()) return reference_.with_coords(z);
    Vector q(full_);
    q << z.head(dependent_), guess_, z.tail(full_ - dependent_ - 1);
    for (int it = 0; it < 60; ++it) {
      const Configuration c = reference_.with_coords(q);
      const double f = total_volume(c) - volume_;
      const double df = flux_covector(c)(dependent_);
      if (df == 0.0) break;
      const double step = f / df;
      q(dependent_) -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(q(dependent_)))) {
        guess_ = q(dependent_);
        return reference_.with_coords(q);
      }
    }
    throw ConstraintError("cannot restore the cavity volume constraint");
  }

  Matrix jacobian(const Configuration& config) const {
    if (!constrained()) return Matrix::Identity(full_, full_);
    const Vector ell = flux_covector(config);
    Matrix J = Matrix::Zero(full_, full_ - 1);
    for (int k = 0, col = 0; k < full_; ++k) {
      if (k == dependent_) continue;
      J(k, col) = 1.0;
      J(dependent_, col) = -ell(k) / ell(dependent_);
      ++col;
    }
    return J;
  }

  /// Acceleration of the dependent coordinate not captured by J z''.
  Vector curvature_term(const Configuration& config, const Vector& velocity) const {
    Vector out = Vector::Zero(full_);
    if (constrained())
      out(dependent_) =
          -volume_second_derivative(config, velocity) / flux_covector(config)(dependent_);
    return out;
  }

private:
  Configuration reference_;
  int full_ = 0;
  int dependent_ = -1;
  double volume_ = 0.0;
  mutable double guess_ = 0.0;
};

struct Evaluation {
  Matrix jacobian;
  potential::AddedMassMatrix mass;
  gas::Energy energy;
  Vector z_ddot;
  Vector q_ddot;
  std::vector<std::string> warnings;
};

class System {
public:
  System(const Scenario& scenario, const Chart& chart) : scenario_(scenario), chart_(chart) {}

  potential::AddedMassMatrix mass(const Configuration& config, const Matrix& J) const {
    return potential::added_mass(config, scenario_.solver.mesh_level,
                                 scenario_.model.liquid_density, J);
  }

  Evaluation evaluate(const Configuration& config, const Vector& z_dot) const {
    Evaluation ev;
    ev.jacobian = chart_.jacobian(config);
    ev.mass = mass(config, ev.jacobian);
    ev.energy = gas::potential_energy(scenario_.model, config);
    const int d = chart_.dimension();
    const Vector z = chart_.reduce(config.coords());

    // Rigid translation of every bubble leaves the unbounded problem
    // unchanged, so the last bubble's centre slices follow from the others.
    std::vector<int> indices;
    const int last = static_cast<int>(config.bubbles.size()) - 1;
    const bool translation_invariant = !config.bounded();
    for (int k = 0; k < d; ++k)
      if (!(translation_invariant && k >= config.offset(last) && k < config.offset(last) + 3))
        indices.push_back(k);

    auto f = [&](const Vector& zz) {
      const Configuration c = chart_.configuration(zz);
      return mass(c, chart_.jacobian(c)).entries;
    };
    auto admissible = [&](const Vector& zz) {
      try {
        return is_admissible(chart_.configuration(zz));
      } catch (const DegenerateShapeError&) {
        return false;
      } catch (const ConstraintError&) {
        return false;
      }
    };
    std::vector<Matrix> slices;
    if (z_dot.squaredNorm() > 0.0) {
      auto jac =
          potential::finite_difference_jacobian(f, admissible, z, scenario_.solver.fd_step, indices);
      slices = std::move(jac.slices);
      ev.warnings = std::move(jac.warnings);
      if (translation_invariant) {
        for (int a = 0; a < 3; ++a) {
          Matrix sum = Matrix::Zero(d, d);
          for (int k = 0; k < last; ++k) sum += slices[config.offset(k) + a];
          slices[config.offset(last) + a] = -sum;
        }
      }
    }

    Vector rhs = -ev.jacobian.transpose() * ev.energy.gradient;
    if (!slices.empty()) {
      for (int k = 0; k < d; ++k) {
        rhs -= slices[k] * z_dot * z_dot(k);
        rhs(k) += 0.5 * z_dot.dot(slices[k] * z_dot);
      }
    }
    const Eigen::LLT<Matrix> llt(ev.mass.entries);
    if (llt.info() != Eigen::Success)
      throw DiscretizationError("reduced added-mass matrix is not positive definite",
                                ev.mass.min_eigenvalue);
    ev.z_ddot = llt.solve(rhs);
    const Vector q_dot = ev.jacobian * z_dot;
    ev.q_ddot = ev.jacobian * ev.z_ddot + chart_.curvature_term(config, q_dot);
    return ev;
  }

private:
  const Scenario& scenario_;
  const Chart& chart_;
};

void require_admissible(const Configuration& config) {
  const auto report = shapes::check_admissible(config);
  if (!report.ok) {
    std::string msg = "configuration is not admissible";
    for (const auto& m : report.messages) msg += ": " + m;
    throw CollisionError(msg);
  }
}

/// Tangential gradient of panel values by a quadratic least-squares fit over
/// the panels sharing a vertex.
std::vector<Vec3> tangential_gradients(const SurfaceMesh& mesh, const Vector& values) {
  const auto neighbours = mesh.vertex_neighbours();
  std::vector<Vec3> out(mesh.size());
  for (int j = 0; j < mesh.size(); ++j) {
    const Vec3& x = mesh.collocation_points[j];
    const Vec3& n = mesh.collocation_normals[j];
    const Vec3 t1 = (std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(n).normalized();
    const Vec3 t2 = n.cross(t1);
    const auto& nb = neighbours[j];
    Matrix P(nb.size(), 5);
    Vector rhs(nb.size());
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const Vec3 e = mesh.collocation_points[nb[k]] - x;
      const double u = e.dot(t1), v = e.dot(t2);
      P.row(k) << u, v, u * u, u * v, v * v;
      rhs(k) = values(nb[k]) - values(j);
    }
    const Vector c = P.colPivHouseholderQr().solve(rhs);
    out[j] = c(0) * t1 + c(1) * t2;
  }
  return out;
}

Termination termination_from(const std::exception_ptr& error) {
  if (!error) return Termination::SolverFailure;
  try {
    std::rethrow_exception(error);
  } catch (const CollisionError&) {
    return Termination::Collision;
  } catch (const DegenerateShapeError&) {
    return Termination::DegenerateShape;
  } catch (...) {
    return Termination::SolverFailure;
  }
}

std::string message_of(const std::exception_ptr& error) {
  if (!error) return {};
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

bool single_unbounded_sphere(const Configuration& config) {
  return !config.bounded() && config.bubbles.size() == 1 &&
         std::holds_alternative<shapes::SphereParams>(config.bubbles[0]);
}

}  // namespace

ConstraintBasis constraint_basis(const Configuration& config) {
  ConstraintBasis out;
  const int p = config.dimension();
  if (!config.bounded()) {
    out.basis = Matrix::Identity(p, p);
    return out;
  }
  out.flux = flux_covector(config);
  if (out.flux.cwiseAbs().maxCoeff() == 0.0)
    throw ConstraintError("cavity flux covector vanishes; configuration is not generic");
  const Eigen::HouseholderQR<Matrix> qr(Matrix(out.flux));
  const Matrix Q = qr.householderQ() * Matrix::Identity(p, p);
  out.basis = Q.rightCols(p - 1);
  return out;
}

void check_velocity(const Configuration& config, const Vector& velocity) {
  if (velocity.size() != config.dimension())
    throw std::invalid_argument("velocity has wrong dimension");
  if (!config.bounded()) return;
  const Vector ell = flux_covector(config);
  const double flux = ell.dot(velocity);
  if (std::abs(flux) > 1e-9 * ell.norm() * velocity.norm()) {
    std::ostringstream os;
    os << "initial velocity changes the total bubble volume inside the cavity (rate " << flux
       << ")";
    throw ConstraintError(os.str());
  }
}

Vector eom_rhs(const Scenario& scenario, const State& state) {
  require_admissible(state.config);
  check_velocity(state.config, state.velocity);
  const Chart chart(state.config);
  const System system(scenario, chart);
  return system.evaluate(state.config, chart.reduce(state.velocity)).q_ddot;
}

Energies energies(const Scenario& scenario, const State& state) {
  const Chart chart(state.config);
  const System system(scenario, chart);
  const Vector z_dot = chart.reduce(state.velocity);
  Energies e;
  e.kinetic = 0.5 * z_dot.dot(system.mass(state.config, chart.jacobian(state.config)).entries * z_dot);
  e.potential = gas::potential_energy(scenario.model, state.config).value;
  return e;
}

double boundary_residual(const Scenario& scenario, const State& state, const Vector& acceleration,
                         std::optional<int> level_opt, double epsilon) {
  const int level = level_opt.value_or(scenario.solver.mesh_level);
  const Configuration& config = state.config;
  const Chart chart(config);
  const Matrix J = chart.jacobian(config);
  const Vector z = chart.reduce(config.coords());
  const Vector z_dot = chart.reduce(state.velocity);
  const Vector z_ddot = chart.reduce(acceleration);
  const double rho = scenario.model.liquid_density;

  const auto boundary = potential::make_boundary(config, level);
  const potential::NeumannSolver solver(boundary);
  const Vector q_dot = J * z_dot;
  const auto velocity_potential = solver.solve(potential::boundary_data(*boundary, config, q_dot));
  const auto accel_potential =
      solver.solve(potential::boundary_data(*boundary, config, J * z_ddot));

  Vector dphi_dt_mesh = accel_potential.boundary_potential;
  const double speed = z_dot.cwiseAbs().maxCoeff();
  if (speed > 0.0) {
    const double tau = epsilon * (1.0 + z.cwiseAbs().maxCoeff()) / speed;
    auto shifted = [&](double sign) {
      const Configuration c = chart.configuration(z + sign * tau * z_dot);
      const auto b = potential::make_boundary(c, level);
      const potential::NeumannSolver s(b);
      return s.solve(potential::boundary_data(*b, c, chart.jacobian(c) * z_dot)).boundary_potential;
    };
    dphi_dt_mesh += (shifted(1.0) - shifted(-1.0)) / (2.0 * tau);
  }

  const auto pressures = gas::bubble_pressures(scenario.model, config);
  const int bubble_meshes = static_cast<int>(config.bubbles.size());
  Vector p_minus_pk = Vector::Zero(boundary->panel_count());
  double area = 0.0;
  for (int m = 0; m < bubble_meshes; ++m) {
    const SurfaceMesh& mesh = boundary->meshes[m];
    const int off = boundary->offsets[m];
    const Vector local = velocity_potential.boundary_potential.segment(off, mesh.size());
    const auto grads = tangential_gradients(mesh, local);
    const Vector rate = q_dot.segment(config.offset(m), shapes::dimension(config.bubbles[m]));
    for (int j = 0; j < mesh.size(); ++j) {
      const int i = off + j;
      const double g = velocity_potential.boundary_data(i);
      const Vec3 grad = grads[j] + g * mesh.collocation_normals[j];
      const Vec3 w = point_velocity(config.bubbles[m], rate, mesh.collocation_points[j]);
      const double dphi_dt = dphi_dt_mesh(i) - w.dot(grad);
      const double p = scenario.model.p_infinity - rho * (dphi_dt + 0.5 * grad.squaredNorm());
      p_minus_pk(i) = p - pressures[m];
      area += mesh.weights[j];
    }
  }

  double scale = scenario.model.p_infinity;
  for (const double pk : pressures) scale = std::max(scale, pk);
  scale *= area;

  double worst = 0.0;
  for (int col = 0; col < J.cols(); ++col) {
    const Vector g = potential::boundary_data(*boundary, config, J.col(col));
    double r = 0.0;
    for (int i = 0; i < boundary->offsets[bubble_meshes]; ++i)
      r += p_minus_pk(i) * g(i) * boundary->weights[i];
    if (scenario.model.surface_tension != 0.0) {
      for (int k = 0; k < bubble_meshes; ++k) {
        const auto meas = shapes::measures(config.bubbles[k]);
        r += scenario.model.surface_tension *
             meas.d_area.dot(J.col(col).segment(config.offset(k), meas.d_area.size()));
      }
    }
    worst = std::max(worst, std::abs(r));
  }
  return worst / scale;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::Collision: return "collision";
    case Termination::DegenerateShape: return "degenerate-shape";
    case Termination::SolverFailure: return "solver-failure";
  }
  return "unknown";
}

double characteristic_period(const Scenario& scenario) {
  if (scenario.initial.bubbles.empty() || scenario.model.gases.empty()) return 0.0;
  const double vol =
      std::visit([](const auto& s) { return s.volume(); }, scenario.initial.bubbles[0]);
  const double r = std::cbrt(3.0 * vol / (4.0 * pi));
  const auto f = reference::minnaert_frequency(scenario.model.gases[0], scenario.model.p_infinity,
                                               scenario.model.liquid_density, r);
  return f.omega > 0.0 ? 2.0 * pi / f.omega : 0.0;
}

Trajectory integrate(const Scenario& scenario) {
  require_admissible(scenario.initial);
  check_velocity(scenario.initial, scenario.initial_velocity);

  Trajectory traj;
  traj.initial = scenario.initial;
  const Chart chart(scenario.initial);
  const System system(scenario, chart);
  const int d = chart.dimension();

  Vector y0(2 * d);
  y0 << chart.reduce(scenario.initial.coords()), chart.reduce(scenario.initial_velocity);

  auto rhs = [&](double, const Vector& y) {
    const Configuration c = chart.configuration(y.head(d));
    require_admissible(c);
    const Evaluation ev = system.evaluate(c, y.tail(d));
    traj.max_gram_condition = std::max(traj.max_gram_condition, ev.mass.condition_number);
    traj.max_reciprocity_defect =
        std::max(traj.max_reciprocity_defect, ev.mass.reciprocity_defect);
    for (const auto& w : ev.warnings)
      if (traj.warnings.size() < 100) traj.warnings.push_back(w);
    Vector out(2 * d);
    out << y.tail(d), ev.z_ddot;
    return out;
  };

  std::optional<std::string> collision;
  auto event = [&](double t, const Vector& y) -> std::optional<std::string> {
    const Configuration c = chart.configuration(y.head(d));
    const auto report = shapes::check_admissible(c);
    const double gap = report.min_relative_gap(c);
    if (!report.ok || gap < scenario.solver.collision_gap_fraction) {
      std::ostringstream os;
      os << "gap fell to " << gap << " of the smaller radius at t = " << t;
      collision = os.str();
      return collision;
    }
    return std::nullopt;
  };

  const bool impulse = single_unbounded_sphere(scenario.initial);
  auto record = [&](double t, const Vector& y) {
    Sample s;
    s.t = t;
    const Configuration c = chart.configuration(y.head(d));
    const Matrix J = chart.jacobian(c);
    const Vector z_dot = y.tail(d);
    s.q = c.coords();
    s.velocity = J * z_dot;
    const bool want_residual = scenario.residual_cadence > 0 &&
                               traj.samples.size() % scenario.residual_cadence == 0;
    potential::AddedMassMatrix M;
    if (want_residual) {
      const Evaluation ev = system.evaluate(c, z_dot);
      M = ev.mass;
      s.residual =
          boundary_residual(scenario, State{c, s.velocity, t}, ev.q_ddot, std::nullopt, 1e-4);
    } else {
      M = system.mass(c, J);
    }
    s.kinetic = 0.5 * z_dot.dot(M.entries * z_dot);
    s.potential = gas::potential_energy(scenario.model, c).value;
    s.total = s.kinetic + s.potential;
    s.gram_condition = M.condition_number;
    if (impulse) s.impulse = (M.entries * z_dot).head<3>();
    traj.samples.push_back(std::move(s));
  };

  std::vector<double> outputs;
  const double dt = scenario.time.output_dt;
  const double t_end = scenario.time.t_end;
  for (long k = 0;; ++k) {
    const double t = k * dt;
    if (t > t_end * (1.0 + 1e-12)) break;
    outputs.push_back(std::min(t, t_end));
    if (t >= t_end) break;
  }
  if (outputs.back() < t_end) outputs.push_back(t_end);

  ode::Options opts;
  opts.rel_tol = scenario.solver.rel_tol;
  opts.abs_tol = scenario.solver.abs_tol;
  const double period = characteristic_period(scenario);
  opts.initial_step = period > 0.0 ? 1e-3 * period : 1e-3 * t_end;

  const ode::Result res = ode::integrate(rhs, 0.0, y0, t_end, outputs, record, event, opts);
  traj.accepted_steps = res.accepted;
  traj.rejected_steps = res.rejected;
  traj.rhs_evaluations = res.rhs_evaluations;
  switch (res.reason) {
    case ode::StopReason::Completed:
      traj.termination = Termination::Completed;
      break;
    case ode::StopReason::Event:
      traj.termination = Termination::Collision;
      traj.message = res.message;
      break;
    case ode::StopReason::StepUnderflow:
      traj.termination = termination_from(res.last_error);
      traj.message = res.message;
      if (res.last_error) traj.message += ": " + message_of(res.last_error);
      break;
    case ode::StopReason::MaxSteps:
      traj.termination = Termination::SolverFailure;
      traj.message = res.message;
      break;
  }
  if (traj.termination != Termination::Completed &&
      (traj.samples.empty() || traj.samples.back().t < res.t)) {
    try {
      record(res.t, res.y);
    } catch (const Error& e) {
      traj.warnings.push_back(std::string("final sample unavailable: ") + e.what());
    }
  }
  return traj;
}

}  // namespace bubbledyn::dynamics
