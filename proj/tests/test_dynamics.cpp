#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bubbledyn/dynamics.hpp"
#include "bubbledyn/error.hpp"
#include "support.hpp"

using namespace bubbledyn;
using namespace bubbledyn::dynamics;
using shapes::Configuration;
using shapes::SphereParams;
using std::numbers::pi;

namespace {

Scenario two_sphere_scenario(int level) {
  Scenario sc;
  sc.model.gases = {fixtures::equilibrium_gas(1.0), fixtures::equilibrium_gas(0.7)};
  sc.initial.bubbles = {SphereParams::make(Vec3(0, 0, 0), 1.1),
                        SphereParams::make(Vec3(2.6, 0.3, 0), 0.6)};
  sc.initial_velocity = Vector::Zero(8);
  sc.initial_velocity << 0.1, 0.0, -0.05, 0.2, -0.1, 0.05, 0.0, -0.1;
  sc.solver.mesh_level = level;
  return sc;
}

Scenario cavity_scenario(int level) {
  Scenario sc;
  sc.model.gases = {fixtures::equilibrium_gas(0.6), fixtures::equilibrium_gas(0.5)};
  sc.initial.bubbles = {SphereParams::make(Vec3(-1.0, 0, 0), 0.7),
                        SphereParams::make(Vec3(1.0, 0, 0), 0.5)};
  sc.initial.domain = shapes::CavitySphere{Vec3::Zero(), 2.5};
  const double rd1 = 0.1;
  const double rd2 = -rd1 * 0.7 * 0.7 / (0.5 * 0.5);
  sc.initial_velocity = Vector::Zero(8);
  sc.initial_velocity << 0.05, 0, 0, rd1, 0, 0.05, 0, rd2;
  sc.solver.mesh_level = level;
  return sc;
}

State initial_state(const Scenario& sc) { return {sc.initial, sc.initial_velocity, 0.0}; }

}  // namespace

TEST(ConstraintBasis, Examples) {
  Configuration free;
  free.bubbles = {SphereParams::make(Vec3::Zero(), 1.0)};
  EXPECT_EQ(constraint_basis(free).basis, Matrix::Identity(4, 4));
  EXPECT_EQ(constraint_basis(free).flux.size(), 0);

  Configuration one = free;
  one.domain = shapes::CavitySphere{Vec3::Zero(), 3.0};
  const auto b1 = constraint_basis(one);
  ASSERT_EQ(b1.basis.cols(), 3);
  EXPECT_LT(b1.basis.row(3).norm(), 1e-14);
  EXPECT_LT((b1.basis.transpose() * b1.basis - Matrix::Identity(3, 3)).norm(), 1e-14);

  const auto sc = cavity_scenario(0);
  const auto b2 = constraint_basis(sc.initial);
  ASSERT_EQ(b2.basis.rows(), 8);
  ASSERT_EQ(b2.basis.cols(), 7);
  EXPECT_LT((b2.basis.transpose() * b2.basis - Matrix::Identity(7, 7)).norm(), 1e-13);
  for (int j = 0; j < 7; ++j) {
    const double r1 = 0.7, r2 = 0.5;
    EXPECT_NEAR(r1 * r1 * b2.basis(3, j) + r2 * r2 * b2.basis(7, j), 0.0, 1e-14);
  }
  EXPECT_NO_THROW(check_velocity(sc.initial, sc.initial_velocity));
  Vector bad = sc.initial_velocity;
  bad(3) += 0.01;
  EXPECT_THROW(check_velocity(sc.initial, bad), ConstraintError);
}

TEST(EquationsOfMotion, EquilibriumIsAtRest) {
  const auto sc = fixtures::single_sphere(1.0, Vec3::Zero(), 0.0);
  EXPECT_LT(eom_rhs(sc, initial_state(sc)).norm(), 1e-12);
}

TEST(EquationsOfMotion, TranslationDrivesRadialGrowth) {
  const Vec3 c_dot(0.3, -0.2, 0.1);
  const auto sc = fixtures::single_sphere(1.0, c_dot, 0.0, 1.0, 2);
  const Vector a = eom_rhs(sc, initial_state(sc));
  const double expected = c_dot.squaredNorm() / 4.0;
  EXPECT_NEAR(a(3), expected, 1e-2 * expected);
  EXPECT_LT(a.head(3).norm(), 1e-3 * expected);
}

TEST(EquationsOfMotion, MatchesClosedFormForGenericState) {
  const Vec3 c_dot(0.3, 0.1, -0.2);
  const auto sc = fixtures::single_sphere(1.2, c_dot, 0.25, 1.0, 2);
  const Vector a = eom_rhs(sc, initial_state(sc));
  reference::SingleBubbleState s;
  s.r = 1.2;
  s.c_dot = c_dot;
  s.r_dot = 0.25;
  const auto ref = reference::closed_form_rhs(s, sc.model.gases[0], 1.0, 1.0, 0.0);
  EXPECT_NEAR(a(3), ref.r_ddot, 1e-2 * std::abs(ref.r_ddot));
  EXPECT_LT((a.head(3) - ref.c_ddot).norm(), 1e-2 * ref.c_ddot.norm());
}

TEST(EquationsOfMotion, SatisfiesEulerLagrangeByFiniteDifferences) {
  // d/dt (A q') - 1/2 q' dA q' + dU = 0 along the flow, with d/dt taken by
  // central differences along q(t +- h) = q +- h q' + h^2/2 q''.
  const auto sc = two_sphere_scenario(1);
  const State s = initial_state(sc);
  const Vector acc = eom_rhs(sc, s);
  const Vector q = sc.initial.coords();
  const Vector& v = sc.initial_velocity;
  const double h = 1e-3;
  const auto momentum = [&](double sign) {
    const Vector qh = q + sign * h * v + 0.5 * h * h * acc;
    const Vector vh = v + sign * h * acc;
    return Vector(potential::added_mass(sc.initial.with_coords(qh), 1, 1.0).entries * vh);
  };
  const Vector dp = (momentum(1.0) - momentum(-1.0)) / (2 * h);
  const auto jac = potential::added_mass_jacobian(sc.initial, 1, 1.0);
  const auto u = gas::potential_energy(sc.model, sc.initial);
  Vector el = dp + u.gradient;
  for (int k = 0; k < q.size(); ++k) el(k) -= 0.5 * v.dot(jac.slices[k] * v);
  const Matrix a = potential::added_mass(sc.initial, 1, 1.0).entries;
  const double scale = (a * acc).norm() + u.gradient.norm();
  EXPECT_LT(el.norm(), 1e-4 * scale) << el.transpose();
}

TEST(EquationsOfMotion, PermutationEquivariant) {
  const auto sc = two_sphere_scenario(1);
  Scenario swapped = sc;
  std::swap(swapped.model.gases[0], swapped.model.gases[1]);
  std::swap(swapped.initial.bubbles[0], swapped.initial.bubbles[1]);
  swapped.initial_velocity << sc.initial_velocity.tail(4), sc.initial_velocity.head(4);
  const Vector a = eom_rhs(sc, initial_state(sc));
  const Vector b = eom_rhs(swapped, initial_state(swapped));
  EXPECT_LT((a.head(4) - b.tail(4)).norm(), 1e-9 * a.norm());
  EXPECT_LT((a.tail(4) - b.head(4)).norm(), 1e-9 * a.norm());
}

TEST(EquationsOfMotion, EllipsoidFamilyContainsPulsatingSpheres) {
  const double r = 1.15, rd = -0.2;
  const auto sphere = fixtures::single_sphere(r, Vec3::Zero(), rd, 1.0, 2);
  Scenario ell = sphere;
  ell.initial.bubbles = {shapes::EllipsoidParams::make(Vec3::Zero(), r * Mat3::Identity())};
  ell.initial_velocity = shapes::ellipsoid_tangent(Vec3::Zero(), rd * Mat3::Identity());
  const double expected = eom_rhs(sphere, initial_state(sphere))(3);
  const Vector ae = eom_rhs(ell, initial_state(ell));
  const Mat3 s_ddot = shapes::symmetric_from_coords(ae.tail(6));
  EXPECT_LT((s_ddot - expected * Mat3::Identity()).norm(), 1e-2 * std::abs(expected));
  EXPECT_LT(ae.head(3).norm(), 1e-3 * std::abs(expected));
}

TEST(EquationsOfMotion, TranslatingSphericalEllipsoidFlattensAlongItsMotion) {
  // Translation couples to the shear modes of the ellipsoid family, so only
  // the volume mode and the centre follow the spherical equations.
  const Vec3 c_dot(0.2, 0.0, -0.1);
  const double r = 1.15, rd = -0.2;
  const auto sphere = fixtures::single_sphere(r, c_dot, rd, 1.0, 2);
  Scenario ell = sphere;
  ell.initial.bubbles = {shapes::EllipsoidParams::make(Vec3::Zero(), r * Mat3::Identity())};
  ell.initial_velocity = shapes::ellipsoid_tangent(c_dot, rd * Mat3::Identity());
  const Vector as = eom_rhs(sphere, initial_state(sphere));
  const Vector ae = eom_rhs(ell, initial_state(ell));
  const Mat3 s_ddot = shapes::symmetric_from_coords(ae.tail(6));
  EXPECT_NEAR(s_ddot.trace() / 3, as(3), 1e-2 * std::abs(as(3)));
  EXPECT_LT((ae.head(3) - as.head(3)).norm(), 2e-2 * as.head(3).norm());
  const Vec3 u = c_dot.normalized();
  const Vec3 w = u.cross(Vec3::UnitY());
  EXPECT_LT(u.dot(s_ddot * u), w.dot(s_ddot * w));
}

TEST(Integrate, EquilibriumStaysPut) {
  auto sc = fixtures::single_sphere(1.0, Vec3::Zero(), 0.0, 1.0, 0);
  sc.time.t_end = 2.0;
  sc.time.output_dt = 0.5;
  const auto traj = integrate(sc);
  ASSERT_EQ(traj.termination, Termination::Completed);
  ASSERT_EQ(traj.samples.size(), 5u);
  for (const auto& s : traj.samples) {
    EXPECT_LT((s.q - sc.initial.coords()).norm(), 1e-10);
    EXPECT_LT(s.velocity.norm(), 1e-10);
  }
}

TEST(Integrate, ConservesEnergyAndImpulse) {
  auto sc = fixtures::single_sphere(1.1, Vec3(0.2, 0.1, 0), 0.0, 1.0, 1);
  sc.time.t_end = 2 * pi / std::sqrt(4.2);
  sc.time.output_dt = sc.time.t_end / 10;
  const auto traj = integrate(sc);
  ASSERT_EQ(traj.termination, Termination::Completed);
  const double e0 = traj.samples.front().total;
  const Vec3 p0 = *traj.samples.front().impulse;
  double drift = 0.0, impulse = 0.0;
  for (const auto& s : traj.samples) {
    drift = std::max(drift, std::abs(s.total - e0) / std::abs(e0));
    impulse = std::max(impulse, (*s.impulse - p0).norm() / p0.norm());
    EXPECT_GT(s.gram_condition, 1.0);
  }
  EXPECT_LT(drift, 1e-6);
  EXPECT_LT(impulse, 1e-6);
  EXPECT_NEAR(traj.samples.back().t, sc.time.t_end, 1e-12);
  EXPECT_GT(traj.accepted_steps, 0);
}

TEST(Integrate, CavityPreservesTotalVolume) {
  auto sc = cavity_scenario(0);
  sc.time.t_end = 0.3;
  sc.time.output_dt = 0.1;
  const auto traj = integrate(sc);
  ASSERT_EQ(traj.termination, Termination::Completed) << traj.message;
  const double v0 = std::pow(0.7, 3) + std::pow(0.5, 3);
  for (const auto& s : traj.samples) {
    EXPECT_NEAR(std::pow(s.q(3), 3) + std::pow(s.q(7), 3), v0, 1e-10 * v0);
    EXPECT_NEAR(s.q(3) * s.q(3) * s.velocity(3) + s.q(7) * s.q(7) * s.velocity(7), 0.0, 1e-9);
  }
  EXPECT_NE(traj.samples.back().q(3), 0.7);
}

TEST(Integrate, RejectsRadialMotionOfALoneCavityBubble) {
  auto sc = fixtures::single_sphere(1.0, Vec3::Zero(), 0.1, 1.0, 0);
  sc.initial.domain = shapes::CavitySphere{Vec3::Zero(), 3.0};
  EXPECT_THROW(integrate(sc), ConstraintError);
}

TEST(Integrate, StopsOnCollision) {
  Scenario sc;
  sc.model.gases = {fixtures::equilibrium_gas(0.5), fixtures::equilibrium_gas(0.5)};
  sc.initial.bubbles = {SphereParams::make(Vec3(0, 0, 0), 0.5),
                        SphereParams::make(Vec3(1.3, 0, 0), 0.5)};
  sc.initial_velocity = Vector::Zero(8);
  sc.initial_velocity(0) = 1.0;
  sc.initial_velocity(4) = -1.0;
  sc.solver.mesh_level = 0;
  sc.time.t_end = 2.0;
  sc.time.output_dt = 0.05;
  const auto traj = integrate(sc);
  EXPECT_EQ(traj.termination, Termination::Collision);
  EXPECT_FALSE(traj.message.empty());
  EXPECT_LT(traj.samples.back().t, 2.0);
  EXPECT_EQ(to_string(traj.termination), "collision");
}

TEST(Residual, SeparatesRightFromWrongAcceleration) {
  const auto sc = fixtures::single_sphere(1.2, Vec3(0.3, 0, 0.1), 0.2, 1.0, 2);
  const State s = initial_state(sc);
  const Vector a = eom_rhs(sc, s);
  const double good = boundary_residual(sc, s, a);
  const double bad = boundary_residual(sc, s, 2.0 * a);
  EXPECT_LT(good, 1e-2);
  EXPECT_GT(bad, 5 * good);

  const auto eq = fixtures::single_sphere(1.0, Vec3::Zero(), 0.0, 1.0, 2);
  EXPECT_LT(boundary_residual(eq, initial_state(eq), Vector::Zero(4)), 1e-10);
}

TEST(Residual, ShrinksUnderRefinement) {
  const auto sc = fixtures::single_sphere(1.2, Vec3(0.3, 0, 0.1), 0.2, 1.0, 1);
  const State s = initial_state(sc);
  double prev = INFINITY;
  for (int level = 1; level <= 3; ++level) {
    Scenario at = sc;
    at.solver.mesh_level = level;
    const double eps = 1e-3 / std::pow(2.0, level);
    const double r = boundary_residual(at, s, eom_rhs(at, s), level, eps);
    EXPECT_LT(r, prev) << level;
    prev = r;
  }
}
