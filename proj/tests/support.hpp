#pragma once

#include <random>

#include "bubbledyn/dynamics.hpp"
#include "bubbledyn/reference.hpp"

namespace bubbledyn::fixtures {

inline gas::BubbleGas equilibrium_gas(double r_eq, double gamma = 1.4, double p_inf = 1.0) {
  const auto law = gas::Polytropic::make(1.0, gamma);
  return {reference::equilibrium_mass(law, p_inf, r_eq), law};
}

/// Single unbounded sphere with the given initial radius and velocities.
inline dynamics::Scenario single_sphere(double r0, const Vec3& c_dot, double r_dot,
                                        double r_eq = 1.0, int level = 1) {
  dynamics::Scenario sc;
  sc.model.liquid_density = 1.0;
  sc.model.p_infinity = 1.0;
  sc.model.gases = {equilibrium_gas(r_eq)};
  sc.initial.bubbles = {shapes::SphereParams::make(Vec3::Zero(), r0)};
  sc.initial_velocity = shapes::sphere_tangent(c_dot, r_dot);
  sc.solver.mesh_level = level;
  sc.time.t_end = 1.0;
  sc.time.output_dt = 0.1;
  return sc;
}

inline Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

}  // namespace bubbledyn::fixtures
