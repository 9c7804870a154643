#pragma once

#include <variant>
#include <vector>

#include "bubbledyn/linalg.hpp"
#include "bubbledyn/shapes.hpp"

namespace bubbledyn::gas {

/// p(s) = K s^gamma.
struct Polytropic {
  double K = 1.0;
  double gamma = 1.4;

  /// Throws DomainError unless K > 0 and gamma >= 1.
  static Polytropic make(double K, double gamma);
  bool operator==(const Polytropic&) const = default;
};

using GasLaw = std::variant<Polytropic>;

/// Throws DomainError for density <= 0.
double pressure(const GasLaw& law, double density);
double pressure_derivative(const GasLaw& law, double density);
/// Specific free energy e(s) with s^2 e'(s) = p(s); additive constant zero.
double free_energy(const GasLaw& law, double density);
/// Density at which the law delivers `p`.
double density_at_pressure(const GasLaw& law, double p);

struct BubbleGas {
  double mass = 1.0;
  GasLaw law = Polytropic{};
  bool operator==(const BubbleGas&) const = default;
};

/// Everything the potential energy needs besides the configuration.
struct Model {
  double liquid_density = 1.0;
  double p_infinity = 1.0;
  double surface_tension = 0.0;
  std::vector<BubbleGas> gases;
  bool operator==(const Model&) const = default;
};

struct Energy {
  double value = 0.0;
  Vector gradient;
};

/// U = sum_k M_k e(M_k / vol_k) + p_inf vol_k + sigma area_k, with its
/// gradient in the flat configuration coordinates.
Energy potential_energy(const Model& model, const shapes::Configuration& config);

/// Gas pressure inside each bubble.
std::vector<double> bubble_pressures(const Model& model, const shapes::Configuration& config);

}  // namespace bubbledyn::gas
