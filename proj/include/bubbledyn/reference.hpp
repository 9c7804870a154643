#pragma once

#include <optional>
#include <string>

#include "bubbledyn/gas.hpp"
#include "bubbledyn/linalg.hpp"

namespace bubbledyn::reference {

/// Coefficient k in the translation law c'' = -k (r'/r) c'.
enum class TranslationCoefficient {
  /// k = 3, conservation of the Kelvin impulse r^3 c'.
  Resolved,
  /// k = 3/2, kept for comparison; does not conserve r^3 c'.
  Alternative,
};

double kappa(TranslationCoefficient coefficient);

struct SingleBubbleState {
  Vec3 c = Vec3::Zero();
  Vec3 c_dot = Vec3::Zero();
  double r = 1.0;
  double r_dot = 0.0;
};

struct PotentialValue {
  double phi = 0.0;
  Vec3 gradient = Vec3::Zero();
};

/// phi = -r^2 r' / |x - c| - r^3 c'.(x - c) / (2 |x - c|^3).
/// Throws DomainError for x inside the bubble.
PotentialValue analytic_potential(const SingleBubbleState& state, const Vec3& x);

struct Acceleration {
  double r_ddot = 0.0;
  Vec3 c_ddot = Vec3::Zero();
};

Acceleration closed_form_rhs(const SingleBubbleState& state, const gas::BubbleGas& gas,
                             double p_infinity, double liquid_density, double surface_tension,
                             TranslationCoefficient coefficient = TranslationCoefficient::Resolved);

/// 2 pi rho r^3 r'^2 + (pi/3) rho r^3 |c'|^2 + U(r), conserved by the
/// resolved closed form.
double closed_form_energy(const SingleBubbleState& state, const gas::BubbleGas& gas,
                          double p_infinity, double liquid_density, double surface_tension);

struct Frequency {
  double omega = 0.0;
  std::optional<std::string> warning;
};

/// omega = sqrt(3 gamma p_inf / (rho r_eq^2)). Warns when r_eq is not an
/// equilibrium of the gas.
Frequency minnaert_frequency(const gas::BubbleGas& gas, double p_infinity, double liquid_density,
                             double r_eq);

/// Radius at which p_B = p_inf + 2 sigma / r.
double equilibrium_radius(const gas::BubbleGas& gas, double p_infinity,
                          double surface_tension = 0.0);

/// Gas mass giving equilibrium radius r_eq.
double equilibrium_mass(const gas::GasLaw& law, double p_infinity, double r_eq,
                        double surface_tension = 0.0);

}  // namespace bubbledyn::reference
