#include "bubbledyn/reference.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bubbledyn/error.hpp"

namespace bubbledyn::reference {

using std::numbers::pi;

double kappa(TranslationCoefficient coefficient) {
  return coefficient == TranslationCoefficient::Resolved ? 3.0 : 1.5;
}

PotentialValue analytic_potential(const SingleBubbleState& s, const Vec3& x) {
  const Vec3 d = x - s.c;
  const double R = d.norm();
  if (R < s.r * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "evaluation point at distance " << R << " lies inside the bubble of radius " << s.r;
    throw DomainError(os.str());
  }
  const double r2 = s.r * s.r;
  const double r3 = r2 * s.r;
  const double R3 = R * R * R;
  const double cd = s.c_dot.dot(d);
  PotentialValue out;
  out.phi = -r2 * s.r_dot / R - 0.5 * r3 * cd / R3;
  out.gradient = (r2 * s.r_dot / R3) * d - (0.5 * r3 / R3) * s.c_dot +
                 (1.5 * r3 * cd / (R3 * R * R)) * d;
  return out;
}

Acceleration closed_form_rhs(const SingleBubbleState& s, const gas::BubbleGas& gas,
                             double p_infinity, double liquid_density, double surface_tension,
                             TranslationCoefficient coefficient) {
  const double vol = 4.0 * pi * s.r * s.r * s.r / 3.0;
  const double pb = gas::pressure(gas.law, gas.mass / vol);
  Acceleration a;
  a.r_ddot = (0.25 * s.c_dot.squaredNorm() +
              (pb - p_infinity - 2.0 * surface_tension / s.r) / liquid_density -
              1.5 * s.r_dot * s.r_dot) /
             s.r;
  a.c_ddot = -kappa(coefficient) * (s.r_dot / s.r) * s.c_dot;
  return a;
}

double closed_form_energy(const SingleBubbleState& s, const gas::BubbleGas& gas,
                          double p_infinity, double liquid_density, double surface_tension) {
  const double r3 = s.r * s.r * s.r;
  const double vol = 4.0 * pi * r3 / 3.0;
  const double U = gas.mass * gas::free_energy(gas.law, gas.mass / vol) + p_infinity * vol +
                   surface_tension * 4.0 * pi * s.r * s.r;
  return 2.0 * pi * liquid_density * r3 * s.r_dot * s.r_dot +
         pi / 3.0 * liquid_density * r3 * s.c_dot.squaredNorm() + U;
}

Frequency minnaert_frequency(const gas::BubbleGas& gas, double p_infinity, double liquid_density,
                             double r_eq) {
  if (!(r_eq > 0.0) || !(liquid_density > 0.0))
    throw DomainError("radius and liquid density must be positive");
  const double gamma = std::get<gas::Polytropic>(gas.law).gamma;
  Frequency f;
  f.omega = std::sqrt(3.0 * gamma * p_infinity / liquid_density) / r_eq;
  const double pb = gas::pressure(gas.law, gas.mass / (4.0 * pi * r_eq * r_eq * r_eq / 3.0));
  if (std::abs(pb - p_infinity) > 1e-6 * std::max(p_infinity, pb)) {
    std::ostringstream os;
    os << "radius " << r_eq << " is not an equilibrium: gas pressure " << pb
       << " differs from p_inf " << p_infinity;
    f.warning = os.str();
  }
  return f;
}

double equilibrium_radius(const gas::BubbleGas& gas, double p_infinity, double surface_tension) {
  auto residual = [&](double r) {
    const double pb = gas::pressure(gas.law, gas.mass / (4.0 * pi * r * r * r / 3.0));
    return pb - p_infinity - 2.0 * surface_tension / r;
  };
  // residual decreases monotonically in r; bracket and bisect in log space
  double lo = 1e-12, hi = 1.0;
  while (residual(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("no equilibrium radius: gas pressure dominates");
  }
  while (residual(lo) < 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw DomainError("no equilibrium radius");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double equilibrium_mass(const gas::GasLaw& law, double p_infinity, double r_eq,
                        double surface_tension) {
  const double density =
      gas::density_at_pressure(law, p_infinity + 2.0 * surface_tension / r_eq);
  return density * 4.0 * pi * r_eq * r_eq * r_eq / 3.0;
}

}  // namespace bubbledyn::reference
