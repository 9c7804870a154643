#include "bubbledyn/gas.hpp"

#include <cmath>
#include <sstream>

#include "bubbledyn/error.hpp"

namespace bubbledyn::gas {

namespace {

void require_positive(double density) {
  if (!(density > 0.0) || !std::isfinite(density)) {
    std::ostringstream os;
    os << "gas density must be positive, got " << density;
    throw DomainError(os.str());
  }
}

}  // namespace

Polytropic Polytropic::make(double K, double gamma) {
  if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("polytropic constant K must be positive");
  if (!(gamma >= 1.0) || !std::isfinite(gamma))
    throw DomainError("polytropic exponent gamma must be at least 1");
  return {K, gamma};
}

double pressure(const GasLaw& law, double density) {
  require_positive(density);
  const auto& p = std::get<Polytropic>(law);
  return p.K * std::pow(density, p.gamma);
}

double pressure_derivative(const GasLaw& law, double density) {
  require_positive(density);
  const auto& p = std::get<Polytropic>(law);
  return p.K * p.gamma * std::pow(density, p.gamma - 1.0);
}

double free_energy(const GasLaw& law, double density) {
  require_positive(density);
  const auto& p = std::get<Polytropic>(law);
  if (p.gamma == 1.0) return p.K * std::log(density);
  return p.K * std::pow(density, p.gamma - 1.0) / (p.gamma - 1.0);
}

double density_at_pressure(const GasLaw& law, double pressure_value) {
  if (!(pressure_value > 0.0)) throw DomainError("target pressure must be positive");
  const auto& p = std::get<Polytropic>(law);
  return std::pow(pressure_value / p.K, 1.0 / p.gamma);
}

Energy potential_energy(const Model& model, const shapes::Configuration& config) {
  if (model.gases.size() != config.bubbles.size())
    throw std::invalid_argument("one gas description per bubble required");
  Energy out;
  out.gradient = Vector::Zero(config.dimension());
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    const auto m = shapes::measures(config.bubbles[k]);
    const BubbleGas& gas = model.gases[k];
    const double density = gas.mass / m.volume;
    const double pk = pressure(gas.law, density);
    out.value += gas.mass * free_energy(gas.law, density) + model.p_infinity * m.volume +
                 model.surface_tension * m.area;
    Vector g = (model.p_infinity - pk) * m.d_volume;
    if (model.surface_tension != 0.0) g += model.surface_tension * m.d_area;
    out.gradient.segment(config.offset(static_cast<int>(k)), g.size()) = g;
  }
  return out;
}

std::vector<double> bubble_pressures(const Model& model, const shapes::Configuration& config) {
  std::vector<double> out;
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    const double vol = std::visit([](const auto& s) { return s.volume(); }, config.bubbles[k]);
    out.push_back(pressure(model.gases[k].law, model.gases[k].mass / vol));
  }
  return out;
}

}  // namespace bubbledyn::gas
