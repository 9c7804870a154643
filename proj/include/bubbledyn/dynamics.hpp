#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bubbledyn/gas.hpp"
#include "bubbledyn/integrator.hpp"
#include "bubbledyn/linalg.hpp"
#include "bubbledyn/potential.hpp"
#include "bubbledyn/reference.hpp"
#include "bubbledyn/shapes.hpp"

namespace bubbledyn::dynamics {

struct SolverSettings {
  int mesh_level = 2;
  /// Relative step for finite-difference derivatives of the added mass.
  double fd_step = 1e-4;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Integration stops once a gap falls below this fraction of the smaller
  /// radius involved.
  double collision_gap_fraction = 0.02;
  bool operator==(const SolverSettings&) const = default;
};

struct TimeSettings {
  double t_end = 1.0;
  double output_dt = 0.1;
  bool operator==(const TimeSettings&) const = default;
};

struct Scenario {
  gas::Model model;
  shapes::Configuration initial;
  /// Flat tangent vector of the initial configuration.
  Vector initial_velocity;
  SolverSettings solver;
  TimeSettings time;
  reference::TranslationCoefficient translation_coefficient =
      reference::TranslationCoefficient::Resolved;
  /// Boundary residual every this many samples; 0 disables it.
  int residual_cadence = 0;

  bool operator==(const Scenario& o) const {
    return model == o.model && initial == o.initial &&
           initial_velocity.size() == o.initial_velocity.size() &&
           initial_velocity == o.initial_velocity && solver == o.solver && time == o.time &&
           translation_coefficient == o.translation_coefficient &&
           residual_cadence == o.residual_cadence;
  }
};

struct State {
  shapes::Configuration config;
  Vector velocity;
  double time = 0.0;
};

struct ConstraintBasis {
  /// Orthonormal columns spanning the admissible velocities.
  Matrix basis;
  /// Flux covector (derivative of the total bubble volume); empty when unbounded.
  Vector flux;
};

/// Identity when unbounded; the kernel of the flux covector in a cavity.
/// Throws ConstraintError when the covector vanishes.
ConstraintBasis constraint_basis(const shapes::Configuration& config);

/// Throws ConstraintError when a cavity velocity carries net volume flux.
void check_velocity(const shapes::Configuration& config, const Vector& velocity);

/// Flat acceleration from the Euler-Lagrange equations of
/// L = 1/2 q'A(q)q' - U(q), restricted to the volume-preserving
/// configurations in a cavity.
Vector eom_rhs(const Scenario& scenario, const State& state);

struct Energies {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

Energies energies(const Scenario& scenario, const State& state);

/// Relaxed interface condition max_i |sum_k int (p - p_k) <V, e_i> + sigma d area(e_i)|,
/// normalised by max(p_inf, p_k) times the total bubble area. Pressures come
/// from the unsteady Bernoulli equation with d phi/dt by central differences
/// of step `epsilon` along the motion.
double boundary_residual(const Scenario& scenario, const State& state,
                         const Vector& acceleration, std::optional<int> level = std::nullopt,
                         double epsilon = 1e-4);

enum class Termination { Completed, Collision, DegenerateShape, SolverFailure };

std::string to_string(Termination t);

struct Sample {
  double t = 0.0;
  Vector q;
  Vector velocity;
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
  /// Kelvin impulse; single unbounded sphere only.
  std::optional<Vec3> impulse;
  std::optional<double> residual;
  double gram_condition = 0.0;
};

struct Trajectory {
  shapes::Configuration initial;
  std::vector<Sample> samples;
  Termination termination = Termination::Completed;
  std::string message;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
  double max_gram_condition = 0.0;
  double max_reciprocity_defect = 0.0;
  std::vector<std::string> warnings;
};

/// Minnaert period of the first bubble at its equivalent radius, used to set
/// the first step. Zero when undefined.
double characteristic_period(const Scenario& scenario);

/// Integrates the scenario from t = 0 to time.t_end with samples every
/// time.output_dt (and a final sample where integration stops).
Trajectory integrate(const Scenario& scenario);

}  // namespace bubbledyn::dynamics
