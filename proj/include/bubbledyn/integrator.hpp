#pragma once

#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bubbledyn/linalg.hpp"

namespace bubbledyn::ode {

using Rhs = std::function<Vector(double t, const Vector& y)>;
/// Called after every accepted step; a returned message stops integration.
using EventCheck = std::function<std::optional<std::string>(double t, const Vector& y)>;
using Observer = std::function<void(double t, const Vector& y)>;

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Initial step; <= 0 selects one from the right-hand side.
  double initial_step = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  /// Steps below min_step_fraction * max(1, |t|) count as underflow.
  double min_step_fraction = 1e-12;
  long max_steps = 1000000;
};

enum class StopReason { Completed, Event, StepUnderflow, MaxSteps };

struct Result {
  StopReason reason = StopReason::Completed;
  std::string message;
  double t = 0.0;
  Vector y;
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  /// Last exception thrown by the right-hand side, if any step was rejected
  /// because of one.
  std::exception_ptr last_error;
};

/// Dormand-Prince 5(4) with continuous extension. The observer receives the
/// solution at every time in `output_times` that the integration reaches
/// (interpolated inside steps). Exceptions derived from bubbledyn::Error
/// thrown by the right-hand side reject the step and halve it.
Result integrate(const Rhs& f, double t0, const Vector& y0, double t_end,
                 const std::vector<double>& output_times, const Observer& observer,
                 const EventCheck& event, const Options& options);

}  // namespace bubbledyn::ode
