#include "bubbledyn/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bubbledyn/error.hpp"

namespace bubbledyn::ode {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const Options& o) {
  const Vector scale = (o.abs_tol + o.rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
  return std::sqrt((err.array() / scale.array()).square().mean());
}

}  // namespace

Result integrate(const Rhs& f, double t0, const Vector& y0, double t_end,
                 const std::vector<double>& output_times, const Observer& observer,
                 const EventCheck& event, const Options& o) {
  Result res;
  res.t = t0;
  res.y = y0;
  auto next_output = output_times.begin();
  while (next_output != output_times.end() && *next_output < t0) ++next_output;
  auto emit_until = [&](double t_hi, auto&& value_at) {
    while (next_output != output_times.end() && *next_output <= t_hi) {
      if (observer) observer(*next_output, value_at(*next_output));
      ++next_output;
    }
  };
  emit_until(t0, [&](double) { return y0; });
  if (t_end <= t0) return res;

  Vector k1 = f(t0, y0);
  ++res.rhs_evaluations;
  double h = o.initial_step;
  if (!(h > 0.0)) {
    const Vector sc = (o.abs_tol + o.rel_tol * y0.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((y0.array() / sc.array()).square().mean());
    const double dd = std::sqrt((k1.array() / sc.array()).square().mean());
    h = (d0 < 1e-5 || dd < 1e-5) ? 1e-6 : 0.01 * d0 / dd;
  }
  h = std::min({h, o.max_step, t_end - t0});

  double t = t0;
  Vector y = y0;
  bool rejected_last = false;
  while (t < t_end) {
    if (res.accepted + res.rejected >= o.max_steps) {
      res.reason = StopReason::MaxSteps;
      res.message = "maximum number of steps reached";
      break;
    }
    if (h < o.min_step_fraction * std::max(1.0, std::abs(t))) {
      res.reason = StopReason::StepUnderflow;
      res.message = "step size underflow at t = " + std::to_string(t);
      break;
    }
    if (t + h > t_end || t_end - (t + h) < 1e-12 * h) h = t_end - t;

    Vector k2, k3, k4, k5, k6, k7, y1;
    try {
      k2 = f(t + c2 * h, y + h * (a21 * k1));
      k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f(t + h, y1);
      res.rhs_evaluations += 6;
    } catch (const Error&) {
      res.last_error = std::current_exception();
      ++res.rejected;
      h *= 0.5;
      rejected_last = true;
      continue;
    }
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y1, o);
    if (!std::isfinite(en) || en > 1.0) {
      ++res.rejected;
      const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
      h *= fac;
      rejected_last = true;
      continue;
    }

    const Vector r1 = y;
    const Vector r2 = y1 - y;
    const Vector r3 = h * k1 - r2;
    const Vector r4 = r2 - h * k7 - r3;
    const Vector r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    const double t_old = t;
    const double h_old = h;
    auto dense = [&](double ts) -> Vector {
      const double th = (ts - t_old) / h_old;
      const double th1 = 1.0 - th;
      return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    };

    t = (h == t_end - t) ? t_end : t + h;
    y = y1;
    k1 = k7;
    ++res.accepted;
    res.t = t;
    res.y = y;
    emit_until(t, dense);

    if (event) {
      if (auto msg = event(t, y)) {
        res.reason = StopReason::Event;
        res.message = *msg;
        return res;
      }
    }

    double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 10.0;
    fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 10.0);
    rejected_last = false;
    h = std::min(h * fac, o.max_step);
  }
  return res;
}

}  // namespace bubbledyn::ode
