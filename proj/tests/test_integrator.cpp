#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bubbledyn/error.hpp"
#include "bubbledyn/integrator.hpp"

using namespace bubbledyn;
using namespace bubbledyn::ode;
using std::numbers::pi;

namespace {

Vector oscillator(double, const Vector& y) {
  Vector d(2);
  d << y(1), -y(0);
  return d;
}

Vector start() {
  Vector y(2);
  y << 1.0, 0.0;
  return y;
}

}  // namespace

TEST(Integrator, HarmonicOscillatorMeetsTolerance) {
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    Options opt;
    opt.rel_tol = tol;
    opt.abs_tol = tol * 1e-2;
    const auto res = integrate(oscillator, 0.0, start(), 4 * pi, {}, nullptr, nullptr, opt);
    ASSERT_EQ(res.reason, StopReason::Completed);
    EXPECT_DOUBLE_EQ(res.t, 4 * pi);
    EXPECT_LT(std::abs(res.y(0) - 1.0), 200 * tol) << tol;
    EXPECT_LT(std::abs(res.y(1)), 200 * tol) << tol;
  }
}

TEST(Integrator, GlobalErrorFollowsFifthOrderWithFixedSteps) {
  double prev = 0.0;
  for (int n : {20, 40, 80}) {
    Options opt;
    opt.initial_step = 2 * pi / n;
    opt.max_step = 2 * pi / n;
    opt.rel_tol = 1e3;
    opt.abs_tol = 1e3;
    const auto res = integrate(oscillator, 0.0, start(), 2 * pi, {}, nullptr, nullptr, opt);
    const double err = std::abs(res.y(0) - 1.0) + std::abs(res.y(1));
    if (prev > 0) EXPECT_NEAR(std::log2(prev / err), 5.0, 0.6) << n;
    prev = err;
  }
}

TEST(Integrator, DenseOutputHitsRequestedTimes) {
  std::vector<double> times;
  for (int i = 0; i <= 50; ++i) times.push_back(0.2 * i);
  std::vector<double> seen;
  double worst = 0.0;
  Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  integrate(oscillator, 0.0, start(), 10.0, times,
            [&](double t, const Vector& y) {
              seen.push_back(t);
              worst = std::max(worst, std::abs(y(0) - std::cos(t)) + std::abs(y(1) + std::sin(t)));
            },
            nullptr, opt);
  ASSERT_EQ(seen.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_DOUBLE_EQ(seen[i], times[i]);
  EXPECT_LT(worst, 1e-8);
}

TEST(Integrator, EventStopsIntegration) {
  const auto event = [](double, const Vector& y) -> std::optional<std::string> {
    if (y(0) < 0.0) return "crossed";
    return std::nullopt;
  };
  const auto res = integrate(oscillator, 0.0, start(), 10.0, {}, nullptr, event, Options{});
  EXPECT_EQ(res.reason, StopReason::Event);
  EXPECT_EQ(res.message, "crossed");
  EXPECT_GT(res.t, pi / 2);
  EXPECT_LT(res.t, pi);
}

TEST(Integrator, RhsErrorsShrinkTheStepAndEventuallyUnderflow) {
  // the right-hand side refuses to step past t = 1
  const auto wall = [](double t, const Vector& y) {
    if (t > 1.0) throw CollisionError("past the wall");
    return oscillator(t, y);
  };
  const auto res = integrate(wall, 0.0, start(), 2.0, {}, nullptr, nullptr, Options{});
  EXPECT_EQ(res.reason, StopReason::StepUnderflow);
  EXPECT_NEAR(res.t, 1.0, 1e-6);
  ASSERT_TRUE(res.last_error);
  EXPECT_THROW(std::rethrow_exception(res.last_error), CollisionError);
  EXPECT_GT(res.rejected, 0);
}

TEST(Integrator, OtherExceptionsPropagate) {
  const auto bad = [](double t, const Vector& y) -> Vector {
    if (t > 0.5) throw std::logic_error("bug");
    return oscillator(t, y);
  };
  EXPECT_THROW(integrate(bad, 0.0, start(), 1.0, {}, nullptr, nullptr, Options{}), std::logic_error);
}

TEST(Integrator, MaxStepsIsReported) {
  Options opt;
  opt.max_steps = 5;
  opt.max_step = 0.01;
  const auto res = integrate(oscillator, 0.0, start(), 1.0, {}, nullptr, nullptr, opt);
  EXPECT_EQ(res.reason, StopReason::MaxSteps);
  EXPECT_EQ(res.accepted, 5);
}
