#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bubbledyn/commands.hpp"
#include "bubbledyn/dynamics.hpp"
#include "bubbledyn/error.hpp"
#include "bubbledyn/potential.hpp"
#include "bubbledyn/reference.hpp"
#include "bubbledyn/scenario_io.hpp"

using namespace bubbledyn;
using shapes::Configuration;
using shapes::SphereParams;
using std::numbers::pi;

namespace {

// Pinned tolerances.
constexpr double kBemL2 = 2e-2;
constexpr double kBemSeconds = 10.0;
constexpr double kAddedMassRel = 2e-2;
constexpr double kOffDiagonalRel = 1e-2;
constexpr double kPipelineDeviation = 1e-2;
constexpr double kPipelineSeconds = 300.0;
constexpr double kRayleighPlesset = 1e-3;
constexpr double kMinnaertRel = 1e-2;
constexpr double kEnergyDrift = 1e-6;
constexpr double kImpulseDrift = 1e-6;
constexpr double kCavityVolume = 1e-10;
constexpr double kEllipsoidDeviation = 2e-2;
constexpr double kGradientFd = 1e-4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

gas::BubbleGas equilibrium_gas(double r_eq, double gamma) {
  const auto law = gas::Polytropic::make(1.0, gamma);
  return {reference::equilibrium_mass(law, 1.0, r_eq), law};
}

dynamics::Scenario sphere_scenario(double r0, const Vec3& c_dot, double r_dot, int level) {
  dynamics::Scenario sc;
  sc.model.gases = {equilibrium_gas(1.0, 1.4)};
  sc.initial.bubbles = {SphereParams::make(Vec3::Zero(), r0)};
  sc.initial_velocity = shapes::sphere_tangent(c_dot, r_dot);
  sc.solver.mesh_level = level;
  return sc;
}

double minnaert_period() {
  return 2 * pi / reference::minnaert_frequency(equilibrium_gas(1.0, 1.4), 1.0, 1.0, 1.0).omega;
}

double relative_l2(const Vector& got, const Vector& want) {
  return (got - want).norm() / want.norm();
}

Outcome bem_accuracy() {
  const auto start = std::chrono::steady_clock::now();
  Configuration config;
  config.bubbles = {SphereParams::make(Vec3::Zero(), 1.0)};
  Matrix dirs = Matrix::Zero(4, 2);
  dirs(3, 0) = 1.0;
  dirs(0, 1) = 1.0;
  const auto sols = potential::basis_potentials(config, 3, dirs);
  const double elapsed = seconds_since(start);
  const auto& mesh = sols[0].boundary->meshes[0];
  Vector mono(mesh.size()), dip(mesh.size());
  for (int j = 0; j < mesh.size(); ++j) {
    mono(j) = -1.0;
    dip(j) = -0.5 * mesh.collocation_normals[j].x();
  }
  const double em = relative_l2(sols[0].boundary_potential, mono);
  const double ed = relative_l2(sols[1].boundary_potential, dip);
  return {em < kBemL2 && ed < kBemL2 && elapsed < kBemSeconds,
          fmt("%d panels, monopole L2 %.3e, dipole L2 %.3e (tol %.0e), %.2f s (limit %.0f s)",
              mesh.size(), em, ed, kBemL2, elapsed, kBemSeconds)};
}

Outcome added_mass() {
  const double r = 1.3, rho = 1.0;
  Configuration config;
  config.bubbles = {SphereParams::make(Vec3(0.2, 0, 0), r)};
  const auto am = potential::added_mass(config, 3, rho);
  Vector exact(4);
  exact << 2 * pi * r * r * r / 3, 2 * pi * r * r * r / 3, 2 * pi * r * r * r / 3, 4 * pi * r * r * r;
  double diag = 0.0, off = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j)
        diag = std::max(diag, std::abs(am.entries(i, i) - rho * exact(i)) / (rho * exact(i)));
      else
        off = std::max(off, std::abs(am.entries(i, j)) / (rho * exact.minCoeff()));
    }
  return {diag < kAddedMassRel && off < kOffDiagonalRel && am.min_eigenvalue > 0.0,
          fmt("max diagonal error %.3e (tol %.0e), max off-diagonal %.3e (tol %.0e), "
              "min eigenvalue %.4f, condition number %.4f",
              diag, kAddedMassRel, off, kOffDiagonalRel, am.min_eigenvalue, am.condition_number)};
}

Outcome pipeline_vs_closed_form() {
  auto sc = sphere_scenario(1.2, Vec3(0.3, 0.1, 0.0), 0.0, 2);
  sc.time.t_end = 5 * minnaert_period();
  sc.time.output_dt = sc.time.t_end / 200;
  const auto start = std::chrono::steady_clock::now();
  const auto traj = dynamics::integrate(sc);
  const double elapsed = seconds_since(start);
  std::vector<double> times;
  for (const auto& s : traj.samples) times.push_back(s.t);
  const auto ref = commands::closed_form_trajectory(sc, times);
  const auto dev = commands::reference_deviation(traj, ref);

  auto alternative = sc;
  alternative.translation_coefficient = reference::TranslationCoefficient::Alternative;
  const auto alt = commands::closed_form_trajectory(alternative, times);
  const auto dev_alternative = commands::reference_deviation(traj, alt);

  const bool done = traj.termination == dynamics::Termination::Completed;
  return {done && dev.radius < kPipelineDeviation && dev.center < kPipelineDeviation &&
              elapsed < kPipelineSeconds,
          fmt("level 2, %zu samples over 5 periods: radius deviation %.3e, centre deviation "
              "%.3e (tol %.0e), %.1f s (limit %.0f s); k = 3/2 closed form deviates "
              "by radius %.3e, centre %.3e",
              traj.samples.size(), dev.radius, dev.center, kPipelineDeviation, elapsed,
              kPipelineSeconds, dev_alternative.radius, dev_alternative.center)};
}

Outcome rayleigh_plesset() {
  auto sc = sphere_scenario(1.2, Vec3::Zero(), 0.0, 2);
  sc.time.t_end = minnaert_period();
  sc.time.output_dt = sc.time.t_end / 20;
  const auto traj = dynamics::integrate(sc);
  double worst = 0.0;
  for (const auto& s : traj.samples) {
    const dynamics::State st{sc.initial.with_coords(s.q), s.velocity, s.t};
    const Vector acc = dynamics::eom_rhs(sc, st);
    const double r = s.q(3), rd = s.velocity(3);
    const double pb = gas::bubble_pressures(sc.model, st.config)[0];
    const double res = -r * acc(3) - 1.5 * rd * rd + pb - sc.model.p_infinity;
    worst = std::max(worst, std::abs(res) / std::max(pb, sc.model.p_infinity));
  }
  return {traj.termination == dynamics::Termination::Completed && worst < kRayleighPlesset,
          fmt("%zu states on a level-2 trajectory, max relative residual %.3e (tol %.0e)",
              traj.samples.size(), worst, kRayleighPlesset)};
}

Outcome minnaert() {
  const int periods = 3;
  auto sc = sphere_scenario(1.01, Vec3::Zero(), 0.0, 2);
  const double expected = minnaert_period();
  sc.time.t_end = (periods + 0.3) * expected;
  sc.time.output_dt = expected / 100;
  const auto traj = dynamics::integrate(sc);
  // downward zero crossings of r - r_eq, linearly interpolated
  std::vector<double> crossings;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const double a = traj.samples[i - 1].q(3) - 1.0, b = traj.samples[i].q(3) - 1.0;
    if (a > 0.0 && b <= 0.0)
      crossings.push_back(traj.samples[i - 1].t +
                          (traj.samples[i].t - traj.samples[i - 1].t) * a / (a - b));
  }
  if (crossings.size() < 2) return {false, "fewer than two zero crossings"};
  const double measured = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  const double err = std::abs(measured - expected) / expected;
  return {err < kMinnaertRel,
          fmt("level 2, 1%% amplitude: measured period %.6f, 2 pi / omega = %.6f, relative "
              "error %.3e (tol %.0e)",
              measured, expected, err, kMinnaertRel)};
}

Outcome conservation() {
  auto sc = sphere_scenario(1.2, Vec3(0.3, 0.1, 0.0), 0.0, 1);
  sc.time.t_end = 10 * minnaert_period();
  sc.time.output_dt = sc.time.t_end / 400;
  const auto traj = dynamics::integrate(sc);
  const double e0 = traj.samples.front().total;
  const Vec3 p0 = *traj.samples.front().impulse;
  double drift = 0.0, impulse = 0.0;
  for (const auto& s : traj.samples) {
    drift = std::max(drift, std::abs(s.total - e0) / std::abs(e0));
    impulse = std::max(impulse, (*s.impulse - p0).norm() / p0.norm());
  }
  // k = 3/2, recorded only
  auto alternative = sc;
  alternative.translation_coefficient = reference::TranslationCoefficient::Alternative;
  std::vector<double> times;
  for (const auto& s : traj.samples) times.push_back(s.t);
  const auto alt = commands::closed_form_trajectory(alternative, times);
  double alt_impulse = 0.0, alt_energy = 0.0;
  const auto& s0 = alt.states.front();
  const Vec3 q0 = std::pow(s0.r, 3) * s0.c_dot;
  const double pe0 = reference::closed_form_energy(s0, sc.model.gases[0], 1.0, 1.0, 0.0);
  for (const auto& s : alt.states) {
    alt_impulse = std::max(alt_impulse, (std::pow(s.r, 3) * s.c_dot - q0).norm() / q0.norm());
    alt_energy = std::max(
        alt_energy,
        std::abs(reference::closed_form_energy(s, sc.model.gases[0], 1.0, 1.0, 0.0) - pe0) / pe0);
  }
  return {traj.termination == dynamics::Termination::Completed && drift < kEnergyDrift &&
              impulse < kImpulseDrift,
          fmt("level 1, 10 periods: energy drift %.3e (tol %.0e), r^3 c' drift %.3e (tol %.0e); "
              "k = 3/2 (recorded, not asserted): r^3 c' drift %.3e, energy drift %.3e",
              drift, kEnergyDrift, impulse, kImpulseDrift, alt_impulse, alt_energy)};
}

Outcome cavity() {
  auto sc = io::load_scenario(std::string(BUBBLEDYN_SCENARIO_DIR) + "/two_bubbles_cavity.json");
  sc.time.t_end = 0.5;
  sc.time.output_dt = 0.05;
  const auto traj = dynamics::integrate(sc);
  const double v0 = std::pow(traj.samples.front().q(3), 3) + std::pow(traj.samples.front().q(7), 3);
  double worst = 0.0, radial = 0.0;
  for (const auto& s : traj.samples) {
    worst = std::max(worst, std::abs(std::pow(s.q(3), 3) + std::pow(s.q(7), 3) - v0) / v0);
    radial = std::max(radial, std::abs(s.q(3) - traj.samples.front().q(3)));
  }

  bool rejected = false;
  std::string why;
  const auto lone = io::parse_scenario(R"({
    "schema_version": 1,
    "liquid": {"density": 1.0, "p_infinity": 1.0},
    "domain": {"kind": "cavity_sphere", "center": [0, 0, 0], "radius": 3.0},
    "bubbles": [{"shape": {"kind": "sphere", "center": [0, 0, 0], "radius": 1.0},
                 "velocity": {"center": [0, 0, 0], "radius": 0.1},
                 "gas": {"kind": "polytropic", "K": 1.0, "gamma": 1.4}, "mass": 1.0}],
    "time": {"t_end": 1.0, "output_dt": 0.1}
  })", "lone.json");
  try {
    io::validate_initial_state(lone, "lone.json");
  } catch (const ValidationError& e) {
    rejected = true;
    why = e.what();
  }
  return {traj.termination == dynamics::Termination::Completed && worst < kCavityVolume &&
              radial > 1e-3 && rejected,
          fmt("level %d, t = %.2f: max relative change of r1^3 + r2^3 %.3e (tol %.0e) while r1 "
              "moved %.3e; lone cavity bubble with r' != 0 %s (%s)",
              sc.solver.mesh_level, traj.samples.back().t, worst, kCavityVolume, radial,
              rejected ? "rejected" : "accepted", why.c_str())};
}

double fd_relative(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
}

struct FamilyComparison {
  double shape = 0.0;
  double center = 0.0;
  double momentum_drift = 0.0;
  bool completed = false;
};

// Sphere (c, r) against an ellipsoid started at S = r I, S' = r' I. The shape
// deviation is max |S - r I| / r; the centre deviation is relative to the
// sphere's travel (absolute when it does not move).
FamilyComparison compare_families(const Vec3& c_dot, double r0, double r_dot) {
  auto sphere = sphere_scenario(r0, c_dot, r_dot, 1);
  sphere.time.t_end = minnaert_period();
  sphere.time.output_dt = sphere.time.t_end / 20;
  auto ell = sphere;
  ell.initial.bubbles = {shapes::EllipsoidParams::make(Vec3::Zero(), r0 * Mat3::Identity())};
  ell.initial_velocity = shapes::ellipsoid_tangent(c_dot, r_dot * Mat3::Identity());
  const auto ts = dynamics::integrate(sphere);
  const auto te = dynamics::integrate(ell);
  FamilyComparison out;
  out.completed = ts.termination == dynamics::Termination::Completed &&
                  te.termination == dynamics::Termination::Completed;
  double travel = 0.0;
  const std::size_t n = std::min(ts.samples.size(), te.samples.size());
  Vec3 p0 = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ts.samples[i];
    const auto& b = te.samples[i];
    const Mat3 s = shapes::symmetric_from_coords(b.q.tail(6));
    out.shape = std::max(out.shape, (s - a.q(3) * Mat3::Identity()).cwiseAbs().maxCoeff() / a.q(3));
    out.center = std::max(out.center, (b.q.head<3>() - a.q.head<3>()).norm());
    travel = std::max(travel, a.q.head<3>().norm());
    const Vec3 p = (potential::added_mass(ell.initial.with_coords(b.q), 1, 1.0).entries *
                    b.velocity).head<3>();
    if (i == 0) p0 = p;
    if (p0.norm() > 0.0) out.momentum_drift = std::max(out.momentum_drift, (p - p0).norm() / p0.norm());
  }
  out.center /= travel > 1e-6 * r0 ? travel : r0;
  return out;
}

Outcome ellipsoid() {
  const auto pulsating = compare_families(Vec3::Zero(), 1.15, 0.1);
  // translation couples to the shear modes, so this run is recorded only
  const auto moving = compare_families(Vec3(0.05, 0.0, 0.0), 1.15, 0.0);

  // finite-difference checks of the ellipsoid normal velocity and measure gradients
  Mat3 s;
  s << 1.3, 0.2, -0.1, 0.2, 0.9, 0.05, -0.1, 0.05, 1.1;
  const auto e = shapes::EllipsoidParams::make(Vec3(0.3, -0.2, 0.5), s);
  std::mt19937 rng(17);
  std::normal_distribution<double> nd;
  double worst_nv = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vector rate(9);
    for (int i = 0; i < 9; ++i) rate(i) = nd(rng);
    const Vec3 y = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
    const double h = 1e-6;
    const auto ep = shapes::EllipsoidParams::from_coords(e.coords() + h * rate);
    const auto em = shapes::EllipsoidParams::from_coords(e.coords() - h * rate);
    const double fd = (ep.map(y) - em.map(y)).dot(e.normal(y)) / (2 * h);
    worst_nv = std::max(worst_nv, fd_relative(e.normal_velocity(rate, e.map(y), e.normal(y)), fd));
  }
  const Vector gv = e.volume_gradient(), ga = e.area_gradient();
  for (int i = 0; i < 9; ++i) {
    const double h = 1e-6;
    Vector qp = e.coords(), qm = e.coords();
    qp(i) += h;
    qm(i) -= h;
    const auto ep = shapes::EllipsoidParams::from_coords(qp);
    const auto em = shapes::EllipsoidParams::from_coords(qm);
    worst_grad = std::max(worst_grad, fd_relative(gv(i), (ep.volume() - em.volume()) / (2 * h)));
    worst_grad = std::max(worst_grad, fd_relative(ga(i), (ep.area() - em.area()) / (2 * h)));
  }
  return {pulsating.completed && pulsating.shape < kEllipsoidDeviation &&
              pulsating.center < kEllipsoidDeviation && worst_nv < kGradientFd &&
              worst_grad < kGradientFd,
          fmt("level 1, one period from S = rI, S' = r'I: max |S - rI|/r %.3e, centre %.3e "
              "(tol %.0e); FD errors: normal velocity %.3e, measure gradients %.3e (tol %.0e); "
              "with c' = 0.05 (recorded, not asserted): shape %.3e, centre %.3e, "
              "ellipsoid momentum drift %.3e",
              pulsating.shape, pulsating.center, kEllipsoidDeviation, worst_nv, worst_grad,
              kGradientFd, moving.shape, moving.center, moving.momentum_drift)};
}

Outcome residual() {
  auto sc = sphere_scenario(1.2, Vec3(0.3, 0.0, 0.1), 0.2, 1);
  const dynamics::State state{sc.initial, sc.initial_velocity, 0.0};
  std::vector<double> values;
  std::string detail = "levels 1..3:";
  for (int level = 1; level <= 3; ++level) {
    sc.solver.mesh_level = level;
    sc.solver.fd_step = 1e-4 / std::pow(2.0, level - 1);
    const double eps = 1e-3 / std::pow(2.0, level);
    const Vector acc = dynamics::eom_rhs(sc, state);
    values.push_back(dynamics::boundary_residual(sc, state, acc, level, eps));
    detail += fmt(" %.3e (eps %.1e)", values.back(), eps);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) decreasing = decreasing && values[i] < values[i - 1];
  return {decreasing, detail + (decreasing ? ", strictly decreasing" : ", not decreasing")};
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  std::vector<bool> selected(10, argc < 2);
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k >= 1 && k <= 9) selected[k] = true;
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"BEM accuracy", bem_accuracy},
      {"added mass", added_mass},
      {"pipeline vs closed form", pipeline_vs_closed_form},
      {"Rayleigh-Plesset limit", rayleigh_plesset},
      {"Minnaert frequency", minnaert},
      {"conservation", conservation},
      {"cavity constraint", cavity},
      {"ellipsoid consistency", ellipsoid},
      {"boundary residual", residual},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i + 1]) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
