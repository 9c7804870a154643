#include "bubbledyn/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "bubbledyn/error.hpp"
#include "bubbledyn/scenario_io.hpp"

namespace bubbledyn::commands {

using nlohmann::json;
using std::numbers::pi;

namespace {

bool single_unbounded_sphere(const dynamics::Scenario& sc) {
  return !sc.initial.bounded() && sc.initial.bubbles.size() == 1 &&
         std::holds_alternative<shapes::SphereParams>(sc.initial.bubbles[0]);
}

std::vector<double> sample_times(const dynamics::Trajectory& traj) {
  std::vector<double> t;
  for (const auto& s : traj.samples) t.push_back(s.t);
  return t;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

double max_relative_drift(const dynamics::Trajectory& traj) {
  if (traj.samples.empty()) return 0.0;
  const double e0 = traj.samples.front().total;
  double worst = 0.0;
  for (const auto& s : traj.samples)
    worst = std::max(worst, std::abs(s.total - e0) / std::max(std::abs(e0), 1e-300));
  return worst;
}

double equivalent_radius(const shapes::ShapeParams& m) {
  const double v = std::visit([](const auto& s) { return s.volume(); }, m);
  return std::cbrt(3.0 * v / (4.0 * pi));
}

}  // namespace

ReferenceTrajectory closed_form_trajectory(const dynamics::Scenario& sc,
                                           const std::vector<double>& times) {
  const auto& sphere = std::get<shapes::SphereParams>(sc.initial.bubbles.at(0));
  Vector y0(8);
  y0 << sphere.center, sphere.radius, sc.initial_velocity.head<3>(), sc.initial_velocity(3);
  const auto& gas = sc.model.gases.at(0);
  auto rhs = [&](double, const Vector& y) {
    reference::SingleBubbleState s{y.head<3>(), y.segment<3>(4), y(3), y(7)};
    if (!(s.r > 0.0)) throw DegenerateShapeError("reference radius collapsed");
    const auto a = reference::closed_form_rhs(s, gas, sc.model.p_infinity,
                                              sc.model.liquid_density, sc.model.surface_tension,
                                              sc.translation_coefficient);
    Vector out(8);
    out << y.segment<3>(4), y(7), a.c_ddot, a.r_ddot;
    return out;
  };
  ReferenceTrajectory ref;
  auto observe = [&](double t, const Vector& y) {
    ref.t.push_back(t);
    ref.states.push_back({y.head<3>(), y.segment<3>(4), y(3), y(7)});
  };
  ode::Options opts;
  opts.rel_tol = std::min(sc.solver.rel_tol, 1e-10);
  opts.abs_tol = std::min(sc.solver.abs_tol, 1e-12);
  if (!times.empty()) ode::integrate(rhs, 0.0, y0, times.back(), times, observe, nullptr, opts);
  return ref;
}

Deviation reference_deviation(const dynamics::Trajectory& traj, const ReferenceTrajectory& ref) {
  Deviation d;
  const std::size_t n = std::min(traj.samples.size(), ref.states.size());
  if (n == 0) return d;
  double travel = 0.0, abs_c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = traj.samples[i];
    const auto& r = ref.states[i];
    d.radius = std::max(d.radius, std::abs(s.q(3) - r.r) / r.r);
    abs_c = std::max(abs_c, (s.q.head<3>() - r.c).norm());
    travel = std::max(travel, (r.c - ref.states[0].c).norm());
  }
  d.center = travel > 1e-12 * ref.states[0].r ? abs_c / travel : abs_c / ref.states[0].r;
  return d;
}

int run(const std::filesystem::path& path, const std::filesystem::path& out_dir,
        const RunOptions& options, std::ostream& log) {
  dynamics::Scenario sc = io::load_scenario(path);
  if (options.residual_cadence) sc.residual_cadence = *options.residual_cadence;
  if (options.translation_coefficient) sc.translation_coefficient = *options.translation_coefficient;
  io::validate_initial_state(sc, path.string());

  std::filesystem::create_directories(out_dir);
  log << "integrating " << path.string() << " to t = " << sc.time.t_end << " at mesh level "
      << sc.solver.mesh_level << "\n";
  const dynamics::Trajectory traj = dynamics::integrate(sc);

  {
    std::ofstream csv(out_dir / "trajectory.csv");
    io::write_trajectory_csv(csv, traj);
  }

  json diag;
  diag["termination"] = dynamics::to_string(traj.termination);
  diag["message"] = traj.message;
  diag["steps"] = {{"accepted", traj.accepted_steps},
                   {"rejected", traj.rejected_steps},
                   {"rhs_evaluations", traj.rhs_evaluations}};
  diag["samples"] = traj.samples.size();
  diag["final_time"] = traj.samples.empty() ? 0.0 : traj.samples.back().t;
  diag["gram_condition_max"] = traj.max_gram_condition;
  diag["reciprocity_defect_max"] = traj.max_reciprocity_defect;
  diag["energy_relative_drift_max"] = max_relative_drift(traj);
  diag["characteristic_period"] = dynamics::characteristic_period(sc);
  diag["warnings"] = traj.warnings;
  if (sc.initial.bounded()) {
    double worst = 0.0;
    for (const auto& s : traj.samples) {
      const auto cb = dynamics::constraint_basis(sc.initial.with_coords(s.q));
      worst = std::max(worst, std::abs(cb.flux.dot(s.velocity)) / cb.flux.norm());
    }
    diag["constraint_flux_max"] = worst;
  }

  if (single_unbounded_sphere(sc) && !traj.samples.empty()) {
    const auto ref = closed_form_trajectory(sc, sample_times(traj));
    std::ofstream csv(out_dir / "reference.csv");
    csv << "t,cx,cy,cz,r,vcx,vcy,vcz,vr\n";
    for (std::size_t i = 0; i < ref.t.size(); ++i) {
      const auto& s = ref.states[i];
      csv << io::format_double(ref.t[i]);
      for (int k = 0; k < 3; ++k) csv << "," << io::format_double(s.c(k));
      csv << "," << io::format_double(s.r);
      for (int k = 0; k < 3; ++k) csv << "," << io::format_double(s.c_dot(k));
      csv << "," << io::format_double(s.r_dot) << "\n";
    }
    const Deviation dev = reference_deviation(traj, ref);
    diag["reference"] = {
        {"translation_coefficient",
         sc.translation_coefficient == reference::TranslationCoefficient::Resolved ? "resolved"
                                                                                    : "paper"},
        {"kappa", reference::kappa(sc.translation_coefficient)},
        {"max_relative_deviation_radius", dev.radius},
        {"max_relative_deviation_center", dev.center}};
    if (traj.samples.front().impulse) {
      const Vec3 p0 = *traj.samples.front().impulse;
      double worst = 0.0;
      for (const auto& s : traj.samples)
        worst = std::max(worst, (*s.impulse - p0).norm() / std::max(p0.norm(), 1e-300));
      diag["impulse_relative_drift_max"] = worst;
    }
  }
  std::ofstream(out_dir / "diagnostics.json") << diag.dump(2) << "\n";
  log << "termination: " << dynamics::to_string(traj.termination);
  if (!traj.message.empty()) log << " (" << traj.message << ")";
  log << "\n";
  return 0;
}

int check(const std::filesystem::path& path, std::ostream& out) {
  json report;
  report["scenario"] = path.string();
  bool ok = true;
  dynamics::Scenario sc;
  try {
    sc = io::load_scenario(path);
    report["parse"] = "ok";
  } catch (const ValidationError& e) {
    report["parse"] = e.what();
    out << report.dump(2) << "\n";
    return 1;
  }

  report["bubbles"] = sc.initial.bubbles.size();
  report["dimension"] = sc.initial.dimension();
  const auto adm = shapes::check_admissible(sc.initial);
  report["admissible"] = adm.ok;
  report["min_gap"] = adm.clearances.empty() ? json(nullptr) : json(adm.min_gap());
  report["min_relative_gap"] =
      adm.clearances.empty() ? json(nullptr) : json(adm.min_relative_gap(sc.initial));
  report["admissibility_messages"] = adm.messages;
  ok = ok && adm.ok;

  if (sc.initial.bounded()) {
    json cavity;
    try {
      const auto cb = dynamics::constraint_basis(sc.initial);
      const double rate = cb.flux.dot(sc.initial_velocity);
      cavity["volume_rate"] = rate;
      try {
        dynamics::check_velocity(sc.initial, sc.initial_velocity);
        cavity["compatible"] = true;
      } catch (const ConstraintError& e) {
        cavity["compatible"] = false;
        cavity["message"] = e.what();
        ok = false;
      }
    } catch (const ConstraintError& e) {
      cavity["compatible"] = false;
      cavity["message"] = e.what();
      ok = false;
    }
    report["cavity_constraint"] = cavity;
  }

  json bubbles = json::array();
  const auto pressures = gas::bubble_pressures(sc.model, sc.initial);
  double min_period = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sc.initial.bubbles.size(); ++k) {
    json b;
    const double r = equivalent_radius(sc.initial.bubbles[k]);
    const double target = sc.model.p_infinity + 2.0 * sc.model.surface_tension / r;
    b["equivalent_radius"] = r;
    b["gas_pressure"] = pressures[k];
    b["pressure_imbalance"] = (pressures[k] - target) / std::max(target, 1e-300);
    const int off = sc.initial.offset(static_cast<int>(k));
    const int dim = shapes::dimension(sc.initial.bubbles[k]);
    b["at_rest"] = sc.initial_velocity.segment(off, dim).isZero(0.0);
    b["equilibrium"] = std::abs(pressures[k] - target) <= 1e-9 * std::max(target, 1e-300) &&
                       b["at_rest"].get<bool>();
    try {
      const double req = reference::equilibrium_radius(sc.model.gases[k], sc.model.p_infinity,
                                                       sc.model.surface_tension);
      b["equilibrium_radius"] = req;
      const auto f = reference::minnaert_frequency(sc.model.gases[k], sc.model.p_infinity,
                                                   sc.model.liquid_density, req);
      if (f.omega > 0.0) {
        b["minnaert_omega"] = f.omega;
        b["minnaert_period"] = 2.0 * pi / f.omega;
        min_period = std::min(min_period, 2.0 * pi / f.omega);
      }
    } catch (const DomainError& e) {
      b["equilibrium_radius"] = nullptr;
      b["note"] = e.what();
    }
    bubbles.push_back(b);
  }
  report["bubble_reports"] = bubbles;
  if (std::isfinite(min_period)) report["recommended_output_dt"] = min_period / 20.0;
  report["ok"] = ok;
  out << report.dump(2) << "\n";
  return ok ? 0 : 1;
}

int convergence(const std::filesystem::path& path, const std::vector<int>& levels,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out) {
  const dynamics::Scenario base = io::load_scenario(path);
  io::validate_initial_state(base, path.string());
  if (levels.empty()) throw ValidationError("convergence: no mesh levels given");

  struct Row {
    int level;
    Matrix added_mass;
    Vector endpoint;
    double residual;
    std::string termination;
  };
  std::vector<Row> rows;
  const dynamics::State initial{base.initial, base.initial_velocity, 0.0};
  for (const int level : levels) {
    dynamics::Scenario sc = base;
    sc.solver.mesh_level = level;
    sc.residual_cadence = 0;
    Row row;
    row.level = level;
    row.added_mass = potential::added_mass(base.initial, level, base.model.liquid_density,
                                           dynamics::constraint_basis(base.initial).basis)
                         .entries;
    const Vector acc = dynamics::eom_rhs(sc, initial);
    row.residual = dynamics::boundary_residual(sc, initial, acc, level);
    const auto traj = dynamics::integrate(sc);
    row.endpoint = traj.samples.back().q;
    row.termination = dynamics::to_string(traj.termination);
    rows.push_back(std::move(row));
  }

  const bool analytic = single_unbounded_sphere(base);
  Matrix exact;
  if (analytic) {
    const double r = std::get<shapes::SphereParams>(base.initial.bubbles[0]).radius;
    const double rho = base.model.liquid_density;
    exact = Matrix::Zero(4, 4);
    exact.diagonal() << 2 * pi * r * r * r / 3, 2 * pi * r * r * r / 3, 2 * pi * r * r * r / 3,
        4 * pi * r * r * r;
    exact *= rho;
  }
  const Row& finest = rows.back();
  std::vector<double> mass_err, end_err, res;
  for (const auto& row : rows) {
    const Matrix& target = analytic ? exact : finest.added_mass;
    mass_err.push_back((row.added_mass - target).cwiseAbs().maxCoeff() /
                       target.cwiseAbs().maxCoeff());
    end_err.push_back((row.endpoint - finest.endpoint).cwiseAbs().maxCoeff() /
                      std::max(finest.endpoint.cwiseAbs().maxCoeff(), 1e-300));
    res.push_back(row.residual);
  }
  auto orders = [&](const std::vector<double>& e, std::size_t count) {
    json o = json::array();
    for (std::size_t i = 0; i + 1 < count; ++i) {
      const double dl = rows[i + 1].level - rows[i].level;
      if (e[i] > 0 && e[i + 1] > 0 && dl != 0)
        o.push_back(std::log2(e[i] / e[i + 1]) / dl);
      else
        o.push_back(nullptr);
    }
    return o;
  };

  json table;
  table["reference"] = analytic ? "analytic added mass" : "finest level";
  json jrows = json::array();
  out << "level,added_mass_error,endpoint_delta,boundary_residual,termination\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << rows[i].level << "," << io::format_double(mass_err[i]) << ","
        << io::format_double(end_err[i]) << "," << io::format_double(res[i]) << ","
        << rows[i].termination << "\n";
    json jr;
    jr["level"] = rows[i].level;
    jr["added_mass"] = json::array();
    for (int a = 0; a < rows[i].added_mass.rows(); ++a)
      jr["added_mass"].push_back(vector_json(rows[i].added_mass.row(a).transpose()));
    jr["added_mass_error"] = mass_err[i];
    jr["endpoint"] = vector_json(rows[i].endpoint);
    jr["endpoint_delta"] = end_err[i];
    jr["boundary_residual"] = res[i];
    jr["termination"] = rows[i].termination;
    jrows.push_back(jr);
  }
  table["rows"] = jrows;
  if (rows.size() < 2) {
    table["warning"] = "a single level gives no order estimate";
    out << "warning: a single level gives no order estimate\n";
  } else {
    table["order_added_mass"] = orders(mass_err, analytic ? rows.size() : rows.size() - 1);
    table["order_endpoint"] = orders(end_err, rows.size() - 1);
    table["order_residual"] = orders(res, rows.size());
    out << "observed order (added mass): " << table["order_added_mass"].dump() << "\n";
    out << "observed order (endpoint): " << table["order_endpoint"].dump() << "\n";
    out << "observed order (residual): " << table["order_residual"].dump() << "\n";
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream(*out_dir / "convergence.json") << table.dump(2) << "\n";
  }
  return 0;
}

}  // namespace bubbledyn::commands
