#include "bubbledyn/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bubbledyn/error.hpp"
#include "bubbledyn/off_io.hpp"

namespace bubbledyn::io {

using nlohmann::json;

namespace {

/// Character iterator that publishes how far the parser has read.
class TrackingIterator {
public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator(const char* p, std::size_t* consumed) : p_(p), consumed_(consumed) {}
  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    if (consumed_) ++*consumed_;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

private:
  const char* p_;
  std::size_t* consumed_;
};

std::string escape_pointer_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

/// Builds the document while recording the source line of every member.
class LocatingSax : public nlohmann::json_sax<json> {
public:
  LocatingSax(const std::string& text, const std::size_t* consumed, std::string source)
      : text_(text), consumed_(consumed), source_(std::move(source)) {}

  json root;
  std::map<std::string, int> lines;

  bool null() override { return add(nullptr); }
  bool boolean(bool v) override { return add(v); }
  bool number_integer(number_integer_t v) override { return add(v); }
  bool number_unsigned(number_unsigned_t v) override { return add(v); }
  bool number_float(number_float_t v, const string_t&) override { return add(v); }
  bool string(string_t& v) override { return add(v); }
  bool binary(binary_t& v) override { return add(json::binary(v)); }
  bool start_object(std::size_t) override { return open(json::object()); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(json::array()); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    key_ = k;
    const std::string path = frames_.back().path + "/" + escape_pointer_token(k);
    if (frames_.back().node->contains(k))
      throw ValidationError(source_ + ":" + std::to_string(line_at(*consumed_)) +
                            ": duplicate key '" + k + "'");
    lines.emplace(path, line_at(*consumed_));
    return true;
  }
  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    std::string what = ex.what();
    const auto pos = what.find("parse error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ValidationError(source_ + ":" + std::to_string(line_at(position)) + ": " + what);
  }

private:
  struct Frame {
    json* node;
    std::string path;
  };

  int line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + offset, '\n'));
  }

  std::pair<json*, std::string> insert(json&& v) {
    if (frames_.empty()) {
      root = std::move(v);
      lines.emplace("", line_at(*consumed_));
      return {&root, ""};
    }
    Frame& f = frames_.back();
    if (f.node->is_object()) {
      json& slot = (*f.node)[key_];
      slot = std::move(v);
      return {&slot, f.path + "/" + escape_pointer_token(key_)};
    }
    f.node->push_back(std::move(v));
    const std::string path = f.path + "/" + std::to_string(f.node->size() - 1);
    lines.emplace(path, line_at(*consumed_));
    return {&f.node->back(), path};
  }

  bool add(json&& v) {
    insert(std::move(v));
    return true;
  }
  bool open(json&& v) {
    auto [node, path] = insert(std::move(v));
    frames_.push_back({node, path});
    return true;
  }
  bool close() {
    frames_.pop_back();
    return true;
  }

  const std::string& text_;
  const std::size_t* consumed_;
  std::string source_;
  std::vector<Frame> frames_;
  std::string key_;
};

/// Typed access to a located document; every failure names the field and line.
class Reader {
public:
  Reader(const json& root, const std::map<std::string, int>& lines, std::string source)
      : root_(root), lines_(lines), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    std::string p = path;
    int line = 1;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) {
        line = it->second;
        break;
      }
      if (p.empty()) break;
      p = p.substr(0, p.rfind('/'));
    }
    const std::string field = path.empty() ? "document" : path.substr(1);
    throw ValidationError(source_ + ":" + std::to_string(line) + ": " + field + ": " + message);
  }

  const json& at(const std::string& path) const {
    return root_.at(json::json_pointer(path));
  }
  bool has(const std::string& path) const { return root_.contains(json::json_pointer(path)); }

  const json& object(const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!has(path)) fail(path, "missing object");
    const json& j = at(path);
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(path + "/" + escape_pointer_token(k), "unknown field");
    }
    return j;
  }

  double number(const std::string& path) const {
    if (!has(path)) fail(path, "missing number");
    const json& j = at(path);
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
  }
  double number(const std::string& path, double fallback) const {
    return has(path) ? number(path) : fallback;
  }
  double positive(const std::string& path) const {
    const double v = number(path);
    if (!(v > 0.0)) fail(path, "must be positive, got " + format_double(v));
    return v;
  }
  double non_negative(const std::string& path, double fallback) const {
    const double v = number(path, fallback);
    if (v < 0.0) fail(path, "must be non-negative, got " + format_double(v));
    return v;
  }
  int integer(const std::string& path, int fallback) const {
    if (!has(path)) return fallback;
    const json& j = at(path);
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
  }
  std::string string(const std::string& path) const {
    if (!has(path)) fail(path, "missing string");
    const json& j = at(path);
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  Vec3 vec3(const std::string& path) const {
    if (!has(path)) fail(path, "missing 3-vector");
    const json& j = at(path);
    if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v(i) = number(path + "/" + std::to_string(i));
    return v;
  }
  Mat3 mat3(const std::string& path) const {
    if (!has(path)) fail(path, "missing 3x3 matrix");
    const json& j = at(path);
    if (!j.is_array() || j.size() != 3) fail(path, "expected 3 rows of 3 numbers");
    Mat3 m;
    for (int i = 0; i < 3; ++i) m.row(i) = vec3(path + "/" + std::to_string(i)).transpose();
    return m;
  }

private:
  const json& root_;
  const std::map<std::string, int>& lines_;
  std::string source_;
};

json to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }
json to_json(const Mat3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

dynamics::Scenario parse_scenario(const std::string& text, const std::string& source,
                                  const std::filesystem::path& base_dir) {
  std::size_t consumed = 0;
  LocatingSax sax(text, &consumed, source);
  TrackingIterator first(text.data(), &consumed), last(text.data() + text.size(), nullptr);
  json::sax_parse(first, last, &sax);
  const Reader r(sax.root, sax.lines, source);

  r.object("", {"schema_version", "liquid", "surface_tension", "domain", "bubbles", "solver",
                "time", "comparison", "diagnostics"});
  const int version = r.integer("/schema_version", -1);
  if (version != kSchemaVersion)
    r.fail("/schema_version", "unsupported schema version (expected " +
                                  std::to_string(kSchemaVersion) + ")");

  dynamics::Scenario sc;
  r.object("/liquid", {"density", "p_infinity"});
  sc.model.liquid_density = r.positive("/liquid/density");
  sc.model.p_infinity = r.non_negative("/liquid/p_infinity", 0.0);
  if (!r.has("/liquid/p_infinity")) r.fail("/liquid/p_infinity", "missing number");
  sc.model.surface_tension = r.non_negative("/surface_tension", 0.0);

  if (r.has("/domain")) {
    const std::string kind = r.string("/domain/kind");
    if (kind == "unbounded") {
      r.object("/domain", {"kind"});
      sc.initial.domain = shapes::Unbounded{};
    } else if (kind == "cavity_sphere") {
      r.object("/domain", {"kind", "center", "radius"});
      sc.initial.domain = shapes::CavitySphere{r.vec3("/domain/center"), r.positive("/domain/radius")};
    } else if (kind == "cavity_mesh") {
      r.object("/domain", {"kind", "path"});
      shapes::CavityMesh cm;
      cm.path = r.string("/domain/path");
      std::filesystem::path full = cm.path;
      if (full.is_relative() && !base_dir.empty()) full = base_dir / full;
      try {
        std::ifstream in(full);
        if (!in) r.fail("/domain/path", "cannot open mesh file '" + full.string() + "'");
        auto mesh = read_off(in, full.string());
        cm.vertices = std::move(mesh.vertices);
        cm.triangles = std::move(mesh.triangles);
      } catch (const ValidationError& e) {
        if (std::string(e.what()).rfind(source, 0) == 0) throw;
        r.fail("/domain/path", e.what());
      }
      sc.initial.domain = std::move(cm);
    } else {
      r.fail("/domain/kind", "unknown domain kind '" + kind + "'");
    }
  }

  if (!r.has("/bubbles") || !r.at("/bubbles").is_array() || r.at("/bubbles").empty())
    r.fail("/bubbles", "expected a non-empty array of bubbles");
  const std::size_t nb = r.at("/bubbles").size();
  Vector velocity = Vector::Zero(0);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::string b = "/bubbles/" + std::to_string(k);
    r.object(b, {"shape", "velocity", "gas", "mass", "equilibrium_radius"});
    const std::string kind = r.string(b + "/shape/kind");
    shapes::ShapeParams shape;
    Vector rate;
    try {
      if (kind == "sphere") {
        r.object(b + "/shape", {"kind", "center", "radius"});
        const double radius = r.number(b + "/shape/radius");
        if (!(radius > 0.0)) r.fail(b + "/shape/radius", "must be positive");
        shape = shapes::SphereParams::make(r.vec3(b + "/shape/center"), radius);
        Vec3 cdot = Vec3::Zero();
        double rdot = 0.0;
        if (r.has(b + "/velocity")) {
          r.object(b + "/velocity", {"center", "radius"});
          if (r.has(b + "/velocity/center")) cdot = r.vec3(b + "/velocity/center");
          rdot = r.number(b + "/velocity/radius", 0.0);
        }
        rate = shapes::sphere_tangent(cdot, rdot);
      } else if (kind == "ellipsoid") {
        r.object(b + "/shape", {"kind", "center", "matrix"});
        try {
          shape = shapes::EllipsoidParams::make(r.vec3(b + "/shape/center"),
                                                r.mat3(b + "/shape/matrix"));
        } catch (const DegenerateShapeError& e) {
          r.fail(b + "/shape/matrix", e.what());
        }
        Vec3 cdot = Vec3::Zero();
        Mat3 sdot = Mat3::Zero();
        if (r.has(b + "/velocity")) {
          r.object(b + "/velocity", {"center", "matrix"});
          if (r.has(b + "/velocity/center")) cdot = r.vec3(b + "/velocity/center");
          if (r.has(b + "/velocity/matrix")) sdot = r.mat3(b + "/velocity/matrix");
        }
        try {
          rate = shapes::ellipsoid_tangent(cdot, sdot);
        } catch (const DegenerateShapeError& e) {
          r.fail(b + "/velocity/matrix", e.what());
        }
      } else {
        r.fail(b + "/shape/kind", "unknown shape kind '" + kind + "'");
      }
    } catch (const DegenerateShapeError& e) {
      r.fail(b + "/shape", e.what());
    }

    r.object(b + "/gas", {"kind", "K", "gamma"});
    const std::string gkind = r.string(b + "/gas/kind");
    if (gkind != "polytropic") r.fail(b + "/gas/kind", "unknown gas law '" + gkind + "'");
    const double K = r.number(b + "/gas/K");
    const double gamma = r.number(b + "/gas/gamma");
    if (!(K > 0.0)) r.fail(b + "/gas/K", "must be positive, got " + format_double(K));
    if (!(gamma >= 1.0)) r.fail(b + "/gas/gamma", "must be at least 1, got " + format_double(gamma));
    gas::BubbleGas g;
    g.law = gas::Polytropic::make(K, gamma);
    const bool has_mass = r.has(b + "/mass");
    const bool has_req = r.has(b + "/equilibrium_radius");
    if (has_mass == has_req)
      r.fail(b, "exactly one of 'mass' and 'equilibrium_radius' is required");
    if (has_mass) {
      g.mass = r.positive(b + "/mass");
    } else {
      const double req = r.positive(b + "/equilibrium_radius");
      if (!(sc.model.p_infinity > 0.0))
        r.fail(b + "/equilibrium_radius", "requires a positive p_infinity");
      g.mass = reference::equilibrium_mass(g.law, sc.model.p_infinity, req,
                                           sc.model.surface_tension);
    }
    sc.model.gases.push_back(g);
    sc.initial.bubbles.push_back(shape);
    Vector grown(velocity.size() + rate.size());
    grown << velocity, rate;
    velocity = grown;
  }
  sc.initial_velocity = velocity;

  if (r.has("/solver")) {
    r.object("/solver", {"mesh_level", "fd_step", "rel_tol", "abs_tol", "collision_gap_fraction"});
    auto& s = sc.solver;
    s.mesh_level = r.integer("/solver/mesh_level", s.mesh_level);
    if (s.mesh_level < 0 || s.mesh_level > 6) r.fail("/solver/mesh_level", "must lie in 0..6");
    if (r.has("/solver/fd_step")) s.fd_step = r.positive("/solver/fd_step");
    if (r.has("/solver/rel_tol")) s.rel_tol = r.positive("/solver/rel_tol");
    if (r.has("/solver/abs_tol")) s.abs_tol = r.positive("/solver/abs_tol");
    s.collision_gap_fraction =
        r.non_negative("/solver/collision_gap_fraction", s.collision_gap_fraction);
    if (s.collision_gap_fraction >= 1.0)
      r.fail("/solver/collision_gap_fraction", "must be below 1");
  }

  r.object("/time", {"t_end", "output_dt"});
  sc.time.t_end = r.positive("/time/t_end");
  sc.time.output_dt = r.positive("/time/output_dt");

  if (r.has("/comparison")) {
    r.object("/comparison", {"translation_coefficient"});
    const std::string tc = r.string("/comparison/translation_coefficient");
    if (tc == "resolved")
      sc.translation_coefficient = reference::TranslationCoefficient::Resolved;
    else if (tc == "paper")
      sc.translation_coefficient = reference::TranslationCoefficient::Alternative;
    else
      r.fail("/comparison/translation_coefficient", "expected 'resolved' or 'paper'");
  }
  if (r.has("/diagnostics")) {
    r.object("/diagnostics", {"residual_cadence"});
    sc.residual_cadence = r.integer("/diagnostics/residual_cadence", 0);
    if (sc.residual_cadence < 0) r.fail("/diagnostics/residual_cadence", "must be non-negative");
  }
  return sc;
}

dynamics::Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ":1: cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string(), path.parent_path());
}

std::string canonical_json(const dynamics::Scenario& sc) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["liquid"] = {{"density", sc.model.liquid_density}, {"p_infinity", sc.model.p_infinity}};
  j["surface_tension"] = sc.model.surface_tension;
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, shapes::Unbounded>)
          j["domain"] = {{"kind", "unbounded"}};
        else if constexpr (std::is_same_v<D, shapes::CavitySphere>)
          j["domain"] = {{"kind", "cavity_sphere"}, {"center", to_json(d.center)}, {"radius", d.radius}};
        else
          j["domain"] = {{"kind", "cavity_mesh"}, {"path", d.path}};
      },
      sc.initial.domain);
  json bubbles = json::array();
  for (std::size_t k = 0; k < sc.initial.bubbles.size(); ++k) {
    json b;
    const Vector rate = sc.initial_velocity.segment(sc.initial.offset(static_cast<int>(k)),
                                                    shapes::dimension(sc.initial.bubbles[k]));
    if (const auto* s = std::get_if<shapes::SphereParams>(&sc.initial.bubbles[k])) {
      b["shape"] = {{"kind", "sphere"}, {"center", to_json(s->center)}, {"radius", s->radius}};
      b["velocity"] = {{"center", to_json(Vec3(rate.head<3>()))}, {"radius", rate(3)}};
    } else {
      const auto& e = std::get<shapes::EllipsoidParams>(sc.initial.bubbles[k]);
      b["shape"] = {{"kind", "ellipsoid"}, {"center", to_json(e.center)}, {"matrix", to_json(e.shape)}};
      b["velocity"] = {{"center", to_json(Vec3(rate.head<3>()))},
                       {"matrix", to_json(shapes::symmetric_from_coords(rate.tail(6)))}};
    }
    const auto& law = std::get<gas::Polytropic>(sc.model.gases[k].law);
    b["gas"] = {{"kind", "polytropic"}, {"K", law.K}, {"gamma", law.gamma}};
    b["mass"] = sc.model.gases[k].mass;
    bubbles.push_back(b);
  }
  j["bubbles"] = bubbles;
  j["solver"] = {{"mesh_level", sc.solver.mesh_level},
                 {"fd_step", sc.solver.fd_step},
                 {"rel_tol", sc.solver.rel_tol},
                 {"abs_tol", sc.solver.abs_tol},
                 {"collision_gap_fraction", sc.solver.collision_gap_fraction}};
  j["time"] = {{"t_end", sc.time.t_end}, {"output_dt", sc.time.output_dt}};
  j["comparison"] = {{"translation_coefficient",
                      sc.translation_coefficient == reference::TranslationCoefficient::Resolved
                          ? "resolved"
                          : "paper"}};
  j["diagnostics"] = {{"residual_cadence", sc.residual_cadence}};
  return j.dump(2) + "\n";
}

void validate_initial_state(const dynamics::Scenario& sc, const std::string& source) {
  const auto report = shapes::check_admissible(sc.initial);
  if (!report.ok) {
    std::string msg = source + ": bubbles: initial configuration is not admissible";
    for (const auto& m : report.messages) msg += "; " + m;
    throw ValidationError(msg);
  }
  if (!sc.initial.bounded()) return;
  try {
    dynamics::check_velocity(sc.initial, sc.initial_velocity);
  } catch (const ConstraintError& e) {
    std::string which;
    const auto basis = dynamics::constraint_basis(sc.initial);
    for (std::size_t k = 0; k < sc.initial.bubbles.size(); ++k) {
      const int off = sc.initial.offset(static_cast<int>(k));
      const int dim = shapes::dimension(sc.initial.bubbles[k]);
      if (basis.flux.segment(off, dim).dot(sc.initial_velocity.segment(off, dim)) != 0.0)
        which += (which.empty() ? "" : ", ") + std::string("bubbles/") + std::to_string(k) + "/velocity";
    }
    throw ValidationError(source + ": " + (which.empty() ? "bubbles" : which) + ": " + e.what() +
                          "; the total gas volume inside a closed cavity cannot change");
  }
}

std::vector<std::string> trajectory_columns(const shapes::Configuration& config) {
  std::vector<std::string> cols{"t"};
  for (std::size_t k = 0; k < config.bubbles.size(); ++k) {
    const std::string p = "b" + std::to_string(k) + "_";
    std::vector<std::string> names;
    if (std::holds_alternative<shapes::SphereParams>(config.bubbles[k]))
      names = {"cx", "cy", "cz", "r"};
    else
      names = {"cx", "cy", "cz", "s11", "s12", "s13", "s22", "s23", "s33"};
    for (const auto& n : names) cols.push_back(p + n);
    for (const auto& n : names) cols.push_back(p + "v" + n);
  }
  for (const char* n : {"energy_kinetic", "energy_potential", "energy_total", "impulse_x",
                        "impulse_y", "impulse_z", "boundary_residual"})
    cols.push_back(n);
  return cols;
}

void write_trajectory_csv(std::ostream& os, const dynamics::Trajectory& traj) {
  const auto cols = trajectory_columns(traj.initial);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (std::size_t k = 0; k < traj.initial.bubbles.size(); ++k) {
      const int off = traj.initial.offset(static_cast<int>(k));
      const int dim = shapes::dimension(traj.initial.bubbles[k]);
      for (int i = 0; i < dim; ++i) os << "," << format_double(s.q(off + i));
      for (int i = 0; i < dim; ++i) os << "," << format_double(s.velocity(off + i));
    }
    os << "," << format_double(s.kinetic) << "," << format_double(s.potential) << ","
       << format_double(s.total);
    for (int i = 0; i < 3; ++i) {
      os << ",";
      if (s.impulse) os << format_double((*s.impulse)(i));
    }
    os << ",";
    if (s.residual) os << format_double(*s.residual);
    os << "\n";
  }
}

}  // namespace bubbledyn::io
