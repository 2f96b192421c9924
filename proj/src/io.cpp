#include "berth/io.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "berth/scenarios.hpp"
#include "json.hpp"

namespace berth {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": invalid JSON: " + e.what());
  }
}

// Typed access to one JSON object with field-path diagnostics.
class Reader {
 public:
  Reader(const json& j, std::string source, std::string path = {})
      : j_(j), source_(std::move(source)), path_(std::move(path)) {
    if (!j_.is_object()) fail_here("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  Point point(const std::string& key) { return to_point(at(key), field(key)); }

  Point to_point(const json& v, const std::string& where) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ParseError(source_ + ": field '" + where + "': expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  std::vector<Point> points(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of [x, y]");
    std::vector<Point> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(to_point(v[i], field(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  Reader child(const std::string& key) {
    const json& v = at(key);
    if (!v.is_object()) fail(key, "expected an object");
    return Reader(v, source_, field(key));
  }

  /// Rejects keys not consumed so far.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ParseError(source_ + ": field '" + field(key) + "': " + msg);
  }

 private:
  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(key, "missing");
    return j_.at(key);
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void fail_here(const std::string& msg) const {
    throw ParseError(source_ + (path_.empty() ? "" : ": field '" + path_ + "'") + ": " + msg);
  }

  const json& j_;
  std::string source_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto with_invariants(const std::string& source, F&& f) {
  try {
    return f();
  } catch (const InvalidPolygon& e) {
    throw InvalidPolygon(source + ": " + e.what());
  } catch (const InvalidParameter& e) {
    throw InvalidParameter(source + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

CollisionMode collision_of(Reader& r, const std::string& key, CollisionMode fallback) {
  if (!r.has(key)) return fallback;
  const std::string s = r.string(key);
  try {
    return parse_collision_mode(s);
  } catch (const std::invalid_argument& e) {
    r.fail(key, e.what());
  }
}

}  // namespace

const char* to_string(ConfigKind k) {
  switch (k) {
    case ConfigKind::Ship: return "ship";
    case ConfigKind::Port: return "port";
    case ConfigKind::Scenario: return "scenario";
    case ConfigKind::Study: return "study";
  }
  return "?";
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("BERTH_DATA_DIR"); env && *env) return env;
#ifdef BERTH_DEFAULT_DATA_DIR
  return BERTH_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ShipParams parse_ship(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  Reader r(j, source);
  ShipParams p;
  p.name = r.string("name");
  p.water_density = r.number("water_density", p.water_density);
  p.L = r.number("L");
  p.B = r.number("B");
  p.d = r.number("d");
  p.m = r.number("m");
  p.mx = r.number("mx", p.mx);
  p.my = r.number("my", p.my);
  p.xG = r.number("xG", p.xG);
  p.Izz = r.number("Izz", p.Izz);
  p.Jzz = r.number("Jzz", p.Jzz);
  p.u_nominal = r.number("u_nominal", p.u_nominal);

  if (r.has("hull")) {
    Reader h = r.child("hull");
    auto& c = p.hull;
    c.X0 = h.number("X0", c.X0);
    c.Xvv = h.number("Xvv", c.Xvv);
    c.Xvr = h.number("Xvr", c.Xvr);
    c.Xrr = h.number("Xrr", c.Xrr);
    c.Yv = h.number("Yv", c.Yv);
    c.Yr = h.number("Yr", c.Yr);
    c.Nv = h.number("Nv", c.Nv);
    c.Nr = h.number("Nr", c.Nr);
    c.cross_flow_drag = h.number("cross_flow_drag", c.cross_flow_drag);
    c.strips = static_cast<int>(h.integer("strips", c.strips));
    h.finish();
  }
  if (r.has("propeller")) {
    Reader h = r.child("propeller");
    auto& c = p.propeller;
    c.diameter = h.number("diameter", c.diameter);
    c.thrust_deduction = h.number("thrust_deduction", c.thrust_deduction);
    c.wake_fraction = h.number("wake_fraction", c.wake_fraction);
    c.kt0 = h.number("kt0", c.kt0);
    c.kt1 = h.number("kt1", c.kt1);
    h.finish();
  }
  if (r.has("rudder")) {
    Reader h = r.child("rudder");
    auto& c = p.rudder;
    c.area = h.number("area", c.area);
    c.lift_slope = h.number("lift_slope", c.lift_slope);
    c.x_position = h.number("x_position", c.x_position);
    c.lateral_offset = h.number("lateral_offset", c.lateral_offset);
    c.drag_deduction = h.number("drag_deduction", c.drag_deduction);
    c.hull_interaction = h.number("hull_interaction", c.hull_interaction);
    c.interaction_x = h.number("interaction_x", c.interaction_x);
    c.flow_straightening = h.number("flow_straightening", c.flow_straightening);
    c.wake_ratio = h.number("wake_ratio", c.wake_ratio);
    c.slipstream_factor = h.number("slipstream_factor", c.slipstream_factor);
    h.finish();
  }
  if (r.has("thruster")) {
    Reader h = r.child("thruster");
    p.thruster.coefficient = h.number("coefficient", p.thruster.coefficient);
    p.thruster.arm = h.number("arm", p.thruster.arm);
    h.finish();
  }
  if (r.has("wind")) {
    Reader h = r.child("wind");
    auto& c = p.wind;
    c.air_density = h.number("air_density", c.air_density);
    c.frontal_area = h.number("frontal_area", c.frontal_area);
    c.lateral_area = h.number("lateral_area", c.lateral_area);
    c.cx1 = h.number("cx1", c.cx1);
    c.cx3 = h.number("cx3", c.cx3);
    c.cy1 = h.number("cy1", c.cy1);
    c.cy3 = h.number("cy3", c.cy3);
    c.cn2 = h.number("cn2", c.cn2);
    h.finish();
  }
  if (r.has("actuators")) {
    Reader h = r.child("actuators");
    auto& a = p.actuators;
    a.rudder_outboard = deg2rad(h.number("rudder_outboard_deg", rad2deg(a.rudder_outboard)));
    a.rudder_inboard = deg2rad(h.number("rudder_inboard_deg", rad2deg(a.rudder_inboard)));
    a.propeller_max = h.number("propeller_max", a.propeller_max);
    a.thruster_max = h.number("thruster_max", a.thruster_max);
    a.rudder_rate = deg2rad(h.number("rudder_rate_deg_s", rad2deg(a.rudder_rate)));
    a.propeller_rate = h.number("propeller_rate", a.propeller_rate);
    a.thruster_rate = h.number("thruster_rate", a.thruster_rate);
    a.rudder_scale = h.number("rudder_scale", a.rudder_scale);
    a.propeller_scale = h.number("propeller_scale", a.propeller_scale);
    a.thruster_scale = h.number("thruster_scale", a.thruster_scale);
    a.vectwin = h.boolean("vectwin", a.vectwin);
    a.fixed_propeller = h.boolean("fixed_propeller", a.fixed_propeller);
    a.fixed_propeller_revs = h.number("fixed_propeller_revs", a.fixed_propeller_revs);
    h.finish();
  }
  if (r.has("domain")) {
    Reader h = r.child("domain");
    p.domain.k_a = h.number("k_a", p.domain.k_a);
    p.domain.k_b = h.number("k_b", p.domain.k_b);
    h.finish();
  }
  r.finish();
  with_invariants(source, [&] {
    p.validate();
    return 0;
  });
  return p;
}

PortConfig parse_port(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  Reader r(j, source);
  PortConfig port;
  port.name = r.string("name", "port");
  r.string("note", "");
  std::vector<Point> vertices = r.points("vertices");
  Reader b = r.child("berth");
  port.berth = b.point("point");
  port.berth_heading = deg2rad(b.number("heading_deg"));
  const std::vector<Point> line = b.points("line");
  if (line.size() != 2) b.fail("line", "expected two end points");
  port.berth_line = {line[0], line[1]};
  b.finish();
  r.finish();

  return with_invariants(source, [&] {
    port.polygon = Polygon::from_closed(std::move(vertices));
    if (!is_inside(port.berth, port.polygon)) {
      throw InvalidParameter("berth point must lie strictly inside the port polygon");
    }
    for (const Point& e : port.berth_line) {
      if (std::abs(signed_distance(e, port.polygon)) > 1e-6) {
        throw InvalidParameter("berth line end points must lie on the port boundary");
      }
    }
    return port;
  });
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir) {
  const json j = parse_json(text, source);
  Reader r(j, source);
  ScenarioConfig s;
  s.name = r.string("name", "scenario");
  if (r.has("case")) {
    const long long id = r.integer("case");
    if (id < 1 || id > kCaseCount) {
      throw InvalidParameter(source + ": field 'case': expected a case id in 1..6, got " + std::to_string(id));
    }
    s = scenario_for_case(static_cast<int>(id));
    s.name = r.string("name", s.name);
    if (r.has("initial_state") || r.has("wind")) {
      r.fail("case", "a case reference cannot be combined with initial_state or wind");
    }
  } else {
    Reader x = r.child("initial_state");
    s.x0 = {x.number("x0"), x.number("y0"), deg2rad(x.number("psi_deg")), x.number("u"),
            x.number("v", 0.0), deg2rad(x.number("r_deg_s", 0.0))};
    x.finish();
    Reader w = r.child("wind");
    const double dir = w.number("direction_deg");
    const double speed = w.number("speed");
    w.finish();
    s.wind = with_invariants(source, [&] { return WindCondition(speed, deg2rad(dir)); });
  }
  s.ship_file = resolve(base_dir, r.string("ship", ""));
  s.port_file = resolve(base_dir, r.string("port", ""));
  s.segments = static_cast<int>(r.integer("segments", s.segments));
  s.substeps = static_cast<int>(r.integer("substeps", s.substeps));
  s.speed_constraint = r.boolean("speed_constraint", s.speed_constraint);
  s.collision = collision_of(r, "collision", s.collision);
  if (r.has("objective")) {
    const std::string o = r.string("objective");
    try {
      s.objective = parse_objective_mode(o);
    } catch (const std::invalid_argument& e) {
      r.fail("objective", e.what());
    }
  }
  if (r.has("tf_bounds")) {
    const Point b = r.point("tf_bounds");
    s.tf_bounds = {b.x, b.y};
  }
  r.finish();
  if (s.segments < 2) throw InvalidParameter(source + ": segments must be >= 2");
  if (s.substeps < 1) throw InvalidParameter(source + ": substeps must be >= 1");
  if (!(s.tf_bounds.lo > 0.0) || !(s.tf_bounds.hi >= s.tf_bounds.lo)) {
    throw InvalidParameter(source + ": tf_bounds must satisfy 0 < lo <= hi");
  }
  if (!s.x0.finite()) throw InvalidParameter(source + ": initial state must be finite");
  return s;
}

StudyConfig parse_study(const std::string& text, const std::string& source,
                        const std::filesystem::path& base_dir) {
  const json j = parse_json(text, source);
  Reader r(j, source);
  StudyConfig s;
  s.n_cases = static_cast<int>(r.integer("n_cases"));
  s.seed = r.unsigned_integer("seed", s.seed);
  s.attempts = static_cast<int>(r.integer("attempts", s.attempts));
  s.segments = static_cast<int>(r.integer("segments", s.segments));
  s.max_iterations = static_cast<int>(r.integer("max_iterations", s.max_iterations));
  s.threads = static_cast<int>(r.integer("threads", s.threads));
  s.speed_constraint = r.boolean("speed_constraint", s.speed_constraint);
  s.collision = collision_of(r, "collision", s.collision);
  s.ship_file = resolve(base_dir, r.string("ship", ""));
  s.port_file = resolve(base_dir, r.string("port", ""));
  r.finish();
  if (s.n_cases < 1) throw InvalidParameter(source + ": n_cases >= 1");
  if (s.attempts < 1 || s.attempts > 4) throw InvalidParameter(source + ": attempts in 1..4");
  if (s.segments < 2) throw InvalidParameter(source + ": segments >= 2");
  if (s.max_iterations < 1) throw InvalidParameter(source + ": max_iterations >= 1");
  if (s.threads < 1) throw InvalidParameter(source + ": threads >= 1");
  return s;
}

ShipParams load_ship(const std::filesystem::path& path) {
  return parse_ship(read_text(path), path.filename().string());
}

PortConfig load_port(const std::filesystem::path& path) {
  return parse_port(read_text(path), path.filename().string());
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text(path), path.filename().string(), path.parent_path());
}

StudyConfig load_study(const std::filesystem::path& path) {
  return parse_study(read_text(path), path.filename().string(), path.parent_path());
}

ConfigKind detect_kind(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) throw ParseError(source + ": expected a JSON object");
  if (j.contains("vertices")) return ConfigKind::Port;
  if (j.contains("n_cases")) return ConfigKind::Study;
  if (j.contains("initial_state") || j.contains("case")) return ConfigKind::Scenario;
  return ConfigKind::Ship;
}

}  // namespace berth
