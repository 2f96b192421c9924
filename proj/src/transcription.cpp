#include "berth/transcription.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

namespace berth {

const char* to_string(CollisionMode m) {
  switch (m) {
    case CollisionMode::Off: return "off";
    case CollisionMode::Winding: return "winding";
    case CollisionMode::Smooth: return "smooth";
  }
  return "?";
}

const char* to_string(ObjectiveMode m) { return m == ObjectiveMode::Product ? "product" : "sum"; }

CollisionMode parse_collision_mode(const std::string& s) {
  if (s == "off") return CollisionMode::Off;
  if (s == "winding") return CollisionMode::Winding;
  if (s == "smooth") return CollisionMode::Smooth;
  throw std::invalid_argument("unknown collision mode '" + s + "' (expected off, winding, smooth)");
}

ObjectiveMode parse_objective_mode(const std::string& s) {
  if (s == "product") return ObjectiveMode::Product;
  if (s == "sum") return ObjectiveMode::Sum;
  throw std::invalid_argument("unknown objective mode '" + s + "' (expected product, sum)");
}

ActuatorState OcpSpec::initial_actuators() const {
  const auto& a = ship.actuators;
  return {0.0, 0.0, a.fixed_propeller ? a.fixed_propeller_revs : a.propeller_range().clamp(0.0), 0.0};
}

namespace {

void fail(const std::string& what) { throw InvalidParameter(what); }

bool domain_inside(const State& s, const OcpSpec& spec) {
  const ShipDomain dom = ship_domain_vertices(s, spec.ship, spec.domain_vertices);
  return std::all_of(dom.vertices.begin(), dom.vertices.end(),
                     [&](Point q) { return is_inside(q, spec.port); });
}

// Control channels present in the decision vector, in layout order.
double Actuators::*channel_member(int j, bool fixed) {
  static constexpr double Actuators::*kFixed[] = {&Actuators::rudder_port, &Actuators::rudder_starboard,
                                                  &Actuators::thruster};
  static constexpr double Actuators::*kFree[] = {&Actuators::rudder_port, &Actuators::rudder_starboard,
                                                 &Actuators::propeller, &Actuators::thruster};
  return fixed ? kFixed[j] : kFree[j];
}

double& channel(ControlCommand& c, int j, bool fixed) { return c.*channel_member(j, fixed); }
double channel(const ControlCommand& c, int j, bool fixed) { return c.*channel_member(j, fixed); }

double channel_rate(const ShipParams& p, int j, bool fixed) {
  const auto& a = p.actuators;
  switch (j) {
    case 0:
    case 1: return a.rudder_rate;
    case 2: return fixed ? a.thruster_rate : a.propeller_rate;
    default: return a.thruster_rate;
  }
}

}  // namespace

void OcpSpec::validate() const {
  ship.validate();
  coeffs.validate();
  if (segments < 2) fail("segments must be >= 2");
  if (substeps < 1) fail("substeps must be >= 1");
  if (domain_vertices < 8) fail("ship domain needs at least 8 vertices");
  if (!(smooth_sharpness > 0.0)) fail("smooth collision sharpness must be > 0");
  if (!(tf_bounds.lo > 0.0) || !(tf_bounds.hi >= tf_bounds.lo)) fail("tf bounds must satisfy 0 < lo <= hi");
  if (port.edge_count() < 3) fail("port polygon is empty");
  if (!x0.finite() || !xf.finite()) fail("endpoint states must be finite");
  if (!domain_inside(x0, *this)) fail("initial ship domain is not inside the port polygon");
  if (!domain_inside(xf, *this)) fail("final ship domain is not inside the port polygon");
}

Layout layout_of(const OcpSpec& spec) { return {spec.segments, spec.controls_per_segment()}; }

VectorXd pack(const Trajectory& t, const OcpSpec& spec) {
  const Layout L = layout_of(spec);
  if (static_cast<int>(t.states.size()) != L.knots() ||
      static_cast<int>(t.controls.size()) != L.segments) {
    throw std::invalid_argument("pack: expected " + std::to_string(L.knots()) + " states and " +
                                std::to_string(L.segments) + " controls");
  }
  const bool fixed = spec.ship.actuators.fixed_propeller;
  VectorXd X(L.size());
  X[Layout::tf()] = t.tf;
  for (int k = 0; k < L.knots(); ++k) X.segment<6>(L.state(k)) = t.states[k].to_vector();
  for (int k = 0; k < L.segments; ++k) {
    for (int j = 0; j < L.n_u; ++j) X[L.control(k, j)] = channel(t.controls[k], j, fixed);
  }
  return X;
}

Trajectory unpack(const VectorXd& X, const OcpSpec& spec) {
  const Layout L = layout_of(spec);
  if (X.size() != L.size()) {
    throw std::invalid_argument("unpack: decision vector has " + std::to_string(X.size()) +
                                " entries, expected " + std::to_string(L.size()));
  }
  const bool fixed = spec.ship.actuators.fixed_propeller;
  Trajectory t;
  t.tf = X[Layout::tf()];
  t.states.reserve(L.knots());
  for (int k = 0; k < L.knots(); ++k) t.states.push_back(State::from_vector(X.segment<6>(L.state(k))));
  t.controls.reserve(L.segments);
  for (int k = 0; k < L.segments; ++k) {
    ControlCommand c;
    if (fixed) c.propeller = spec.ship.actuators.fixed_propeller_revs;
    for (int j = 0; j < L.n_u; ++j) channel(c, j, fixed) = X[L.control(k, j)];
    t.controls.push_back(c);
  }
  return t;
}

Vector6 objective_weights(const OcpSpec& spec) {
  const double L = spec.ship.L;
  const double u = spec.ship.u_nominal;
  Vector6 s;
  s << L, L, kPi, u, u, u / L;
  return s.array().square().inverse();
}

double weighted_error(const State& s, const OcpSpec& spec) {
  const Vector6 e = s.to_vector() - spec.xf.to_vector();
  return (objective_weights(spec).array() * e.array().square()).sum();
}

double objective(const VectorXd& X, const OcpSpec& spec) {
  const Layout L = layout_of(spec);
  const Vector6 w = objective_weights(spec);
  const Vector6 xf = spec.xf.to_vector();
  auto err = [&](int k) {
    const Vector6 e = X.segment<6>(L.state(k)) - xf;
    return (w.array() * e.array().square()).sum();
  };
  const double dt = X[Layout::tf()] / L.segments;
  double integral = 0.0;
  for (int k = 0; k < L.segments; ++k) integral += 0.5 * dt * (err(k) + err(k + 1));
  const double terminal = err(L.segments);
  return spec.objective == ObjectiveMode::Product ? terminal * integral : terminal + integral;
}

StepResult propagate_segment(const State& x, const ActuatorState& a, const ControlCommand& c,
                             double h, const OcpSpec& spec) {
  return simulate(x, a, c, spec.wind, spec.ship, h, spec.substeps);
}

std::vector<ActuatorState> actuator_history(const VectorXd& X, const OcpSpec& spec) {
  const Trajectory t = unpack(X, spec);
  const double tau = t.tf / (spec.segments * spec.substeps);
  std::vector<ActuatorState> out;
  out.reserve(t.states.size());
  ActuatorState a = spec.initial_actuators();
  out.push_back(a);
  for (const ControlCommand& c : t.controls) {
    for (int i = 0; i < spec.substeps; ++i) a = actuator_rate_step(a, c, tau, spec.ship);
    out.push_back(a);
  }
  return out;
}

VectorXd defect_constraints(const VectorXd& X, const OcpSpec& spec) {
  const Trajectory t = unpack(X, spec);
  const std::vector<ActuatorState> act = actuator_history(X, spec);
  const double h = t.tf / spec.segments;
  VectorXd out(6 * spec.segments);
  for (int k = 0; k < spec.segments; ++k) {
    StepResult r;
    try {
      r = propagate_segment(t.states[k], act[k], t.controls[k], h, spec);
    } catch (const IntegrationError& e) {
      throw IntegrationError("segment " + std::to_string(k) + ": " + e.what());
    }
    out.segment<6>(6 * k) = t.states[k + 1].to_vector() - r.state.to_vector();
  }
  return out;
}

VectorXd boundary_constraints(const VectorXd& X, const OcpSpec& spec) {
  const Layout L = layout_of(spec);
  VectorXd out(12);
  out.head<6>() = X.segment<6>(L.state(0)) - spec.x0.to_vector();
  out.tail<6>() = X.segment<6>(L.state(L.segments)) - spec.xf.to_vector();
  return out;
}

namespace {

// Per-knot path rows; `speed` gets 2 entries (min, max) when the knot carries
// corridor rows, `collision` gets N_sd entries when collision is on.
void knot_path_rows(const State& s, bool with_speed, const OcpSpec& spec, double* speed,
                    double* collision) {
  if (with_speed) {
    const SpeedLimits lim = speed_limits(norm(Point{s.x0, s.y0} - spec.berth), spec.ship, spec.coeffs);
    speed[0] = s.u - lim.min;
    speed[1] = lim.max - s.u;
  }
  if (spec.collision == CollisionMode::Winding) {
    const std::vector<double> res = collision_residuals(s, spec.port, spec.ship, spec.domain_vertices);
    std::copy(res.begin(), res.end(), collision);
  } else if (spec.collision == CollisionMode::Smooth) {
    const ShipDomain dom = ship_domain_vertices(s, spec.ship, spec.domain_vertices);
    for (std::size_t j = 0; j < dom.vertices.size(); ++j) {
      collision[j] = smooth_clearance(dom.vertices[j], spec.port, spec.smooth_sharpness);
    }
  }
}

int speed_knots(const OcpSpec& spec) { return spec.speed_constraint ? spec.segments : 0; }

int collision_rows(const OcpSpec& spec) {
  return spec.collision == CollisionMode::Off ? 0 : spec.knots() * spec.domain_vertices;
}

}  // namespace

PathResiduals path_constraints(const VectorXd& X, const OcpSpec& spec) {
  const Trajectory t = unpack(X, spec);
  const int ns = speed_knots(spec);
  const int nsd = spec.domain_vertices;
  PathResiduals out;
  out.speed_min.resize(ns);
  out.speed_max.resize(ns);
  out.collision.resize(collision_rows(spec));
  for (int k = 0; k < spec.knots(); ++k) {
    double speed[2] = {0.0, 0.0};
    const bool with_speed = k < ns;
    knot_path_rows(t.states[k], with_speed, spec, speed,
                   out.collision.size() ? out.collision.data() + k * nsd : nullptr);
    if (with_speed) {
      out.speed_min[k] = speed[0];
      out.speed_max[k] = speed[1];
    }
  }
  return out;
}

double default_tf_guess(const OcpSpec& spec) {
  const double D = norm(Point{spec.x0.x0, spec.x0.y0} - Point{spec.xf.x0, spec.xf.y0});
  const double mean_speed = 0.5 * (std::abs(spec.x0.u) + std::abs(spec.xf.u));
  const double guess = mean_speed > 1e-3 ? D / mean_speed : spec.tf_bounds.hi;
  return spec.tf_bounds.clamp(guess);
}

VectorXd linear_initial_guess(const OcpSpec& spec, double tf_guess) {
  if (!(tf_guess > 0.0)) throw std::invalid_argument("tf guess must be > 0");
  Trajectory t;
  t.tf = tf_guess;
  const Vector6 a = spec.x0.to_vector();
  const Vector6 b = spec.xf.to_vector();
  for (int k = 0; k < spec.knots(); ++k) {
    const double s = static_cast<double>(k) / spec.segments;
    t.states.push_back(State::from_vector(a + s * (b - a)));
  }
  const ActuatorBounds ab = build_actuator_bounds(spec.ship);
  t.controls.assign(spec.segments, ControlCommand{ab.rudder_port.mid(), ab.rudder_starboard.mid(),
                                                  ab.propeller.mid(), ab.thruster.mid()});
  return pack(t, spec);
}

VectorXd forward_simulated_vector(const OcpSpec& spec, double tf,
                                  std::span<const ControlCommand> controls) {
  if (static_cast<int>(controls.size()) != spec.segments) {
    throw std::invalid_argument("forward simulation needs one command per segment");
  }
  Trajectory t;
  t.tf = tf;
  t.controls.assign(controls.begin(), controls.end());
  const double h = tf / spec.segments;
  StepResult cur{spec.x0, spec.initial_actuators()};
  t.states.push_back(cur.state);
  for (const ControlCommand& c : controls) {
    cur = propagate_segment(cur.state, cur.actuators, c, h, spec);
    t.states.push_back(cur.state);
  }
  return pack(t, spec);
}

VariableBounds variable_bounds(const OcpSpec& spec) {
  const Layout L = layout_of(spec);
  VariableBounds b{VectorXd(L.size()), VectorXd(L.size())};
  b.lower[Layout::tf()] = spec.tf_bounds.lo;
  b.upper[Layout::tf()] = spec.tf_bounds.hi;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (Point p : spec.port.vertices()) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  Vector6 lo, hi;
  lo << xmin, ymin, -2.0 * kTwoPi, -0.75, -0.5, -0.5;
  hi << xmax, ymax, 2.0 * kTwoPi, 0.75, 0.5, 0.5;
  // Never cut off the endpoints themselves.
  lo = lo.cwiseMin(spec.x0.to_vector()).cwiseMin(spec.xf.to_vector());
  hi = hi.cwiseMax(spec.x0.to_vector()).cwiseMax(spec.xf.to_vector());
  for (int k = 0; k < L.knots(); ++k) {
    b.lower.segment<6>(L.state(k)) = lo;
    b.upper.segment<6>(L.state(k)) = hi;
  }

  const ActuatorBounds ab = build_actuator_bounds(spec.ship);
  const bool fixed = spec.ship.actuators.fixed_propeller;
  ControlCommand clo{ab.rudder_port.lo, ab.rudder_starboard.lo, ab.propeller.lo, ab.thruster.lo};
  ControlCommand chi{ab.rudder_port.hi, ab.rudder_starboard.hi, ab.propeller.hi, ab.thruster.hi};
  for (int k = 0; k < L.segments; ++k) {
    for (int j = 0; j < L.n_u; ++j) {
      b.lower[L.control(k, j)] = channel(clo, j, fixed);
      b.upper[L.control(k, j)] = channel(chi, j, fixed);
    }
  }
  return b;
}

namespace {

double fd_step(double x) { return 1.4901161193847656e-08 * (1.0 + std::abs(x)); }

// Derivatives of one actuator channel with respect to tf and the commands of
// all earlier segments.
struct ChannelSensitivity {
  double d_tf = 0.0;
  std::vector<double> d_cmd;
};

void structured_jacobian(const VectorXd& X, const OcpSpec& spec, MatrixXd& jeq, MatrixXd& jin) {
  const Layout L = layout_of(spec);
  const bool fixed = spec.ship.actuators.fixed_propeller;
  const int Ns = spec.segments;
  const int nu = L.n_u;
  const Trajectory t = unpack(X, spec);
  const double h = t.tf / Ns;
  const double tau = h / spec.substeps;

  const int m_wind = spec.collision == CollisionMode::Winding ? collision_rows(spec) : 0;
  const int m_eq = 6 * Ns + 12 + m_wind;
  const int ns = speed_knots(spec);
  const int m_smooth = spec.collision == CollisionMode::Smooth ? collision_rows(spec) : 0;
  const int m_in = 2 * ns + m_smooth;
  jeq.setZero(m_eq, L.size());
  jin.setZero(m_in, L.size());

  // Actuator chain with analytic slew derivatives.
  std::vector<ChannelSensitivity> sens(nu);
  for (auto& s : sens) s.d_cmd.assign(Ns, 0.0);
  ActuatorState a = spec.initial_actuators();

  for (int k = 0; k < Ns; ++k) {
    const State& xk = t.states[k];
    const ControlCommand& ck = t.controls[k];
    const Vector6 base = propagate_segment(xk, a, ck, h, spec).state.to_vector();
    auto end = [&](const State& x, const ActuatorState& aa, const ControlCommand& c, double hh) {
      return propagate_segment(x, aa, c, hh, spec).state.to_vector();
    };
    const int row = 6 * k;
    jeq.block<6, 6>(row, L.state(k + 1)).setIdentity();

    for (int i = 0; i < 6; ++i) {
      Vector6 xv = xk.to_vector();
      const double step = fd_step(xv[i]);
      xv[i] += step;
      jeq.block<6, 1>(row, L.state(k, i)) = -(end(State::from_vector(xv), a, ck, h) - base) / step;
    }
    for (int j = 0; j < nu; ++j) {
      ControlCommand c = ck;
      const double step = fd_step(channel(c, j, fixed));
      channel(c, j, fixed) += step;
      jeq.block<6, 1>(row, L.control(k, j)) = -(end(xk, a, c, h) - base) / step;
    }
    {
      const double step = fd_step(h);
      jeq.block<6, 1>(row, Layout::tf()) = -(end(xk, a, ck, h + step) - base) / step / Ns;
    }
    // Dependence through the actual actuator state at the segment start.
    for (int j = 0; j < nu; ++j) {
      const ChannelSensitivity& sj = sens[j];
      bool any = sj.d_tf != 0.0;
      for (int q = 0; q < k && !any; ++q) any = sj.d_cmd[q] != 0.0;
      if (!any) continue;
      ActuatorState ap = a;
      const double step = fd_step(channel(ap, j, fixed));
      channel(ap, j, fixed) += step;
      const Vector6 dPhi_da = (end(xk, ap, ck, h) - base) / step;
      jeq.block<6, 1>(row, Layout::tf()) -= dPhi_da * sj.d_tf;
      for (int q = 0; q < k; ++q) {
        if (sj.d_cmd[q] != 0.0) jeq.block<6, 1>(row, L.control(q, j)) -= dPhi_da * sj.d_cmd[q];
      }
    }

    // Advance the actuator chain through segment k.
    for (int i = 0; i < spec.substeps; ++i) {
      for (int j = 0; j < nu; ++j) {
        const double cur = channel(a, j, fixed);
        const double cmd = channel(ck, j, fixed);
        const double rate = channel_rate(spec.ship, j, fixed);
        ChannelSensitivity& sj = sens[j];
        if (std::abs(cmd - cur) <= rate * tau) {
          sj.d_tf = 0.0;
          std::fill(sj.d_cmd.begin(), sj.d_cmd.end(), 0.0);
          sj.d_cmd[k] = 1.0;
        } else {
          sj.d_tf += std::copysign(rate, cmd - cur) / (Ns * spec.substeps);
        }
      }
      a = actuator_rate_step(a, ck, tau, spec.ship);
    }
  }

  // Boundary rows.
  jeq.block<6, 6>(6 * Ns, L.state(0)).setIdentity();
  jeq.block<6, 6>(6 * Ns + 6, L.state(Ns)).setIdentity();

  // Path rows: each depends on its own knot state only.
  const int nsd = spec.domain_vertices;
  const int per_knot = nsd;
  std::vector<double> base_c(per_knot), pert_c(per_knot);
  for (int k = 0; k < spec.knots(); ++k) {
    const bool with_speed = k < ns;
    if (!with_speed && spec.collision == CollisionMode::Off) continue;
    double base_s[2], pert_s[2];
    const bool coll = spec.collision != CollisionMode::Off;
    knot_path_rows(t.states[k], with_speed, spec, base_s, coll ? base_c.data() : nullptr);
    for (int i = 0; i < 6; ++i) {
      Vector6 xv = t.states[k].to_vector();
      const double step = fd_step(xv[i]);
      xv[i] += step;
      knot_path_rows(State::from_vector(xv), with_speed, spec, pert_s, coll ? pert_c.data() : nullptr);
      const int col = L.state(k, i);
      if (with_speed) {
        jin(k, col) = (pert_s[0] - base_s[0]) / step;
        jin(ns + k, col) = (pert_s[1] - base_s[1]) / step;
      }
      for (int j = 0; coll && j < nsd; ++j) {
        const double d = (pert_c[j] - base_c[j]) / step;
        if (spec.collision == CollisionMode::Winding) {
          jeq(6 * Ns + 12 + k * nsd + j, col) = d;
        } else {
          jin(2 * ns + k * nsd + j, col) = d;
        }
      }
    }
  }
}

}  // namespace

NlpProblem build_nlp(const OcpSpec& spec) {
  spec.validate();
  const Layout L = layout_of(spec);
  const int Ns = spec.segments;
  const int ns = speed_knots(spec);
  const int mc = collision_rows(spec);
  const bool winding = spec.collision == CollisionMode::Winding;
  const bool smooth = spec.collision == CollisionMode::Smooth;

  NlpProblem nlp;
  nlp.n = L.size();
  nlp.m_eq = 6 * Ns + 12 + (winding ? mc : 0);
  nlp.m_in = 2 * ns + (smooth ? mc : 0);

  nlp.objective = [spec](const VectorXd& X) { return objective(X, spec); };
  nlp.equalities = [spec, winding, mc](const VectorXd& X) {
    VectorXd out(6 * spec.segments + 12 + (winding ? mc : 0));
    out.head(6 * spec.segments) = defect_constraints(X, spec);
    out.segment<12>(6 * spec.segments) = boundary_constraints(X, spec);
    if (winding) out.tail(mc) = path_constraints(X, spec).collision;
    return out;
  };
  nlp.inequalities = [spec, smooth, ns, mc](const VectorXd& X) {
    VectorXd out(2 * ns + (smooth ? mc : 0));
    const PathResiduals p = path_constraints(X, spec);
    out.head(ns) = p.speed_min;
    out.segment(ns, ns) = p.speed_max;
    if (smooth) out.tail(mc) = p.collision;
    return out;
  };
  nlp.jacobian = [spec](const VectorXd& X, MatrixXd& jeq, MatrixXd& jin) {
    structured_jacobian(X, spec, jeq, jin);
  };

  const VariableBounds b = variable_bounds(spec);
  nlp.lower = b.lower;
  nlp.upper = b.upper;

  nlp.x_scale.resize(L.size());
  nlp.x_scale[Layout::tf()] = 100.0;
  Vector6 ss;
  ss << 10.0, 10.0, 1.0, 0.5, 0.1, 0.05;
  for (int k = 0; k < L.knots(); ++k) nlp.x_scale.segment<6>(L.state(k)) = ss;
  const ActuatorBounds ab = build_actuator_bounds(spec.ship);
  const bool fixed = spec.ship.actuators.fixed_propeller;
  ControlCommand cs{0.5, 0.5, std::max(1.0, ab.propeller.hi), std::max(1.0, ab.thruster.hi)};
  for (int k = 0; k < Ns; ++k) {
    for (int j = 0; j < L.n_u; ++j) nlp.x_scale[L.control(k, j)] = channel(cs, j, fixed);
  }

  nlp.eq_groups = {{"defect", 0, 6 * Ns}, {"initial", 6 * Ns, 6}, {"terminal", 6 * Ns + 6, 6}};
  if (winding) nlp.eq_groups.push_back({"collision", 6 * Ns + 12, mc});
  if (ns > 0) {
    nlp.in_groups.push_back({"speed_min", 0, ns});
    nlp.in_groups.push_back({"speed_max", ns, ns});
  }
  if (smooth) nlp.in_groups.push_back({"collision", 2 * ns, mc});
  nlp.check();
  return nlp;
}

}  // namespace berth
