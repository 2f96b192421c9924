#include "berth/dynamics.hpp"

#include <algorithm>
#include <sstream>

namespace berth {

namespace {

double signed_sqrt(double z) { return z >= 0.0 ? std::sqrt(z) : -std::sqrt(-z); }

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

void require(bool ok, const char* invariant) {
  if (!ok) throw InvalidParameter(std::string("ship parameter invariant violated: ") + invariant);
}

double slew(double current, double target, double max_delta) {
  const double diff = target - current;
  if (std::abs(diff) <= max_delta) return target;
  return current + std::copysign(max_delta, diff);
}

}  // namespace

WindCondition::WindCondition(double speed, double direction, double sampled_at)
    : speed_(speed), direction_(wrap_two_pi(direction)), sampled_at_(sampled_at) {
  if (!(speed >= 0.0) || !std::isfinite(speed)) {
    throw InvalidParameter("wind speed must be finite and >= 0");
  }
  if (!std::isfinite(direction)) throw InvalidParameter("wind direction must be finite");
}

void ShipParams::validate() const {
  require(m > 0.0, "m > 0");
  require(L > 0.0, "L > 0");
  require(B > 0.0, "B > 0");
  require(d > 0.0, "d > 0");
  require(Mx() > 0.0, "M_x > 0");
  require(My() > 0.0, "M_y > 0");
  require(Izm() > 0.0, "I_zm > 0");
  require(u_nominal > 0.0, "u_sN > 0");
  require(water_density > 0.0, "water_density > 0");
  require(sway_yaw_determinant() > 0.0, "M_y*I_zm - (x_G*m)^2 > 0");
  require(hull.strips >= 1, "hull.strips >= 1");
  require(propeller.diameter > 0.0, "propeller.diameter > 0");
  require(rudder.area >= 0.0, "rudder.area >= 0");
  require(wind.air_density >= 0.0, "wind.air_density >= 0");
  require(domain.k_a >= 0.0 && domain.k_b >= 0.0, "domain k_a, k_b >= 0");

  const auto& a = actuators;
  require(a.rudder_outboard > 0.0 && a.rudder_inboard > 0.0, "rudder ranges > 0");
  require(a.propeller_max > 0.0, "propeller_max > 0");
  require(a.thruster_max > 0.0, "thruster_max > 0");
  require(a.rudder_rate > 0.0 && a.propeller_rate > 0.0 && a.thruster_rate > 0.0,
          "actuator rates > 0");
  require(a.rudder_scale > 0.0 && a.rudder_scale <= 1.0, "rudder_scale in (0, 1]");
  require(a.propeller_scale > 0.0 && a.propeller_scale <= 1.0, "propeller_scale in (0, 1]");
  require(a.thruster_scale > 0.0 && a.thruster_scale <= 1.0, "thruster_scale in (0, 1]");
  if (a.fixed_propeller) {
    require(a.propeller_range().contains(a.fixed_propeller_revs),
            "fixed_propeller_revs within propeller range");
  }
}

PoseRates body_to_earth_rates(const State& s) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  return {s.u * c - s.v * sn, s.u * sn + s.v * c, s.r};
}

ForceTriplet hull_forces(const State& s, const ShipParams& p) {
  const auto& h = p.hull;
  const double q = 0.5 * p.water_density * p.L * p.d;
  const double U = s.speed();
  const double rL = s.r * p.L;

  ForceTriplet f;
  f.X = q * (h.X0 * s.u * std::abs(s.u) + h.Xvv * s.v * s.v + h.Xvr * s.v * rL + h.Xrr * rL * rL);
  f.Y = q * (h.Yv * U * s.v + h.Yr * U * rL);
  f.N = q * p.L * (h.Nv * U * s.v + h.Nr * U * rL);

  // Cross-flow drag, midpoint rule along the hull.
  const double dx = p.L / h.strips;
  const double k = 0.5 * p.water_density * p.d * h.cross_flow_drag * dx;
  double Ycf = 0.0;
  double Ncf = 0.0;
  for (int j = 0; j < h.strips; ++j) {
    const double x = -0.5 * p.L + (j + 0.5) * dx;
    const double vl = s.v + x * s.r;
    const double dY = -k * std::abs(vl) * vl;
    Ycf += dY;
    Ncf += x * dY;
  }
  f.Y += Ycf;
  f.N += Ncf;
  return f;
}

double open_water_thrust(const State& s, double n_p, const ShipParams& p) {
  const auto& pc = p.propeller;
  const double D = pc.diameter;
  const double up = (1.0 - pc.wake_fraction) * s.u;
  // n^2 K_T(J) with K_T linear in J, written without dividing by n.
  const double D4 = D * D * D * D;
  return p.water_density * D4 * (pc.kt0 * n_p * std::abs(n_p) + pc.kt1 * std::abs(n_p) * up / D);
}

ForceTriplet propeller_forces(const State& s, double n_p, const ShipParams& p) {
  if (p.actuators.vectwin && n_p < 0.0) {
    throw InvalidParameter("negative propeller revolutions on a forward-only (vectwin) ship");
  }
  if (n_p == 0.0) return {};
  return {(1.0 - p.propeller.thrust_deduction) * open_water_thrust(s, n_p, p), 0.0, 0.0};
}

ForceTriplet rudder_forces(const State& s, const ActuatorState& a, double propeller_thrust,
                           const ShipParams& p) {
  const auto& rc = p.rudder;
  const auto& pc = p.propeller;
  const double rho = p.water_density;

  const double up = (1.0 - pc.wake_fraction) * s.u;
  const double jet = 8.0 * std::max(propeller_thrust, 0.0) /
                     (rho * kPi * pc.diameter * pc.diameter);
  const double uR = rc.wake_ratio * signed_sqrt(up * std::abs(up) + rc.slipstream_factor * jet);
  const double vR = -rc.flow_straightening * (s.v + rc.x_position * s.r);
  const double UR2 = uR * uR + vR * vR;
  const double inflow = std::atan2(vR, std::abs(uR));

  const Interval port_range = p.actuators.port_rudder_range();
  const Interval starboard_range = p.actuators.starboard_rudder_range();
  if (!port_range.contains(a.rudder_port) || !starboard_range.contains(a.rudder_starboard)) {
    throw InvalidParameter("rudder angle outside physical range");
  }

  ForceTriplet total;
  const std::array<std::pair<double, double>, 2> rudders{
      {{a.rudder_port, -rc.lateral_offset}, {a.rudder_starboard, rc.lateral_offset}}};
  for (const auto& [delta, y] : rudders) {
    const double alpha = delta - inflow;
    const double FN = 0.5 * rho * rc.area * UR2 * rc.lift_slope * std::sin(alpha);
    const double X = -(1.0 - rc.drag_deduction) * FN * std::sin(delta);
    const double Y = -(1.0 + rc.hull_interaction) * FN * std::cos(delta);
    const double N =
        -(rc.x_position + rc.hull_interaction * rc.interaction_x) * FN * std::cos(delta) - y * X;
    total += ForceTriplet{X, Y, N};
  }
  return total;
}

ForceTriplet thruster_forces(const State& /*s*/, double n_bt, const ShipParams& p) {
  const double Y = p.thruster.coefficient * n_bt * std::abs(n_bt);
  return {0.0, Y, p.thruster.arm * Y};
}

ForceTriplet wind_forces(const State& s, const WindCondition& wind, const ShipParams& p) {
  const auto& wc = p.wind;
  const double rel = wind.direction() - s.psi;
  // Air velocity relative to the hull, body axes.
  const double ax = -wind.speed() * std::cos(rel) - s.u;
  const double ay = -wind.speed() * std::sin(rel) - s.v;
  const double UA2 = ax * ax + ay * ay;
  if (UA2 == 0.0) return {};
  const double g = std::atan2(-ay, -ax);
  const double qa = 0.5 * wc.air_density * UA2;

  const double CX = -(wc.cx1 * std::cos(g) + wc.cx3 * std::cos(3.0 * g));
  const double CY = -(wc.cy1 * std::sin(g) + wc.cy3 * std::sin(3.0 * g));
  const double CN = -(wc.cn2 * std::sin(2.0 * g));
  return {qa * wc.frontal_area * CX, qa * wc.lateral_area * CY, qa * wc.lateral_area * p.L * CN};
}

ForceTriplet total_forces(const State& s, const ActuatorState& a, const WindCondition& wind,
                          const ShipParams& p) {
  const double thrust = open_water_thrust(s, a.propeller, p);
  return hull_forces(s, p) + propeller_forces(s, a.propeller, p) + thruster_forces(s, a.thruster, p) +
         rudder_forces(s, a, thrust, p) + wind_forces(s, wind, p);
}

Vector6 total_derivative(const State& s, const ActuatorState& a, const WindCondition& wind,
                         const ShipParams& p) {
  const ForceTriplet F = total_forces(s, a, wind, p);
  const double Mx = p.Mx();
  const double My = p.My();
  const double Izm = p.Izm();
  const double xGm = p.xG * p.m;

  const double u_dot = (F.X + My * s.v * s.r + xGm * s.r * s.r) / Mx;
  // Coupled sway/yaw: [My xGm; xGm Izm] [v_dot; r_dot] = [a; b]
  const double a_rhs = F.Y - Mx * s.u * s.r;
  const double b_rhs = F.N - xGm * s.u * s.r;
  const double det = My * Izm - xGm * xGm;
  const double v_dot = (a_rhs * Izm - b_rhs * xGm) / det;
  const double r_dot = (b_rhs * My - a_rhs * xGm) / det;

  const PoseRates pr = body_to_earth_rates(s);
  Vector6 out;
  out << pr.x0_dot, pr.y0_dot, pr.psi_dot, u_dot, v_dot, r_dot;
  return out;
}

ActuatorState actuator_rate_step(const ActuatorState& current, const ControlCommand& command,
                                 double dt, const ShipParams& p) {
  if (!(dt > 0.0)) throw InvalidParameter("actuator step requires dt > 0");
  const auto& ac = p.actuators;
  return {slew(current.rudder_port, command.rudder_port, ac.rudder_rate * dt),
          slew(current.rudder_starboard, command.rudder_starboard, ac.rudder_rate * dt),
          slew(current.propeller, command.propeller, ac.propeller_rate * dt),
          slew(current.thruster, command.thruster, ac.thruster_rate * dt)};
}

StepResult rk4_step(const State& s, const ActuatorState& actuators, const ControlCommand& command,
                    const WindCondition& wind, const ShipParams& p, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("rk4 step requires dt > 0");
  const Vector6 x = s.to_vector();
  auto f = [&](const Vector6& y) {
    Vector6 k = total_derivative(State::from_vector(y), actuators, wind, p);
    if (!k.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state derivative at state [" << y.transpose() << "]";
      throw IntegrationError(msg.str());
    }
    return k;
  };
  const Vector6 k1 = f(x);
  const Vector6 k2 = f(x + 0.5 * dt * k1);
  const Vector6 k3 = f(x + 0.5 * dt * k2);
  const Vector6 k4 = f(x + dt * k3);
  const Vector6 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {State::from_vector(next), actuator_rate_step(actuators, command, dt, p)};
}

StepResult simulate(const State& s, const ActuatorState& actuators, const ControlCommand& command,
                    const WindCondition& wind, const ShipParams& p, double duration, int steps) {
  if (steps < 1) throw InvalidParameter("simulate requires at least one step");
  const double dt = duration / steps;
  StepResult out{s, actuators};
  for (int i = 0; i < steps; ++i) out = rk4_step(out.state, out.actuators, command, wind, p, dt);
  return out;
}

}  // namespace berth
