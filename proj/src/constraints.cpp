#include "berth/constraints.hpp"

#include <cmath>

namespace berth {

namespace {

Interval scaled(Interval range, double factor) { return {range.lo * factor, range.hi * factor}; }

bool within(const Interval& i, double x, double tol) { return x >= i.lo - tol && x <= i.hi + tol; }

}  // namespace

void SpeedLimitCoefficients::validate() const {
  for (const SpeedCurve& c : {lower, upper}) {
    if (!(c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0)) {
      throw InvalidParameter("speed limit coefficients must be positive");
    }
  }
  // Both curves are concave-plus-linear; a dense scan over the berthing range
  // and the asymptotic slope settle dominance.
  if (upper.c1 < lower.c1) throw InvalidParameter("upper speed curve slope below lower curve");
  for (int i = 1; i <= 4000; ++i) {
    const double d = 0.01 * i;
    if (upper(d) < lower(d)) throw InvalidParameter("upper speed curve below lower curve");
  }
}

SpeedLimits speed_limits(double distance, const ShipParams& params,
                         const SpeedLimitCoefficients& coeffs) {
  if (distance < 0.0) throw std::invalid_argument("distance to berth must be >= 0");
  const double d = distance / params.L;
  return {params.u_nominal * coeffs.lower(d), params.u_nominal * coeffs.upper(d)};
}

std::vector<CorridorResidual> speed_corridor_residuals(std::span<const State> states, Point berth,
                                                       const ShipParams& params,
                                                       const SpeedLimitCoefficients& coeffs) {
  if (states.empty()) throw std::invalid_argument("speed corridor needs at least one state");
  std::vector<CorridorResidual> out;
  out.reserve(states.size());
  for (const State& s : states) {
    const double D = norm(Point{s.x0, s.y0} - berth);
    const SpeedLimits lim = speed_limits(D, params, coeffs);
    out.push_back({s.u - lim.min, lim.max - s.u});
  }
  return out;
}

bool ActuatorBounds::contains(const ControlCommand& c, double tol) const {
  return within(rudder_port, c.rudder_port, tol) && within(rudder_starboard, c.rudder_starboard, tol) &&
         within(propeller, c.propeller, tol) && within(thruster, c.thruster, tol);
}

ControlCommand ActuatorBounds::clamp(const ControlCommand& c) const {
  return {rudder_port.clamp(c.rudder_port), rudder_starboard.clamp(c.rudder_starboard),
          propeller.clamp(c.propeller), thruster.clamp(c.thruster)};
}

ActuatorBounds physical_actuator_bounds(const ShipParams& params) {
  const auto& a = params.actuators;
  return {a.port_rudder_range(), a.starboard_rudder_range(), a.propeller_range(), a.thruster_range()};
}

ActuatorBounds build_actuator_bounds(const ShipParams& params) {
  const auto& a = params.actuators;
  ActuatorBounds b;
  b.rudder_port = scaled(a.port_rudder_range(), a.rudder_scale);
  b.rudder_starboard = scaled(a.starboard_rudder_range(), a.rudder_scale);
  b.thruster = scaled(a.thruster_range(), a.thruster_scale);
  if (a.fixed_propeller) {
    b.propeller = {a.fixed_propeller_revs, a.fixed_propeller_revs};
  } else {
    b.propeller = scaled(a.propeller_range(), a.propeller_scale);
  }
  return b;
}

}  // namespace berth
