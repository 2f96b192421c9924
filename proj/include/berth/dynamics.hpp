// Low-speed 3-DOF maneuvering model (MMG-style force decomposition) for a
// twin-rudder ("vectwin") model ship with a bow thruster and wind loads.
//
// Conventions: earth-fixed x0/y0 with psi measured clockwise from x0; body x
// forward, y to starboard, N positive bow-to-starboard. Rudder angles follow
// the MMG sign (positive = trailing edge to starboard). For the port rudder
// outboard is therefore negative, for the starboard rudder positive.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace berth {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Earth-fixed pose and body-fixed velocities at midship.
struct State {
  double x0 = 0.0;   ///< [m]
  double y0 = 0.0;   ///< [m]
  double psi = 0.0;  ///< [rad]
  double u = 0.0;    ///< surge [m/s]
  double v = 0.0;    ///< sway at midship [m/s]
  double r = 0.0;    ///< yaw rate [rad/s]

  static State from_vector(const Vector6& s) { return {s[0], s[1], s[2], s[3], s[4], s[5]}; }
  Vector6 to_vector() const {
    Vector6 s;
    s << x0, y0, psi, u, v, r;
    return s;
  }

  double speed() const { return std::hypot(u, v); }
  /// Reporting only; no equation of motion uses it.
  double drift_angle() const { return std::atan2(-v, u); }
  bool finite() const {
    return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(psi) && std::isfinite(u) &&
           std::isfinite(v) && std::isfinite(r);
  }

  friend bool operator==(const State&, const State&) = default;
};

/// Four actuator channels. Used both for commands and for the actual
/// (rate-limited) actuator values.
struct Actuators {
  double rudder_port = 0.0;       ///< [rad]
  double rudder_starboard = 0.0;  ///< [rad]
  double propeller = 0.0;         ///< [rev/s]
  double thruster = 0.0;          ///< bow thruster [rev/s]

  friend bool operator==(const Actuators&, const Actuators&) = default;
};

using ControlCommand = Actuators;
using ActuatorState = Actuators;

/// True wind, frozen for one planning call. Direction is the direction the
/// wind comes from, clockwise from the earth x-axis.
class WindCondition {
 public:
  WindCondition() = default;
  WindCondition(double speed, double direction, double sampled_at = 0.0);

  double speed() const { return speed_; }
  double direction() const { return direction_; }
  double sampled_at() const { return sampled_at_; }

 private:
  double speed_ = 0.0;
  double direction_ = 0.0;
  double sampled_at_ = 0.0;
};

struct ForceTriplet {
  double X = 0.0;  ///< surge force [N]
  double Y = 0.0;  ///< sway force [N]
  double N = 0.0;  ///< yaw moment about midship [N m]

  ForceTriplet& operator+=(const ForceTriplet& o) {
    X += o.X;
    Y += o.Y;
    N += o.N;
    return *this;
  }
  friend ForceTriplet operator+(ForceTriplet a, const ForceTriplet& b) { return a += b; }
  friend bool operator==(const ForceTriplet&, const ForceTriplet&) = default;
};

// ---------------------------------------------------------------------------
// Ship parameters
// ---------------------------------------------------------------------------

/// Low-speed hull model: polynomial terms plus strip-wise cross-flow drag.
///   X_H = q (X0 u|u| + Xvv v^2 + Xvr v r L + Xrr r^2 L^2)
///   Y_H = q (Yv U v + Yr U r L) - 0.5 rho d CD \int |v + x r| (v + x r) dx
///   N_H = q L (Nv U v + Nr U r L) - 0.5 rho d CD \int x |v + x r| (v + x r) dx
/// with q = 0.5 rho L d.
struct HullCoefficients {
  double X0 = -0.025;
  double Xvv = -0.04;
  double Xvr = 0.02;
  double Xrr = -0.005;
  double Yv = -0.35;
  double Yr = 0.05;
  double Nv = -0.12;
  double Nr = -0.06;
  double cross_flow_drag = 0.6;
  int strips = 20;
};

/// Open-water thrust with K_T(J) = kt0 + kt1 J, J = u (1 - w) / (n D).
struct PropellerCoefficients {
  double diameter = 0.12;          ///< [m]
  double thrust_deduction = 0.2;   ///< t_P
  double wake_fraction = 0.3;      ///< w_P
  double kt0 = 0.35;
  double kt1 = -0.36;
};

/// Per-rudder normal-force model in the propeller slipstream.
struct RudderCoefficients {
  double area = 0.012;               ///< one rudder [m^2]
  double lift_slope = 2.5;           ///< f_alpha
  double x_position = -1.45;         ///< longitudinal position [m]
  double lateral_offset = 0.08;      ///< |y| of each rudder [m]
  double drag_deduction = 0.2;       ///< t_R
  double hull_interaction = 0.2;     ///< a_H
  double interaction_x = -1.2;       ///< x_H [m]
  double flow_straightening = 0.5;   ///< gamma_R
  double wake_ratio = 1.0;           ///< epsilon
  double slipstream_factor = 0.5;    ///< kappa
};

/// Fixed-pitch bow thruster: Y = coefficient * n |n|, N = arm * Y.
struct ThrusterCoefficients {
  double coefficient = 0.004;  ///< [N s^2]
  double arm = 1.25;           ///< x position [m]
};

/// Wind loads X = q_a A_F C_X, Y = q_a A_L C_Y, N = q_a A_L L C_N with
///   C_X = -(cx1 cos g + cx3 cos 3g), C_Y = -(cy1 sin g + cy3 sin 3g),
///   C_N = -(cn2 sin 2g), g = apparent angle of the wind's origin off the bow.
struct WindCoefficients {
  double air_density = 1.225;
  double frontal_area = 0.10;   ///< [m^2]
  double lateral_area = 0.55;   ///< [m^2]
  double cx1 = 0.7;
  double cx3 = 0.05;
  double cy1 = 0.9;
  double cy3 = 0.0;
  double cn2 = 0.1;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  double mid() const { return 0.5 * (lo + hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Physical actuator ranges, slew rates and artificial usage factors.
struct ActuatorConfig {
  double rudder_outboard = deg2rad(105.0);
  double rudder_inboard = deg2rad(35.0);
  double propeller_max = 20.0;      ///< [rev/s]
  double thruster_max = 30.0;       ///< [rev/s], symmetric
  double rudder_rate = deg2rad(20.0);
  double propeller_rate = 2.0;      ///< [(rev/s)/s]
  double thruster_rate = 1.0;       ///< [(rev/s)/s]
  double rudder_scale = 0.43;
  double propeller_scale = 0.50;
  double thruster_scale = 0.75;
  bool vectwin = true;              ///< forward-only propeller
  bool fixed_propeller = true;
  double fixed_propeller_revs = 10.0;

  Interval port_rudder_range() const { return {-rudder_outboard, rudder_inboard}; }
  Interval starboard_rudder_range() const { return {-rudder_inboard, rudder_outboard}; }
  Interval propeller_range() const {
    return vectwin ? Interval{0.0, propeller_max} : Interval{-propeller_max, propeller_max};
  }
  Interval thruster_range() const { return {-thruster_max, thruster_max}; }
};

/// Speed-dependent elliptical ship domain around midship:
///   a = (L/2)(1 + k_a U/u_sN), b = (B/2)(1 + k_b U/u_sN)
struct DomainCoefficients {
  double k_a = 1.0;
  double k_b = 1.0;
};

struct ShipParams {
  std::string name = "ship-a-like";
  double water_density = 1000.0;
  double L = 3.0;     ///< length between perpendiculars [m]
  double B = 0.4;     ///< [m]
  double d = 0.17;    ///< draft [m]
  double m = 163.2;   ///< [kg]
  double mx = 8.2;    ///< added mass, surge [kg]
  double my = 130.0;  ///< added mass, sway [kg]
  double xG = 0.05;   ///< CoG ahead of midship [m]
  double Izz = 91.8;  ///< [kg m^2]
  double Jzz = 40.0;  ///< added yaw inertia [kg m^2]
  double u_nominal = 7.5;  ///< speed normalizing the berthing corridor [m/s]

  HullCoefficients hull;
  PropellerCoefficients propeller;
  RudderCoefficients rudder;
  ThrusterCoefficients thruster;
  WindCoefficients wind;
  ActuatorConfig actuators;
  DomainCoefficients domain;

  double Mx() const { return m + mx; }
  double My() const { return m + my; }
  double Izm() const { return Izz + Jzz + xG * xG * m; }
  /// Determinant of the coupled sway/yaw mass matrix.
  double sway_yaw_determinant() const { return My() * Izm() - (xG * m) * (xG * m); }

  /// Throws InvalidParameter naming the first violated invariant.
  void validate() const;
};

class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

class IntegrationError : public std::runtime_error {
 public:
  explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Model evaluation
// ---------------------------------------------------------------------------

struct PoseRates {
  double x0_dot = 0.0;
  double y0_dot = 0.0;
  double psi_dot = 0.0;
};

/// Midship velocity rotated into the earth frame.
PoseRates body_to_earth_rates(const State& s);

ForceTriplet hull_forces(const State& s, const ShipParams& p);

/// Effective thrust (after thrust deduction) plus any lateral terms.
/// Throws InvalidParameter for negative revolutions on a vectwin ship.
ForceTriplet propeller_forces(const State& s, double n_p, const ShipParams& p);

/// Sum over both rudders. `propeller_thrust` is the open-water thrust used
/// for the slipstream velocity. Throws InvalidParameter for angles outside
/// the physical rudder ranges.
ForceTriplet rudder_forces(const State& s, const ActuatorState& a, double propeller_thrust,
                           const ShipParams& p);

ForceTriplet thruster_forces(const State& s, double n_bt, const ShipParams& p);

ForceTriplet wind_forces(const State& s, const WindCondition& wind, const ShipParams& p);

/// Open-water propeller thrust rho n^2 D^4 K_T(J) (no thrust deduction).
double open_water_thrust(const State& s, double n_p, const ShipParams& p);

/// Sum of all force contributions.
ForceTriplet total_forces(const State& s, const ActuatorState& a, const WindCondition& wind,
                          const ShipParams& p);

/// Full 6-state derivative: pose rates followed by the solved accelerations.
Vector6 total_derivative(const State& s, const ActuatorState& a, const WindCondition& wind,
                         const ShipParams& p);

/// Moves every channel toward its command at the configured slew rate,
/// stopping exactly on the command.
ActuatorState actuator_rate_step(const ActuatorState& current, const ControlCommand& command,
                                 double dt, const ShipParams& p);

struct StepResult {
  State state;
  ActuatorState actuators;
};

/// One classical RK4 step. Actuators are held at `actuators` for the whole
/// step and advanced once afterwards.
StepResult rk4_step(const State& s, const ActuatorState& actuators, const ControlCommand& command,
                    const WindCondition& wind, const ShipParams& p, double dt);

/// Repeated rk4_step over `duration` in `steps` equal steps.
StepResult simulate(const State& s, const ActuatorState& actuators, const ControlCommand& command,
                    const WindCondition& wind, const ShipParams& p, double duration, int steps);

}  // namespace berth
