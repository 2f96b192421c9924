// Direct multiple shooting transcription of the free-final-time berthing
// problem into an NlpProblem.
//
// Decision vector layout:
//   [ tf | x_0 .. x_{Nk-1} (6 each) | c_0 .. c_{Ns-1} (n_u each) ]
// with Nk = Ns + 1. Controls are (delta_p, delta_s, n_bt) when the propeller
// runs at fixed revolutions, (delta_p, delta_s, n_p, n_bt) otherwise.
//
// Actuators: the actual actuator state is carried across segments. Segment k
// starts from the actual values reached at the end of segment k-1 (the
// configured initial actuator state for k = 0) and slews toward c_k, updated
// once per RK4 substep.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "berth/constraints.hpp"
#include "berth/dynamics.hpp"
#include "berth/geometry.hpp"
#include "berth/nlp.hpp"

namespace berth {

enum class CollisionMode { Off, Winding, Smooth };
enum class ObjectiveMode { Product, Sum };

const char* to_string(CollisionMode m);
const char* to_string(ObjectiveMode m);
CollisionMode parse_collision_mode(const std::string& s);
ObjectiveMode parse_objective_mode(const std::string& s);

struct OcpSpec {
  State x0;
  State xf;
  Point berth;
  int segments = 30;
  int substeps = 4;
  WindCondition wind;
  ShipParams ship;
  Polygon port;
  SpeedLimitCoefficients coeffs;

  bool speed_constraint = true;
  CollisionMode collision = CollisionMode::Smooth;
  ObjectiveMode objective = ObjectiveMode::Product;

  Interval tf_bounds{1.0, 600.0};
  int domain_vertices = 16;
  double smooth_sharpness = 20.0;  ///< [1/m]

  /// Actual actuator values at t0 (rudders and thruster at rest, propeller at
  /// its fixed revolutions).
  ActuatorState initial_actuators() const;

  int knots() const { return segments + 1; }
  int controls_per_segment() const { return ship.actuators.fixed_propeller ? 3 : 4; }
  int dimension() const { return 1 + 6 * knots() + controls_per_segment() * segments; }

  /// Throws InvalidParameter with a description of the first problem found,
  /// including endpoint ship domains leaving the port.
  void validate() const;
};

struct Trajectory {
  double tf = 0.0;
  std::vector<State> states;             ///< Nk knot states
  std::vector<ControlCommand> controls;  ///< Ns commands, all four channels
};

/// Index helpers for the decision vector.
struct Layout {
  int segments = 0;
  int n_u = 3;

  int knots() const { return segments + 1; }
  int size() const { return 1 + 6 * knots() + n_u * segments; }
  static constexpr int tf() { return 0; }
  int state(int k, int i = 0) const { return 1 + 6 * k + i; }
  int control(int k, int j = 0) const { return 1 + 6 * knots() + n_u * k + j; }
};

Layout layout_of(const OcpSpec& spec);

VectorXd pack(const Trajectory& t, const OcpSpec& spec);
/// Throws std::invalid_argument on a dimension mismatch.
Trajectory unpack(const VectorXd& X, const OcpSpec& spec);

/// Diagonal weights (L, L, pi, u_sN, u_sN, u_sN / L)^-2.
Vector6 objective_weights(const OcpSpec& spec);

/// Weighted squared distance of `s` from the berth pose.
double weighted_error(const State& s, const OcpSpec& spec);

/// Product mode: E(t_f) * trapz(E); sum mode: E(t_f) + trapz(E).
double objective(const VectorXd& X, const OcpSpec& spec);

/// Actual actuator values at the start of every segment and at t_f (Nk
/// entries).
std::vector<ActuatorState> actuator_history(const VectorXd& X, const OcpSpec& spec);

/// Integrates one segment of length h with `substeps` RK4 steps.
StepResult propagate_segment(const State& x, const ActuatorState& a, const ControlCommand& c,
                             double h, const OcpSpec& spec);

/// x_{k+1} - x_T(t_{k+1}) for every segment (6 * Ns rows). A failed
/// integration is rethrown as IntegrationError naming the segment.
VectorXd defect_constraints(const VectorXd& X, const OcpSpec& spec);

/// x_first - x0 followed by x_last - xf (12 rows).
VectorXd boundary_constraints(const VectorXd& X, const OcpSpec& spec);

struct PathResiduals {
  VectorXd speed_min;   ///< u - u_min at knots 0 .. Nk-2 (terminal exempt)
  VectorXd speed_max;   ///< u_max - u at knots 0 .. Nk-2
  VectorXd collision;   ///< Nk * N_sd rows, knot-major
};

/// Rows are empty for disabled constraint kinds. In winding mode the
/// collision rows are equalities (winding angle - 2 pi); in smooth mode they
/// are inequalities (smooth clearance >= 0).
PathResiduals path_constraints(const VectorXd& X, const OcpSpec& spec);

/// Knot states interpolated linearly from x0 to xf, rudders and thruster at
/// zero (mid-range), propeller at its fixed value or mid-range.
VectorXd linear_initial_guess(const OcpSpec& spec, double tf_guess);

/// Straight-line distance over the mean of initial and final surge speed,
/// clamped into the tf bounds.
double default_tf_guess(const OcpSpec& spec);

/// Simulates `controls` from x0 with the segment integrator and packs the
/// resulting knots. Satisfies every defect row by construction.
VectorXd forward_simulated_vector(const OcpSpec& spec, double tf,
                                  std::span<const ControlCommand> controls);

struct VariableBounds {
  VectorXd lower;
  VectorXd upper;
};

VariableBounds variable_bounds(const OcpSpec& spec);

/// Assembles objective, equalities (defect, initial, terminal and winding
/// collision rows), inequalities (speed and smooth collision rows), bounds,
/// variable scaling, row metadata and a structured finite-difference
/// Jacobian. The OcpSpec is validated first.
NlpProblem build_nlp(const OcpSpec& spec);

}  // namespace berth
