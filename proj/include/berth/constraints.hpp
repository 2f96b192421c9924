// Berthing speed corridor and artificially limited actuator bounds.
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "berth/dynamics.hpp"
#include "berth/geometry.hpp"

namespace berth {

/// u_d = c1 d + c2 (1 - exp(-c3 d)) with u_d = u_s / u_sN and d = D / L.
struct SpeedCurve {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  double operator()(double d) const { return c1 * d + c2 * (1.0 - std::exp(-c3 * d)); }
};

struct SpeedLimitCoefficients {
  SpeedCurve lower{1.50e-3, 1.70e-2, 3.78e-1};
  SpeedCurve upper{5.06e-3, 2.04e-2, 1.10};

  /// Throws InvalidParameter unless all coefficients are positive and the
  /// upper curve dominates the lower one for d >= 0.
  void validate() const;
};

struct SpeedLimits {
  double min = 0.0;  ///< [m/s]
  double max = 0.0;  ///< [m/s]
};

/// Dimensional corridor at distance `distance` [m] from the berth point.
SpeedLimits speed_limits(double distance, const ShipParams& params,
                         const SpeedLimitCoefficients& coeffs);

struct CorridorResidual {
  double above_min = 0.0;  ///< u_s - u_min
  double below_max = 0.0;  ///< u_max - u_s
};

/// Both residuals are non-negative iff the knot satisfies the corridor.
std::vector<CorridorResidual> speed_corridor_residuals(std::span<const State> states, Point berth,
                                                       const ShipParams& params,
                                                       const SpeedLimitCoefficients& coeffs);

struct ActuatorBounds {
  Interval rudder_port;
  Interval rudder_starboard;
  Interval propeller;
  Interval thruster;

  bool contains(const ControlCommand& c, double tol = 0.0) const;
  ControlCommand clamp(const ControlCommand& c) const;
};

/// Physical ranges scaled about zero by the usage factors; the propeller is
/// pinned to its constant in fixed-revolution mode.
ActuatorBounds build_actuator_bounds(const ShipParams& params);

/// Unscaled physical ranges.
ActuatorBounds physical_actuator_bounds(const ShipParams& params);

}  // namespace berth
