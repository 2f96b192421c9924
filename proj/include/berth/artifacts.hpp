// Run artifacts: trajectory table and a static SVG plot.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "berth/transcription.hpp"

namespace berth {

/// Column names of the trajectory table, in order.
const std::vector<std::string>& trajectory_columns();

/// One row per knot: time, state (angles in degrees), the command of the
/// segment starting at the knot (the last command repeated on the terminal
/// row), the actual actuator values at the knot, distance to the berth and
/// the speed corridor there. Values use 9 significant digits.
void write_trajectory_csv(std::ostream& os, const VectorXd& X, const OcpSpec& spec);

struct PlotSeries {
  std::string label;
  std::string color;  ///< any SVG color
  VectorXd X;
};

/// Trajectory over the port with ship-domain outlines, surge speed against
/// distance with the corridor, and rudder/thruster histories. All series must
/// share `spec`'s layout.
void write_plot_svg(std::ostream& os, const std::vector<PlotSeries>& series, const OcpSpec& spec,
                    const std::string& title);

}  // namespace berth
