#include "berth/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "berth/constraints.hpp"

namespace berth {

namespace {

std::string g9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string f2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

// Maps data coordinates into a pixel rectangle (y up).
struct Frame {
  double px, py, pw, ph;
  double x0, x1, y0, y1;

  double X(double x) const { return px + (x - x0) / (x1 - x0) * pw; }
  double Y(double y) const { return py + ph - (y - y0) / (y1 - y0) * ph; }

  std::string polyline(const std::vector<Point>& pts, const std::string& color, double width,
                       const std::string& extra = "") const {
    std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + f2(width) + "\" " +
                    extra + " points=\"";
    for (const Point& p : pts) s += f2(X(p.x)) + "," + f2(Y(p.y)) + " ";
    return s + "\"/>\n";
  }

  std::string axes(const std::string& xlabel, const std::string& ylabel) const {
    std::ostringstream s;
    s << "<rect x=\"" << f2(px) << "\" y=\"" << f2(py) << "\" width=\"" << f2(pw) << "\" height=\"" << f2(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x0 + (x1 - x0) * i / 4.0;
      const double yv = y0 + (y1 - y0) * i / 4.0;
      s << "<text x=\"" << f2(X(xv)) << "\" y=\"" << f2(py + ph + 14) << "\" font-size=\"10\" text-anchor=\"middle\">"
        << g9(std::round(xv * 100) / 100) << "</text>\n";
      s << "<text x=\"" << f2(px - 4) << "\" y=\"" << f2(Y(yv) + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
        << g9(std::round(yv * 100) / 100) << "</text>\n";
    }
    s << "<text x=\"" << f2(px + pw / 2) << "\" y=\"" << f2(py + ph + 28)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    s << "<text x=\"" << f2(px - 36) << "\" y=\"" << f2(py + ph / 2) << "\" font-size=\"11\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 " << f2(px - 36) << " " << f2(py + ph / 2) << ")\">" << ylabel << "</text>\n";
    return s.str();
  }
};

double distance_to_berth(const State& s, const OcpSpec& spec) {
  return std::hypot(s.x0 - spec.berth.x, s.y0 - spec.berth.y);
}

}  // namespace

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols{
      "t",
      "x0",
      "y0",
      "psi_deg",
      "u",
      "v",
      "r_deg_s",
      "cmd_rudder_port_deg",
      "cmd_rudder_starboard_deg",
      "cmd_propeller_rps",
      "cmd_thruster_rps",
      "act_rudder_port_deg",
      "act_rudder_starboard_deg",
      "act_propeller_rps",
      "act_thruster_rps",
      "distance",
      "u_min",
      "u_max",
  };
  return cols;
}

void write_trajectory_csv(std::ostream& os, const VectorXd& X, const OcpSpec& spec) {
  const Trajectory t = unpack(X, spec);
  const std::vector<ActuatorState> act = actuator_history(X, spec);
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  const int Nk = static_cast<int>(t.states.size());
  for (int k = 0; k < Nk; ++k) {
    const State& s = t.states[k];
    const ControlCommand& c = t.controls[static_cast<std::size_t>(std::min(k, Nk - 2))];
    const ActuatorState& a = act[static_cast<std::size_t>(k)];
    const double D = distance_to_berth(s, spec);
    const SpeedLimits lim = speed_limits(D, spec.ship, spec.coeffs);
    const double time = t.tf * k / (Nk - 1);
    const double row[] = {time,
                          s.x0,
                          s.y0,
                          rad2deg(s.psi),
                          s.u,
                          s.v,
                          rad2deg(s.r),
                          rad2deg(c.rudder_port),
                          rad2deg(c.rudder_starboard),
                          c.propeller,
                          c.thruster,
                          rad2deg(a.rudder_port),
                          rad2deg(a.rudder_starboard),
                          a.propeller,
                          a.thruster,
                          D,
                          lim.min,
                          lim.max};
    for (std::size_t i = 0; i < std::size(row); ++i) os << (i ? "," : "") << g9(row[i]);
    os << "\n";
  }
}

void write_plot_svg(std::ostream& os, const std::vector<PlotSeries>& series, const OcpSpec& spec,
                    const std::string& title) {
  const double W = 960, H = 900;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">" << title << "</text>\n";

  std::vector<Trajectory> trajs;
  for (const auto& s : series) trajs.push_back(unpack(s.X, spec));

  // Trajectory panel, equal aspect.
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Point& p : spec.port.vertices()) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double pw = 860, ph_max = 440;
  const double scale = std::min(pw / (xmax - xmin), ph_max / (ymax - ymin));
  Frame top{60, 40, (xmax - xmin) * scale, (ymax - ymin) * scale, xmin, xmax, ymin, ymax};
  os << top.axes("x0 [m]", "y0 [m]");
  {
    std::vector<Point> pv(spec.port.vertices().begin(), spec.port.vertices().end());
    os << top.polyline(pv, "#222", 1.5);
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Trajectory& t = trajs[si];
    std::vector<Point> path;
    for (const State& s : t.states) path.push_back({s.x0, s.y0});
    os << top.polyline(path, series[si].color, 1.8);
    for (std::size_t k = 0; k < t.states.size(); k += 3) {
      ShipDomain dom = ship_domain_vertices(t.states[k], spec.ship, 32);
      dom.vertices.push_back(dom.vertices.front());
      os << top.polyline(dom.vertices, series[si].color, 0.6, "stroke-opacity=\"0.6\"");
    }
  }
  os << "<circle cx=\"" << f2(top.X(spec.berth.x)) << "\" cy=\"" << f2(top.Y(spec.berth.y))
     << "\" r=\"4\" fill=\"black\"/>\n";

  // Legend.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = 52 + 16.0 * si;
    const double lx = std::min(top.px + top.pw + 12, W - 260);
    os << "<line x1=\"" << f2(lx) << "\" y1=\"" << ly << "\" x2=\"" << f2(lx + 22) << "\" y2=\"" << ly
       << "\" stroke=\"" << series[si].color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << f2(lx + 27) << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << series[si].label
       << " (tf " << f2(trajs[si].tf) << " s)</text>\n";
  }

  const double by = top.py + top.ph + 60, bh = H - by - 50;

  // Speed against distance with the corridor.
  double dmax = 1.0, umax = 0.1;
  for (const auto& t : trajs) {
    for (const State& s : t.states) {
      dmax = std::max(dmax, distance_to_berth(s, spec));
      umax = std::max(umax, std::abs(s.u));
    }
  }
  Frame sp{60, by, 380, bh, 0.0, dmax * 1.05, 0.0, umax * 1.1};
  os << sp.axes("distance to berth [m]", "u [m/s]");
  {
    std::vector<Point> lo, hi;
    for (int i = 0; i <= 200; ++i) {
      const double d = sp.x1 * i / 200.0;
      const SpeedLimits lim = speed_limits(d, spec.ship, spec.coeffs);
      lo.push_back({d, std::min(lim.min, sp.y1)});
      hi.push_back({d, std::min(lim.max, sp.y1)});
    }
    os << sp.polyline(lo, "#888", 1.0, "stroke-dasharray=\"4 3\"");
    os << sp.polyline(hi, "#888", 1.0, "stroke-dasharray=\"4 3\"");
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    std::vector<Point> pts;
    for (const State& s : trajs[si].states) pts.push_back({distance_to_berth(s, spec), s.u});
    os << sp.polyline(pts, series[si].color, 1.5);
  }

  // Actuator histories: rudders [deg] and thruster [rps] share the axis.
  double tmax = 1.0, cmax = 1.0;
  std::vector<std::vector<ActuatorState>> hist;
  for (std::size_t si = 0; si < series.size(); ++si) {
    hist.push_back(actuator_history(series[si].X, spec));
    tmax = std::max(tmax, trajs[si].tf);
    for (const auto& a : hist.back()) {
      cmax = std::max({cmax, std::abs(rad2deg(a.rudder_port)), std::abs(rad2deg(a.rudder_starboard)),
                       std::abs(a.thruster)});
    }
  }
  Frame cp{540, by, 380, bh, 0.0, tmax, -cmax * 1.1, cmax * 1.1};
  os << cp.axes("t [s]", "rudders [deg] / thruster [rps]");
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& h = hist[si];
    const double tf = trajs[si].tf;
    std::vector<Point> port, stbd, thr;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double tk = tf * k / (h.size() - 1);
      port.push_back({tk, rad2deg(h[k].rudder_port)});
      stbd.push_back({tk, rad2deg(h[k].rudder_starboard)});
      thr.push_back({tk, h[k].thruster});
    }
    os << cp.polyline(port, series[si].color, 1.2);
    os << cp.polyline(stbd, series[si].color, 1.2, "stroke-dasharray=\"5 2\"");
    os << cp.polyline(thr, series[si].color, 1.2, "stroke-dasharray=\"1 2\"");
  }
  os << "<text x=\"540\" y=\"" << H - 8
     << "\" font-size=\"10\">solid: port rudder, dashed: starboard rudder, dotted: bow thruster (actual)</text>\n";
  os << "</svg>\n";
}

}  // namespace berth
