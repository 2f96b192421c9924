// Independent reference computations shared by the unit tests and the
// acceptance runner. None of them call the library routine they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "berth/dynamics.hpp"
#include "berth/geometry.hpp"
#include "berth/solver.hpp"
#include "berth/transcription.hpp"

namespace berth::oracle {

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Even-odd ray casting toward +x over a closed vertex list.
inline bool crossing_inside(Point q, std::span<const Point> v) {
  bool in = false;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const Point a = v[i], b = v[i + 1];
    if ((a.y > q.y) != (b.y > q.y) && a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y) > q.x) in = !in;
  }
  return in;
}

inline double edge_distance(Point q, std::span<const Point> v) {
  double d = HUGE_VAL;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const Point ab{v[i + 1].x - v[i].x, v[i + 1].y - v[i].y};
    const Point aq{q.x - v[i].x, q.y - v[i].y};
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double t = len2 > 0 ? std::clamp((aq.x * ab.x + aq.y * ab.y) / len2, 0.0, 1.0) : 0.0;
    d = std::min(d, std::hypot(aq.x - t * ab.x, aq.y - t * ab.y));
  }
  return d;
}

struct Agreement {
  int compared = 0;
  int agree = 0;
};

/// Winding classification against ray casting on uniform points over the
/// bounding box grown by `margin`; points within `skip` of an edge are not
/// compared.
inline Agreement winding_vs_crossing(const Polygon& poly, int samples, std::uint64_t seed, double margin = 5.0,
                                     double skip = 1e-9) {
  const auto v = poly.vertices();
  double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
  for (const Point& p : v) {
    xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> X(xmin - margin, xmax + margin), Y(ymin - margin, ymax + margin);
  Agreement out;
  for (int i = 0; i < samples; ++i) {
    const Point q{X(rng), Y(rng)};
    if (edge_distance(q, v) <= skip) continue;
    ++out.compared;
    out.agree += is_inside(q, poly) == crossing_inside(q, v) ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

struct DynamicsSample {
  State s;
  ActuatorState a;
  WindCondition wind;
};

inline DynamicsSample random_dynamics_sample(std::mt19937_64& rng, const ShipParams& p) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto& ac = p.actuators;
  const double half_span = 0.5 * (ac.rudder_outboard + ac.rudder_inboard);
  DynamicsSample out;
  out.s = {50 * U(rng), 50 * U(rng), kPi * U(rng), 0.8 * U(rng), 0.2 * U(rng), 0.1 * U(rng)};
  out.a.rudder_port = ac.port_rudder_range().mid() + half_span * U(rng);
  out.a.rudder_starboard = ac.starboard_rudder_range().mid() + half_span * U(rng);
  out.a.propeller = ac.propeller_max * 0.5 * (1.0 + U(rng));
  out.a.thruster = ac.thruster_max * U(rng);
  out.wind = WindCondition(1.0 + U(rng), kPi * U(rng));
  return out;
}

/// Reflection about the body x axis: port and starboard swap roles.
inline State mirror(const State& s) { return {s.x0, -s.y0, -s.psi, s.u, -s.v, -s.r}; }
inline ActuatorState mirror(const ActuatorState& a) {
  return {-a.rudder_starboard, -a.rudder_port, a.propeller, -a.thruster};
}

inline double relative_scale(const Vector6& v) { return 1.0 + v.cwiseAbs().maxCoeff(); }

/// Largest derivative component for a ship at rest with idle propulsion and
/// no wind, over random poses and rudder angles.
inline double equilibrium_error(int samples, std::uint64_t seed, const ShipParams& p) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const State s{40 * U(rng), 40 * U(rng), kPi * U(rng), 0, 0, 0};
    ActuatorState a;
    a.rudder_port = deg2rad(35.0) * U(rng);
    a.rudder_starboard = deg2rad(35.0) * U(rng);
    worst = std::max(worst, total_derivative(s, a, WindCondition(), p).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Relative mismatch between f(mirror(x)) and the mirrored f(x).
inline double mirror_error(int samples, std::uint64_t seed, const ShipParams& p) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const DynamicsSample smp = random_dynamics_sample(rng, p);
    const Vector6 d = total_derivative(smp.s, smp.a, smp.wind, p);
    const WindCondition mw(smp.wind.speed(), -smp.wind.direction());
    const Vector6 dm = total_derivative(mirror(smp.s), mirror(smp.a), mw, p);
    Vector6 expect = d;
    for (int k : {1, 2, 4, 5}) expect[k] = -d[k];
    worst = std::max(worst, (dm - expect).cwiseAbs().maxCoeff() / relative_scale(d));
  }
  return worst;
}

/// Relative mismatch between the simulated mirrored input and the mirrored
/// simulation over `horizon` seconds with a constant command.
inline double mirror_trajectory_error(int samples, std::uint64_t seed, const ShipParams& p, double horizon = 20.0) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const DynamicsSample smp = random_dynamics_sample(rng, p);
    const DynamicsSample cmd = random_dynamics_sample(rng, p);
    const ControlCommand c = cmd.a;
    const WindCondition mw(smp.wind.speed(), -smp.wind.direction());
    const int n = static_cast<int>(horizon / 0.1);
    const StepResult a = simulate(smp.s, smp.a, c, smp.wind, p, horizon, n);
    const StepResult b = simulate(mirror(smp.s), mirror(smp.a), mirror(c), mw, p, horizon, n);
    const Vector6 expect = mirror(a.state).to_vector();
    worst = std::max(worst, (b.state.to_vector() - expect).cwiseAbs().maxCoeff() / relative_scale(expect));
  }
  return worst;
}

/// Largest gap between the earth-frame speed and the body-frame resultant.
inline double speed_preservation_error(int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const State s{10 * U(rng), 10 * U(rng), 4 * kPi * U(rng), U(rng), 0.3 * U(rng), 0.1 * U(rng)};
    const PoseRates r = body_to_earth_rates(s);
    worst = std::max(worst, std::abs(std::hypot(r.x0_dot, r.y0_dot) - std::hypot(s.u, s.v)));
  }
  return worst;
}

/// Relative mismatch after rotating pose and wind by a random angle: body
/// accelerations stay put, pose rates rotate.
inline double rotation_error(int samples, std::uint64_t seed, const ShipParams& p) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-kPi, kPi);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const DynamicsSample smp = random_dynamics_sample(rng, p);
    const double th = U(rng);
    const double c = std::cos(th), s = std::sin(th);
    State rs = smp.s;
    rs.x0 = c * smp.s.x0 - s * smp.s.y0;
    rs.y0 = s * smp.s.x0 + c * smp.s.y0;
    rs.psi = smp.s.psi + th;
    const WindCondition rw(smp.wind.speed(), smp.wind.direction() + th);
    const Vector6 d = total_derivative(smp.s, smp.a, smp.wind, p);
    const Vector6 dr = total_derivative(rs, smp.a, rw, p);
    Vector6 expect = d;
    expect[0] = c * d[0] - s * d[1];
    expect[1] = s * d[0] + c * d[1];
    worst = std::max(worst, (dr - expect).cwiseAbs().maxCoeff() / relative_scale(d));
  }
  return worst;
}

/// Least-squares slope of log error against log dt for a 10 s manoeuvre with
/// actuators held at their commands, against a dt/16 reference.
inline double rk4_fitted_order(const ShipParams& p) {
  const State s{10, 5, 0.3, 0.5, 0.02, 0.01};
  const ActuatorState a{-deg2rad(30), deg2rad(40), 10.0, 8.0};
  const WindCondition w(0.8, deg2rad(60));
  auto run = [&](double dt) {
    return simulate(s, a, a, w, p, 10.0, static_cast<int>(std::lround(10.0 / dt))).state.to_vector();
  };
  const Vector6 ref = run(0.025 / 16.0);
  std::vector<double> lx, ly;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    lx.push_back(std::log(dt));
    ly.push_back(std::log((run(dt) - ref).norm()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / n, my += ly[i] / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Transcription
// ---------------------------------------------------------------------------

/// Weighted squared error written out from the state components.
inline double hand_weighted_error(const State& s, const OcpSpec& spec) {
  const double L = spec.ship.L, uN = spec.ship.u_nominal;
  const double e[6] = {s.x0 - spec.xf.x0, s.y0 - spec.xf.y0, s.psi - spec.xf.psi,
                       s.u - spec.xf.u,   s.v - spec.xf.v,   s.r - spec.xf.r};
  const double scale[6] = {L, L, kPi, uN, uN, uN / L};
  double sum = 0;
  for (int i = 0; i < 6; ++i) sum += std::pow(e[i] / scale[i], 2);
  return sum;
}

/// Objective from unpacked knots with a hand-written trapezoid.
inline double trapezoid_objective(const VectorXd& X, const OcpSpec& spec) {
  const Trajectory t = unpack(X, spec);
  const double h = t.tf / spec.segments;
  double integral = 0.0;
  for (int k = 0; k < spec.segments; ++k) {
    integral += 0.5 * h * (hand_weighted_error(t.states[k], spec) + hand_weighted_error(t.states[k + 1], spec));
  }
  const double terminal = hand_weighted_error(t.states.back(), spec);
  return spec.objective == ObjectiveMode::Product ? terminal * integral : terminal + integral;
}

inline std::vector<ControlCommand> random_controls(const OcpSpec& spec, std::mt19937_64& rng, double spread) {
  const ActuatorBounds b = build_actuator_bounds(spec.ship);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<ControlCommand> out;
  for (int k = 0; k < spec.segments; ++k) {
    out.push_back(b.clamp({spread * b.rudder_port.lo * U(rng), spread * b.rudder_starboard.hi * U(rng),
                           b.propeller.hi, spread * b.thruster.hi * U(rng)}));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Initial-state acceptance re-derived with ray casting and hand-evaluated
/// corridor curves.
inline bool admissible(const State& s, const OcpSpec& spec) {
  const double D = std::hypot(s.x0 - spec.berth.x, s.y0 - spec.berth.y);
  if (D > 20 * spec.ship.L) return false;
  const double U = std::hypot(s.u, s.v);
  const double a = 0.5 * spec.ship.L * (1 + U / spec.ship.u_nominal);
  const double b = 0.5 * spec.ship.B * (1 + U / spec.ship.u_nominal);
  const auto v = spec.port.vertices();
  for (int i = 0; i < spec.domain_vertices; ++i) {
    const double t = kTwoPi * i / spec.domain_vertices;
    const double bx = a * std::cos(t), by = b * std::sin(t);
    const Point q{s.x0 + bx * std::cos(s.psi) - by * std::sin(s.psi),
                  s.y0 + bx * std::sin(s.psi) + by * std::cos(s.psi)};
    if (edge_distance(q, v) <= 1e-9 || !crossing_inside(q, v)) return false;
  }
  const double d = D / spec.ship.L;
  const double lo = spec.ship.u_nominal * (1.50e-3 * d + 1.70e-2 * (1 - std::exp(-0.378 * d)));
  const double hi = spec.ship.u_nominal * (5.06e-3 * d + 2.04e-2 * (1 - std::exp(-1.10 * d)));
  return s.u >= lo && s.u <= hi;
}

// ---------------------------------------------------------------------------
// QP
// ---------------------------------------------------------------------------

struct QpOracle {
  bool found = false;
  VectorXd x;
  double f = 0.0;
};

/// Exhaustive active-set enumeration: every subset of inequality rows is tried
/// as the active set, the KKT system solved directly, and the primal/dual
/// feasible candidate kept. Strict convexity makes it unique.
inline QpOracle enumerate_active_sets(const QpProblem& qp) {
  const MatrixXd& H = qp.H;
  const int n = static_cast<int>(qp.g.size());
  const int me = static_cast<int>(qp.b_eq.size());
  const int mi = static_cast<int>(qp.b_in.size());
  QpOracle best;
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i) {
      if (mask & (1 << i)) act.push_back(i);
    }
    const int m = me + static_cast<int>(act.size());
    if (m > n) continue;
    MatrixXd K = MatrixXd::Zero(n + m, n + m);
    VectorXd rhs(n + m);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -qp.g;
    for (int i = 0; i < me; ++i) {
      K.block(n + i, 0, 1, n) = qp.A_eq.row(i);
      K.block(0, n + i, n, 1) = -qp.A_eq.row(i).transpose();
      rhs[n + i] = qp.b_eq[i];
    }
    for (std::size_t j = 0; j < act.size(); ++j) {
      const int r = n + me + static_cast<int>(j);
      K.block(r, 0, 1, n) = qp.A_in.row(act[j]);
      K.block(0, r, n, 1) = -qp.A_in.row(act[j]).transpose();
      rhs[r] = qp.b_in[act[j]];
    }
    Eigen::FullPivLU<MatrixXd> lu(K);
    if (lu.rank() < n + m) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd x = sol.head(n);
    bool ok = true;
    for (std::size_t j = 0; j < act.size(); ++j) ok = ok && sol[n + me + static_cast<int>(j)] >= -1e-10;
    for (int i = 0; i < mi; ++i) ok = ok && qp.A_in.row(i).dot(x) >= qp.b_in[i] - 1e-10;
    if (!ok) continue;
    const double f = 0.5 * x.dot(H * x) + qp.g.dot(x);
    if (!best.found || f < best.f) best = {true, x, f};
  }
  return best;
}

/// Strictly convex QP with n <= 6, at most 2 equalities and 1..4
/// inequalities, feasible by construction.
inline QpProblem random_qp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = std::uniform_int_distribution<int>(2, 6)(rng);
  const int me = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);
  const int mi = std::uniform_int_distribution<int>(1, 4)(rng);
  MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = U(rng);
  QpProblem qp;
  qp.H = M * M.transpose() + 0.5 * MatrixXd::Identity(n, n);
  qp.g.resize(n);
  for (auto& v : qp.g) v = 3.0 * U(rng);
  qp.A_eq.resize(me, n);
  qp.b_eq.resize(me);
  for (int i = 0; i < me; ++i) {
    for (int j = 0; j < n; ++j) qp.A_eq(i, j) = U(rng);
    qp.b_eq[i] = U(rng);
  }
  // Inequalities slack at a point on the equality manifold.
  VectorXd x0(n);
  for (auto& v : x0) v = U(rng);
  if (me > 0) {
    x0 += qp.A_eq.transpose() * (qp.A_eq * qp.A_eq.transpose()).ldlt().solve(qp.b_eq - qp.A_eq * x0);
  }
  qp.A_in.resize(mi, n);
  qp.b_in.resize(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) qp.A_in(i, j) = U(rng);
    qp.b_in[i] = qp.A_in.row(i).dot(x0) - 0.5 * (U(rng) + 1.0);
  }
  return qp;
}

}  // namespace berth::oracle
