#include <cmath>
#include <random>

#include "berth/dynamics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace berth;

namespace {

Vector6 integrate(const State& s, const ActuatorState& a, const WindCondition& w, const ShipParams& p,
                  double T, double dt) {
  const int n = static_cast<int>(std::lround(T / dt));
  return simulate(s, a, a, w, p, T, n).state.to_vector();
}

}  // namespace

TEST_CASE("default ship parameters satisfy their invariants") {
  ShipParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.sway_yaw_determinant() == doctest::Approx(p.My() * p.Izm() - std::pow(p.xG * p.m, 2)));
}

TEST_CASE("invalid ship parameters name the violated invariant") {
  ShipParams p;
  p.m = -1.0;
  try {
    p.validate();
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(std::string(e.what()).find("m > 0") != std::string::npos);
  }
  ShipParams q;
  q.actuators.rudder_scale = 1.5;
  CHECK_THROWS_AS(q.validate(), InvalidParameter);
  ShipParams r;
  r.actuators.fixed_propeller_revs = 25.0;
  CHECK_THROWS_AS(r.validate(), InvalidParameter);
}

TEST_CASE("body to earth rates rotate the body velocity") {
  const State s{0, 0, kPi / 2, 1.0, 0.5, 0.2};
  const PoseRates r = body_to_earth_rates(s);
  CHECK(r.x0_dot == doctest::Approx(-0.5));
  CHECK(r.y0_dot == doctest::Approx(1.0));
  CHECK(r.psi_dot == doctest::Approx(0.2));
}

TEST_CASE("equilibrium: ship at rest with idle actuators and no wind stays at rest") {
  CHECK(oracle::equilibrium_error(1000, 7, ShipParams{}) == 0.0);
}

TEST_CASE("mirror symmetry about the body x axis") {
  CHECK(oracle::mirror_error(1000, 11, ShipParams{}) < 1e-12);
}

TEST_CASE("mirrored inputs give mirrored trajectories") {
  CHECK(oracle::mirror_trajectory_error(200, 12, ShipParams{}) <= 1e-9);
}

TEST_CASE("the kinematic transform preserves speed") {
  CHECK(oracle::speed_preservation_error(1000, 14) < 1e-14);
}

TEST_CASE("rotating the earth frame leaves body accelerations unchanged") {
  CHECK(oracle::rotation_error(1000, 13, ShipParams{}) < 1e-11);
}

TEST_CASE("force components respond with the expected signs") {
  ShipParams p;
  const State fwd{0, 0, 0, 0.5, 0, 0};
  SUBCASE("hull resists surge") { CHECK(hull_forces(fwd, p).X < 0.0); }
  SUBCASE("hull resists sway") {
    const State sway{0, 0, 0, 0, 0.1, 0};
    CHECK(hull_forces(sway, p).Y < 0.0);
  }
  SUBCASE("propeller pushes forward") { CHECK(propeller_forces(fwd, 10.0, p).X > 0.0); }
  SUBCASE("vectwin propeller rejects reverse revolutions") {
    CHECK_THROWS_AS(propeller_forces(fwd, -1.0, p), InvalidParameter);
  }
  SUBCASE("outboard rudders brake") {
    const double T = open_water_thrust(fwd, 10.0, p);
    const ActuatorState out{-deg2rad(40), deg2rad(40), 10.0, 0.0};
    const ForceTriplet f = rudder_forces(fwd, out, T, p);
    CHECK(f.X < 0.0);
    CHECK(std::abs(f.Y) < 1e-12);
  }
  SUBCASE("rudder trailing edges to starboard swing the bow to starboard") {
    const double T = open_water_thrust(fwd, 10.0, p);
    const ActuatorState stb{deg2rad(20), deg2rad(20), 10.0, 0.0};
    const ForceTriplet f = rudder_forces(fwd, stb, T, p);
    CHECK(f.Y < 0.0);
    CHECK(f.N > 0.0);
  }
  SUBCASE("rudder angles outside the physical range are rejected") {
    const ActuatorState bad{deg2rad(40), 0.0, 10.0, 0.0};
    CHECK_THROWS_AS(rudder_forces(fwd, bad, 0.0, p), InvalidParameter);
  }
  SUBCASE("bow thruster pushes the bow to starboard for positive revolutions") {
    const ForceTriplet f = thruster_forces(fwd, 10.0, p);
    CHECK(f.Y > 0.0);
    CHECK(f.N > 0.0);
  }
  SUBCASE("head wind retards a ship at rest") {
    const State rest{0, 0, 0, 0, 0, 0};
    const ForceTriplet f = wind_forces(rest, WindCondition(1.0, 0.0), p);
    CHECK(f.X < 0.0);
    CHECK(std::abs(f.Y) < 1e-12);
  }
}

TEST_CASE("wind condition validates its inputs") {
  CHECK_THROWS_AS(WindCondition(-1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(WindCondition(1.0, NAN), InvalidParameter);
  CHECK(WindCondition(1.0, -kPi / 2).direction() == doctest::Approx(1.5 * kPi));
}

TEST_CASE("actuators slew at their rate limits and stop on the command") {
  ShipParams p;
  const ActuatorState a0{0, 0, 10, 0};
  const ControlCommand c{-deg2rad(45), deg2rad(1), 12, -30};
  const ActuatorState a1 = actuator_rate_step(a0, c, 0.5, p);
  CHECK(a1.rudder_port == doctest::Approx(-deg2rad(10)));
  CHECK(a1.rudder_starboard == doctest::Approx(deg2rad(1)));
  CHECK(a1.propeller == doctest::Approx(11.0));
  CHECK(a1.thruster == doctest::Approx(-0.5));
  CHECK_THROWS_AS(actuator_rate_step(a0, c, 0.0, p), InvalidParameter);

  ActuatorState a = a0;
  for (int i = 0; i < 200; ++i) a = actuator_rate_step(a, c, 0.5, p);
  CHECK(a == c);
}

TEST_CASE("rk4 has fourth-order global error with actuators at their commands") {
  const double slope = oracle::rk4_fitted_order(ShipParams{});
  MESSAGE("fitted order " << slope);
  CHECK(slope >= 3.7);
}

TEST_CASE("one second from the first case matches a fine-step reference") {
  ShipParams p;
  const State s{60, 0, 3.14, 0.74, 0, 0};
  const ActuatorState a{-deg2rad(20), deg2rad(20), 10.0, 5.0};
  const WindCondition w(1.0, 0.0);
  const Vector6 coarse = integrate(s, a, w, p, 1.0, 0.1);
  const Vector6 fine = integrate(s, a, w, p, 1.0, 1e-4);
  CHECK((coarse - fine).cwiseAbs().maxCoeff() / fine.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("integration failures surface as IntegrationError") {
  ShipParams p;
  const State s{0, 0, 0, NAN, 0, 0};
  CHECK_THROWS_AS(rk4_step(s, {}, {}, WindCondition(), p, 0.1), IntegrationError);
  CHECK_THROWS_AS(rk4_step(State{}, {}, {}, WindCondition(), p, 0.0), InvalidParameter);
}

TEST_CASE("actual actuators stay rate limited and inside the command hull") {
  ShipParams p;
  const auto& ac = p.actuators;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double dt = 0.25;
  ActuatorState a{0, 0, 10, 0};
  double lo_p = a.rudder_port, hi_p = a.rudder_port, lo_t = a.thruster, hi_t = a.thruster;
  for (int k = 0; k < 400; ++k) {
    const ControlCommand c{ac.port_rudder_range().mid() + 0.5 * (ac.rudder_outboard + ac.rudder_inboard) * U(rng),
                           0.0, 10.0, ac.thruster_max * U(rng)};
    lo_p = std::min(lo_p, c.rudder_port), hi_p = std::max(hi_p, c.rudder_port);
    lo_t = std::min(lo_t, c.thruster), hi_t = std::max(hi_t, c.thruster);
    for (int j = 0; j < 8; ++j) {
      const ActuatorState next = actuator_rate_step(a, c, dt, p);
      CHECK(std::abs(next.rudder_port - a.rudder_port) <= ac.rudder_rate * dt * (1 + 1e-12));
      CHECK(std::abs(next.thruster - a.thruster) <= ac.thruster_rate * dt * (1 + 1e-12));
      CHECK((next.rudder_port >= lo_p && next.rudder_port <= hi_p));
      CHECK((next.thruster >= lo_t && next.thruster <= hi_t));
      a = next;
    }
  }
}
