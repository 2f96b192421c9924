#include <filesystem>
#include <string>

#include "berth/io.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace berth;
using nlohmann::json;

namespace {

const std::filesystem::path kData(BERTH_DATA_DIR);

json ship_json() { return json::parse(read_text(kData / "ship_a.json")); }

template <class E, class F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no exception>";
}

}  // namespace

TEST_CASE("bundled files load") {
  CHECK_NOTHROW(load_ship(kData / "ship_a.json"));
  CHECK_NOTHROW(load_port(kData / "port_inukai.json"));
  CHECK_NOTHROW(load_study(kData / "study.json"));
  for (const auto& entry : std::filesystem::directory_iterator(kData / "scenarios")) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_scenario(entry.path()));
  }
}

TEST_CASE("bundled ship matches the built-in defaults") {
  const ShipParams file = load_ship(kData / "ship_a.json");
  const ShipParams def;
  CHECK(file.L == def.L);
  CHECK(file.m == def.m);
  CHECK(file.u_nominal == def.u_nominal);
  CHECK(file.actuators.rudder_outboard == doctest::Approx(def.actuators.rudder_outboard).epsilon(1e-15));
  CHECK(file.actuators.rudder_scale == def.actuators.rudder_scale);
  CHECK(file.actuators.thruster_max == def.actuators.thruster_max);
}

TEST_CASE("port file: degrees on disk, radians in memory") {
  const PortConfig p = load_port(kData / "port_inukai.json");
  CHECK(p.berth_heading == doctest::Approx(kPi));
  CHECK(p.berth.x == 4.0);
  CHECK(p.berth.y == 0.0);
  CHECK(p.polygon.edge_count() == 14);
}

TEST_CASE("syntax and type problems are parse errors") {
  CHECK_THROWS_AS(parse_ship("{ \"L\": 3.0, ", "bad.json"), ParseError);
  CHECK_THROWS_AS(parse_port("[1, 2]", "bad.json"), ParseError);
  CHECK_THROWS_AS(detect_kind("not json"), ParseError);
  CHECK_THROWS_AS(read_text(kData / "missing.json"), ParseError);

  json s = ship_json();
  s["L"] = "three";
  const std::string msg = message_of<ParseError>([&] { parse_ship(s.dump(), "ship_a.json"); });
  CHECK(msg.find("ship_a.json") != std::string::npos);
  CHECK(msg.find("L") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their path") {
  json s = ship_json();
  s["hull"]["Yvv_typo"] = 1.0;
  const std::string msg = message_of<ParseError>([&] { parse_ship(s.dump(), "ship"); });
  CHECK(msg.find("Yvv_typo") != std::string::npos);
  CHECK(msg.find("hull") != std::string::npos);
}

TEST_CASE("well-formed values breaking an invariant are invalid, not parse errors") {
  SUBCASE("negative mass names the invariant") {
    json s = ship_json();
    s["m"] = -5.0;
    const std::string msg = message_of<InvalidParameter>([&] { parse_ship(s.dump(), "ship_a.json"); });
    CHECK(msg.find("m > 0") != std::string::npos);
    CHECK(msg.find("ship_a.json") != std::string::npos);
  }
  SUBCASE("three-point open ring is an invalid polygon") {
    json p = json::parse(read_text(kData / "port_inukai.json"));
    p["vertices"] = json::array({json::array({0, 0}), json::array({10, 0}), json::array({10, 10})});
    p["berth"]["point"] = json::array({7, 2});
    p["berth"]["line"] = json::array({json::array({0, 0}), json::array({10, 0})});
    const std::string msg = message_of<InvalidPolygon>([&] { parse_port(p.dump(), "port.json"); });
    CHECK(msg.find("not closed") != std::string::npos);
  }
  SUBCASE("berth outside the polygon") {
    json p = json::parse(read_text(kData / "port_inukai.json"));
    p["berth"]["point"] = json::array({-20, 0});
    CHECK_THROWS_AS(parse_port(p.dump(), "port.json"), InvalidParameter);
  }
  SUBCASE("berth line off the boundary") {
    json p = json::parse(read_text(kData / "port_inukai.json"));
    p["berth"]["line"] = json::array({json::array({0, 0}), json::array({10, 0})});
    CHECK_THROWS_AS(parse_port(p.dump(), "port.json"), InvalidParameter);
  }
}

TEST_CASE("scenario files") {
  SUBCASE("explicit initial state") {
    const ScenarioConfig s = load_scenario(kData / "scenarios" / "custom_example.json");
    CHECK(s.name == "inner-basin-example");
    CHECK_FALSE(s.case_id.has_value());
    CHECK(s.x0.psi == doctest::Approx(deg2rad(190.0)));
    CHECK(s.wind.direction() == doctest::Approx(deg2rad(120.0)));
    CHECK(s.wind.speed() == 0.5);
    CHECK(std::filesystem::equivalent(s.port_file, kData / "port_inukai.json"));
  }
  SUBCASE("case reference") {
    const ScenarioConfig s = load_scenario(kData / "scenarios" / "case4.json");
    REQUIRE(s.case_id.has_value());
    CHECK(*s.case_id == 4);
    CHECK(s.x0.x0 == 52.8);
    CHECK(s.x0.y0 == -10.0);
  }
  SUBCASE("case and initial state together are ambiguous") {
    json j = json::parse(read_text(kData / "scenarios" / "custom_example.json"));
    j["case"] = 2;
    CHECK_THROWS(parse_scenario(j.dump(), "s.json", kData / "scenarios"));
  }
  SUBCASE("unknown case id") {
    CHECK_THROWS_AS(parse_scenario(R"({"name": "x", "case": 9})"), InvalidParameter);
  }
  SUBCASE("mode strings") {
    json j = json::parse(read_text(kData / "scenarios" / "case1.json"));
    j["collision"] = "winding";
    j["objective"] = "sum";
    const ScenarioConfig s = parse_scenario(j.dump(), "s.json", kData / "scenarios");
    CHECK(s.collision == CollisionMode::Winding);
    CHECK(s.objective == ObjectiveMode::Sum);
    j["collision"] = "exact";
    CHECK_THROWS(parse_scenario(j.dump(), "s.json", kData / "scenarios"));
  }
}

TEST_CASE("study files") {
  const StudyConfig s = load_study(kData / "study.json");
  CHECK(s.n_cases == 20);
  CHECK(s.attempts == 4);
  json j = json::parse(read_text(kData / "study.json"));
  j["attempts"] = 5;
  CHECK_THROWS_AS(parse_study(j.dump(), "study.json", kData), InvalidParameter);
  j["attempts"] = 4;
  j["n_cases"] = 0;
  CHECK_THROWS_AS(parse_study(j.dump(), "study.json", kData), InvalidParameter);
}

TEST_CASE("file kinds are detected from their keys") {
  CHECK(detect_kind(read_text(kData / "ship_a.json")) == ConfigKind::Ship);
  CHECK(detect_kind(read_text(kData / "port_inukai.json")) == ConfigKind::Port);
  CHECK(detect_kind(read_text(kData / "scenarios" / "case1.json")) == ConfigKind::Scenario);
  CHECK(detect_kind(read_text(kData / "study.json")) == ConfigKind::Study);
}
