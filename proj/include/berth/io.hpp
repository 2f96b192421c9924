// JSON configuration files: ship, port, scenario and study.
//
// Angles are degrees in every file and radians in memory. Unknown keys are
// rejected so that a misspelled field does not silently fall back to a
// default. Syntax and type problems raise ParseError; well-formed files whose
// values break a model invariant raise InvalidParameter or InvalidPolygon.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "berth/dynamics.hpp"
#include "berth/geometry.hpp"
#include "berth/transcription.hpp"

namespace berth {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct PortConfig {
  std::string name;
  Polygon polygon;
  Point berth;
  double berth_heading = 0.0;  ///< [rad]
  std::array<Point, 2> berth_line;

  /// Berth pose at rest.
  State berth_pose() const { return {berth.x, berth.y, berth_heading, 0.0, 0.0, 0.0}; }
};

struct ScenarioConfig {
  std::string name;
  /// Set when the file refers to one of the tabulated cases.
  std::optional<int> case_id;
  State x0;
  WindCondition wind;
  std::filesystem::path ship_file;  ///< empty: built-in ship
  std::filesystem::path port_file;  ///< empty: bundled port
  int segments = 30;
  int substeps = 4;
  bool speed_constraint = true;
  CollisionMode collision = CollisionMode::Smooth;
  ObjectiveMode objective = ObjectiveMode::Product;
  Interval tf_bounds{1.0, 600.0};
};

struct StudyConfig {
  int n_cases = 20;
  std::uint64_t seed = 1;
  int attempts = 4;  ///< first solve plus recomputations
  int segments = 30;
  int max_iterations = 400;
  int threads = 1;
  bool speed_constraint = true;
  CollisionMode collision = CollisionMode::Smooth;
  std::filesystem::path ship_file;
  std::filesystem::path port_file;
};

enum class ConfigKind { Ship, Port, Scenario, Study };

const char* to_string(ConfigKind k);

/// Directory holding the bundled data files.
std::filesystem::path data_dir();

/// `source` names the input in diagnostics (usually the file name).
ShipParams parse_ship(const std::string& text, const std::string& source = "ship");
PortConfig parse_port(const std::string& text, const std::string& source = "port");
/// Relative ship/port paths are resolved against `base_dir`.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "scenario",
                              const std::filesystem::path& base_dir = {});
StudyConfig parse_study(const std::string& text, const std::string& source = "study",
                        const std::filesystem::path& base_dir = {});

ShipParams load_ship(const std::filesystem::path& path);
PortConfig load_port(const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path);
StudyConfig load_study(const std::filesystem::path& path);

/// Guesses the file kind from its top-level keys. Throws ParseError when the
/// text is not a JSON object.
ConfigKind detect_kind(const std::string& text, const std::string& source = "input");

/// Reads a whole file; ParseError if it cannot be opened.
std::string read_text(const std::filesystem::path& path);

}  // namespace berth
