// Berthing scenarios: the six tabulated approach cases, the stochastic case
// generator, recomputation with re-initialized controls, the feasibility
// study and an independent audit of solver output.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "berth/io.hpp"
#include "berth/solver.hpp"
#include "berth/transcription.hpp"

namespace berth {

// ---------------------------------------------------------------------------
// Tabulated cases
// ---------------------------------------------------------------------------

struct CaseDefinition {
  int id = 0;
  State x0;
  double wind_direction_deg = 0.0;
  double wind_speed = 0.0;  ///< [m/s]
  std::string description;

  WindCondition wind() const { return WindCondition(wind_speed, deg2rad(wind_direction_deg)); }
};

inline constexpr int kCaseCount = 6;

/// Throws InvalidParameter for ids outside 1..6.
CaseDefinition case_config(int id);

/// Planning problem for `scenario` on the given ship and port. Path fields of
/// the scenario are ignored; the caller loads them.
OcpSpec make_spec(const ScenarioConfig& scenario, const ShipParams& ship, const PortConfig& port);

/// Loads ship and port (bundled defaults for empty paths) and builds the OcpSpec.
OcpSpec load_spec(const ScenarioConfig& scenario);

ScenarioConfig scenario_for_case(int id);

// ---------------------------------------------------------------------------
// Random cases
// ---------------------------------------------------------------------------

/// Base state multiplied element-wise by the random factors, in the table's
/// order (x0, u, y0, v, psi, r).
inline constexpr std::array<double, 6> kRandomBase{24.0, 0.29, -5.0, 0.0, 3.14, 0.0};

inline constexpr Interval kV1{0.2, 3.0};
inline constexpr Interval kV2{0.2, 2.54};
inline constexpr Interval kV3{-6.0, 4.0};
inline constexpr Interval kV4{0.1, 1.0};
inline constexpr Interval kV6{0.1, 1.0};

/// Heading factor branch (0..3) selected by the x0 and y0 factors.
int heading_branch(double v1, double v3);
Interval heading_factor_range(int branch);

struct RandomDraw {
  std::array<double, 6> v{};
  int branch = 0;
  State x0;
  double wind_direction_deg = 0.0;
  double wind_speed = 0.0;
};

/// One unconditioned draw of the multipliers and the wind.
RandomDraw draw_random_case(std::mt19937_64& rng);

struct RandomCase {
  std::uint64_t seed = 0;
  RandomDraw draw;
  int draws = 0;  ///< draws used, including the accepted one

  WindCondition wind() const { return WindCondition(draw.wind_speed, deg2rad(draw.wind_direction_deg)); }
};

/// Initial-condition acceptance predicate: distance to the berth at most
/// 20 L, every ship-domain vertex strictly inside the port (exact winding
/// test) and surge speed within the speed corridor.
bool admissible_initial_state(const State& x0, const OcpSpec& spec);

class GeneratorExhausted : public std::runtime_error {
 public:
  explicit GeneratorExhausted(const std::string& what) : std::runtime_error(what) {}
};

/// Rejection-samples from one mt19937_64 stream seeded with `seed` until the
/// predicate holds. The wind, segments and other settings of `templ` are not
/// used by the predicate. Throws GeneratorExhausted after `max_draws`.
RandomCase generate_random_case(std::uint64_t seed, const OcpSpec& templ, int max_draws = 10000);

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

struct AuditTolerances {
  double defect = 1e-6;
  double terminal = 1e-6;
  double corridor = 1e-6;
  double bounds = 1e-9;
};

/// Independent re-check of a decision vector, sharing only the dynamics with
/// the transcription: knots are re-integrated substep by substep, containment
/// uses the exact winding test and bounds are rebuilt from the ship.
struct AuditReport {
  double max_defect = 0.0;
  double terminal_error = 0.0;
  double initial_error = 0.0;
  double worst_corridor = 0.0;  ///< most negative corridor residual (0 when none)
  int outside_vertices = 0;     ///< domain vertices not strictly inside
  int control_violations = 0;
  bool tf_in_bounds = true;
  bool speed_checked = true;
  bool passed = false;
  std::string failure;          ///< first failed check, empty on pass
};

AuditReport audit(const VectorXd& X, const OcpSpec& spec, const AuditTolerances& tol = {});

// ---------------------------------------------------------------------------
// Recomputation and the feasibility study
// ---------------------------------------------------------------------------

struct RecomputationPolicy {
  int attempts = 4;  ///< total solves, at most 4
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct AttemptResult {
  int attempt = 0;
  SolverStatus status = SolverStatus::Infeasible;
  bool audit_passed = false;
  bool feasible = false;  ///< solver reports feasible and the audit passes
  int iterations = 0;
  double tf = 0.0;
  double max_violation = 0.0;
  double wall_time = 0.0;
  std::string message;
};

struct RecomputationOutcome {
  std::vector<AttemptResult> attempts;
  VectorXd x;  ///< solution of the last attempt
  int feasible_attempt = -1;
  std::vector<TraceRecord> trace;  ///< last attempt, when the solver records one
};

/// Control portion of the guess redrawn uniformly within the actuator bounds;
/// tf and states are kept.
VectorXd reinitialize_controls(const VectorXd& guess, const OcpSpec& spec, std::mt19937_64& rng);

/// Attempt 0 starts from the linear guess, later attempts from
/// reinitialize_controls of it, each with its own seeded stream. Stops at the
/// first feasible attempt.
RecomputationOutcome run_with_recomputation(const OcpSpec& spec, const RecomputationPolicy& policy);

struct CaseRecord {
  int index = 0;
  RandomCase random_case;
  double initial_distance = 0.0;
  std::vector<AttemptResult> attempts;
  int feasible_attempt = -1;
  double wall_time = 0.0;
};

struct FeasibilityReport {
  std::uint64_t seed = 0;
  int attempts = 0;
  std::vector<CaseRecord> cases;
  /// Fraction of cases feasible at or before each attempt index.
  std::vector<double> cumulative_rate;
};

/// Seeds of case i derive from (seed, i) so results do not depend on the
/// number of threads.
FeasibilityReport run_feasibility_study(const StudyConfig& study, const OcpSpec& templ);

/// Deterministic part of the report (no wall times), JSON.
void write_report(std::ostream& os, const FeasibilityReport& report);
/// One row per case with its draw, statuses and final outcome.
void write_case_table(std::ostream& os, const FeasibilityReport& report);
/// Compute time against initial distance, one row per case.
void write_timing_table(std::ostream& os, const FeasibilityReport& report);

}  // namespace berth
