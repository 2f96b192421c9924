#include "berth/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "berth/constraints.hpp"
#include "berth/geometry.hpp"
#include "json.hpp"

namespace berth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform on [lo, hi] from the top 53 bits, identical on every standard
// library (std::uniform_real_distribution is not).
double uniform(std::mt19937_64& rng, Interval iv) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return iv.lo + (iv.hi - iv.lo) * u;
}

struct TableRow {
  double x0, u, y0, v, psi, r, gamma_deg, wind_speed;
  const char* description;
};

// Golden copy in the table's column order.
constexpr std::array<TableRow, kCaseCount> kTable{{
    {60.0, 0.74, 0.0, 0.0, 3.14, 0.0, 0.0, 1.0, "entrance, heading straight in"},
    {55.2, 0.58, -6.0, 0.0, 2.36, 0.0, 45.0, 0.75, "outer basin south of the entrance line"},
    {57.6, 0.58, 10.0, 0.0, 3.93, 0.0, 250.0, 0.5, "outer basin north of the entrance line"},
    {52.8, 0.47, -10.0, 0.0, 1.57, 0.0, 45.0, 0.25, "outer basin, beam-on to the entrance"},
    {24.0, 0.34, 6.0, 0.0, 3.77, 0.0, 90.0, 0.5, "inner basin, off the berth axis"},
    {28.8, 0.29, 0.0, 0.0, 3.14, 0.0, 315.0, 0.75, "inner basin, on the berth axis"},
}};

std::string fmt(double x) {
  std::ostringstream ss;
  ss << std::setprecision(9) << x;
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Tabulated cases
// ---------------------------------------------------------------------------

CaseDefinition case_config(int id) {
  if (id < 1 || id > kCaseCount) {
    throw InvalidParameter("unknown case id " + std::to_string(id) + " (expected 1..6)");
  }
  const TableRow& t = kTable[static_cast<std::size_t>(id - 1)];
  CaseDefinition c;
  c.id = id;
  c.x0 = {t.x0, t.y0, t.psi, t.u, t.v, t.r};
  c.wind_direction_deg = t.gamma_deg;
  c.wind_speed = t.wind_speed;
  c.description = t.description;
  return c;
}

ScenarioConfig scenario_for_case(int id) {
  const CaseDefinition c = case_config(id);
  ScenarioConfig s;
  s.name = "case" + std::to_string(id);
  s.case_id = id;
  s.x0 = c.x0;
  s.wind = c.wind();
  return s;
}

OcpSpec make_spec(const ScenarioConfig& scenario, const ShipParams& ship, const PortConfig& port) {
  OcpSpec spec;
  spec.x0 = scenario.x0;
  spec.xf = port.berth_pose();
  spec.berth = port.berth;
  spec.segments = scenario.segments;
  spec.substeps = scenario.substeps;
  spec.wind = scenario.wind;
  spec.ship = ship;
  spec.port = port.polygon;
  spec.speed_constraint = scenario.speed_constraint;
  spec.collision = scenario.collision;
  spec.objective = scenario.objective;
  spec.tf_bounds = scenario.tf_bounds;
  return spec;
}

OcpSpec load_spec(const ScenarioConfig& scenario) {
  const ShipParams ship =
      load_ship(scenario.ship_file.empty() ? data_dir() / "ship_a.json" : scenario.ship_file);
  const PortConfig port =
      load_port(scenario.port_file.empty() ? data_dir() / "port_inukai.json" : scenario.port_file);
  return make_spec(scenario, ship, port);
}

// ---------------------------------------------------------------------------
// Random cases
// ---------------------------------------------------------------------------

int heading_branch(double v1, double v3) {
  if (v1 <= 1.0 && v3 >= 0.0) return 0;
  if (v1 < 1.0 && v3 < 0.0) return 1;
  if (v1 > 1.0 && v3 < 0.0) return 2;
  return 3;
}

Interval heading_factor_range(int branch) {
  switch (branch) {
    case 0: return {0.5, 0.85};
    case 1: return {1.35, 1.5};
    case 2: return {1.0, 1.5};
    case 3: return {0.5, 1.0};
  }
  throw std::invalid_argument("heading branch must be 0..3");
}

RandomDraw draw_random_case(std::mt19937_64& rng) {
  RandomDraw d;
  auto& v = d.v;
  v[0] = uniform(rng, kV1);
  v[1] = uniform(rng, kV2);
  v[2] = uniform(rng, kV3);
  v[3] = uniform(rng, kV4);
  v[5] = uniform(rng, kV6);
  d.branch = heading_branch(v[0], v[2]);
  v[4] = uniform(rng, heading_factor_range(d.branch));
  d.wind_direction_deg = uniform(rng, {0.0, 360.0});
  d.wind_speed = uniform(rng, {0.0, 1.0});

  std::array<double, 6> x{};
  for (std::size_t i = 0; i < 6; ++i) x[i] = v[i] * kRandomBase[i];
  d.x0 = {x[0], x[2], x[4], x[1], x[3], x[5]};
  return d;
}

bool admissible_initial_state(const State& x0, const OcpSpec& spec) {
  if (!x0.finite()) return false;
  const double D = std::hypot(x0.x0 - spec.berth.x, x0.y0 - spec.berth.y);
  if (D > 20.0 * spec.ship.L) return false;
  const ShipDomain dom = ship_domain_vertices(x0, spec.ship, spec.domain_vertices);
  for (const Point& p : dom.vertices) {
    if (!is_inside(p, spec.port)) return false;
  }
  const SpeedLimits lim = speed_limits(D, spec.ship, spec.coeffs);
  return x0.u >= lim.min && x0.u <= lim.max;
}

RandomCase generate_random_case(std::uint64_t seed, const OcpSpec& templ, int max_draws) {
  std::mt19937_64 rng(seed);
  RandomCase rc;
  rc.seed = seed;
  for (int i = 1; i <= max_draws; ++i) {
    rc.draw = draw_random_case(rng);
    rc.draws = i;
    if (admissible_initial_state(rc.draw.x0, templ)) return rc;
  }
  throw GeneratorExhausted("no admissible initial state after " + std::to_string(max_draws) +
                           " draws (seed " + std::to_string(seed) + "); check port geometry and ship");
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

AuditReport audit(const VectorXd& X, const OcpSpec& spec, const AuditTolerances& tol) {
  AuditReport rep;
  auto fail = [&](const std::string& what) {
    if (rep.failure.empty()) rep.failure = what;
  };
  const Trajectory t = unpack(X, spec);
  const int Ns = spec.segments;

  rep.tf_in_bounds = std::isfinite(t.tf) && spec.tf_bounds.contains(t.tf);
  if (!rep.tf_in_bounds) fail("tf outside its bounds");

  // Re-integration, one RK4 substep at a time.
  const double dt = t.tf / (Ns * spec.substeps);
  ActuatorState a = spec.initial_actuators();
  try {
    for (int k = 0; k < Ns; ++k) {
      State x = t.states[k];
      for (int s = 0; s < spec.substeps; ++s) {
        const StepResult r = rk4_step(x, a, t.controls[k], spec.wind, spec.ship, dt);
        x = r.state;
        a = r.actuators;
      }
      const Vector6 diff = x.to_vector() - t.states[k + 1].to_vector();
      const double dk = std::isfinite(diff.sum()) ? diff.cwiseAbs().maxCoeff() : HUGE_VAL;
      rep.max_defect = std::max(rep.max_defect, dk);
    }
  } catch (const std::exception& e) {
    rep.max_defect = HUGE_VAL;
    fail(std::string("re-integration failed: ") + e.what());
  }
  if (!(rep.max_defect <= tol.defect)) fail("defect " + fmt(rep.max_defect) + " exceeds tolerance");

  rep.initial_error = (t.states.front().to_vector() - spec.x0.to_vector()).cwiseAbs().maxCoeff();
  rep.terminal_error = (t.states.back().to_vector() - spec.xf.to_vector()).cwiseAbs().maxCoeff();
  if (!(rep.initial_error <= tol.terminal)) fail("initial state mismatch " + fmt(rep.initial_error));
  if (!(rep.terminal_error <= tol.terminal)) fail("terminal error " + fmt(rep.terminal_error));

  rep.speed_checked = spec.speed_constraint;
  if (spec.speed_constraint) {
    for (int k = 0; k < Ns; ++k) {
      const State& s = t.states[k];
      const double D = std::hypot(s.x0 - spec.berth.x, s.y0 - spec.berth.y);
      const SpeedLimits lim = speed_limits(D, spec.ship, spec.coeffs);
      rep.worst_corridor = std::min({rep.worst_corridor, s.u - lim.min, lim.max - s.u});
    }
    if (!(rep.worst_corridor >= -tol.corridor)) {
      fail("speed corridor violated by " + fmt(-rep.worst_corridor));
    }
  }

  if (spec.collision != CollisionMode::Off) {
    for (const State& s : t.states) {
      const ShipDomain dom = ship_domain_vertices(s, spec.ship, spec.domain_vertices);
      for (const Point& p : dom.vertices) rep.outside_vertices += is_inside(p, spec.port) ? 0 : 1;
    }
    if (rep.outside_vertices) fail(std::to_string(rep.outside_vertices) + " ship-domain vertices outside the port");
  }

  const ActuatorBounds bounds = build_actuator_bounds(spec.ship);
  for (const ControlCommand& c : t.controls) rep.control_violations += bounds.contains(c, tol.bounds) ? 0 : 1;
  if (rep.control_violations) fail(std::to_string(rep.control_violations) + " commands outside actuator bounds");

  rep.passed = rep.failure.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Recomputation and the feasibility study
// ---------------------------------------------------------------------------

VectorXd reinitialize_controls(const VectorXd& guess, const OcpSpec& spec, std::mt19937_64& rng) {
  const Layout L = layout_of(spec);
  if (guess.size() != L.size()) throw std::invalid_argument("reinitialize_controls: wrong dimension");
  const VariableBounds b = variable_bounds(spec);
  VectorXd out = guess;
  for (int k = 0; k < L.segments; ++k) {
    for (int j = 0; j < L.n_u; ++j) {
      const int i = L.control(k, j);
      out[i] = uniform(rng, {b.lower[i], b.upper[i]});
    }
  }
  return out;
}

RecomputationOutcome run_with_recomputation(const OcpSpec& spec, const RecomputationPolicy& policy) {
  if (policy.attempts < 1 || policy.attempts > 4) {
    throw InvalidParameter("recomputation attempts must be in 1..4");
  }
  const NlpProblem nlp = build_nlp(spec);
  const VectorXd base = linear_initial_guess(spec, default_tf_guess(spec));
  RecomputationOutcome out;
  for (int a = 0; a < policy.attempts; ++a) {
    VectorXd guess = base;
    if (a > 0) {
      std::mt19937_64 rng(derive_seed(policy.seed, static_cast<std::uint64_t>(a)));
      guess = reinitialize_controls(base, spec, rng);
    }
    const SolverResult r = solve(nlp, guess, policy.solver);
    AttemptResult ar;
    ar.attempt = a;
    ar.status = r.status;
    ar.iterations = r.iterations;
    ar.tf = r.x[Layout::tf()];
    ar.max_violation = r.max_violation;
    ar.wall_time = r.wall_time;
    ar.message = r.message;
    if (is_feasible(r.status)) {
      const AuditReport rep = audit(r.x, spec);
      ar.audit_passed = rep.passed;
      if (!rep.passed) ar.message += "; audit: " + rep.failure;
    }
    ar.feasible = is_feasible(r.status) && ar.audit_passed;
    out.attempts.push_back(ar);
    out.x = r.x;
    out.trace = r.trace;
    if (ar.feasible) {
      out.feasible_attempt = a;
      break;
    }
  }
  return out;
}

FeasibilityReport run_feasibility_study(const StudyConfig& study, const OcpSpec& templ_in) {
  if (study.n_cases < 1) throw InvalidParameter("n_cases must be >= 1");
  OcpSpec templ = templ_in;
  templ.segments = study.segments;
  templ.speed_constraint = study.speed_constraint;
  templ.collision = study.collision;

  FeasibilityReport rep;
  rep.seed = study.seed;
  rep.attempts = study.attempts;
  rep.cases.resize(static_cast<std::size_t>(study.n_cases));

  // Case generation is cheap and kept serial so generator failures surface
  // before any solve starts.
  for (int i = 0; i < study.n_cases; ++i) {
    CaseRecord& c = rep.cases[static_cast<std::size_t>(i)];
    c.index = i;
    c.random_case = generate_random_case(derive_seed(study.seed, static_cast<std::uint64_t>(i)), templ);
    const State& x0 = c.random_case.draw.x0;
    c.initial_distance = std::hypot(x0.x0 - templ.berth.x, x0.y0 - templ.berth.y);
  }

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < study.n_cases; i = next++) {
      CaseRecord& c = rep.cases[static_cast<std::size_t>(i)];
      OcpSpec spec = templ;
      spec.x0 = c.random_case.draw.x0;
      spec.wind = c.random_case.wind();
      RecomputationPolicy policy;
      policy.attempts = study.attempts;
      policy.seed = derive_seed(c.random_case.seed, 0x7265636f6d70ULL);
      policy.solver.max_iterations = study.max_iterations;
      const auto t0 = std::chrono::steady_clock::now();
      const RecomputationOutcome out = run_with_recomputation(spec, policy);
      c.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      c.attempts = out.attempts;
      c.feasible_attempt = out.feasible_attempt;
    }
  };
  const int nthreads = std::clamp(study.threads, 1, study.n_cases);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  rep.cumulative_rate.assign(static_cast<std::size_t>(study.attempts), 0.0);
  for (int a = 0; a < study.attempts; ++a) {
    int n = 0;
    for (const CaseRecord& c : rep.cases) n += (c.feasible_attempt >= 0 && c.feasible_attempt <= a) ? 1 : 0;
    rep.cumulative_rate[static_cast<std::size_t>(a)] = static_cast<double>(n) / study.n_cases;
  }
  return rep;
}

void write_report(std::ostream& os, const FeasibilityReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = report.seed;
  j["attempts"] = report.attempts;
  j["n_cases"] = report.cases.size();
  j["cumulative_feasibility"] = report.cumulative_rate;
  ordered_json cases = ordered_json::array();
  for (const CaseRecord& c : report.cases) {
    const RandomDraw& d = c.random_case.draw;
    ordered_json jc;
    jc["index"] = c.index;
    jc["seed"] = c.random_case.seed;
    jc["draws"] = c.random_case.draws;
    jc["heading_branch"] = d.branch;
    jc["multipliers"] = d.v;
    jc["initial_state"] = {{"x0", d.x0.x0}, {"y0", d.x0.y0}, {"psi_deg", rad2deg(d.x0.psi)},
                           {"u", d.x0.u},   {"v", d.x0.v},   {"r_deg_s", rad2deg(d.x0.r)}};
    jc["wind"] = {{"direction_deg", d.wind_direction_deg}, {"speed", d.wind_speed}};
    jc["initial_distance"] = c.initial_distance;
    ordered_json atts = ordered_json::array();
    for (const AttemptResult& a : c.attempts) {
      atts.push_back({{"attempt", a.attempt},
                      {"status", to_string(a.status)},
                      {"audit_passed", a.audit_passed},
                      {"feasible", a.feasible},
                      {"iterations", a.iterations},
                      {"tf", a.tf},
                      {"max_violation", a.max_violation}});
    }
    jc["attempts"] = atts;
    jc["feasible_attempt"] = c.feasible_attempt;
    cases.push_back(jc);
  }
  j["cases"] = cases;
  os << j.dump(2) << "\n";
}

void write_case_table(std::ostream& os, const FeasibilityReport& report) {
  os << "index,seed,draws,branch,x0,y0,psi_deg,u,wind_direction_deg,wind_speed,initial_distance,"
        "attempts,feasible_attempt,final_status\n";
  for (const CaseRecord& c : report.cases) {
    const RandomDraw& d = c.random_case.draw;
    os << c.index << ',' << c.random_case.seed << ',' << c.random_case.draws << ',' << d.branch << ','
       << fmt(d.x0.x0) << ',' << fmt(d.x0.y0) << ',' << fmt(rad2deg(d.x0.psi)) << ',' << fmt(d.x0.u) << ','
       << fmt(d.wind_direction_deg) << ',' << fmt(d.wind_speed) << ',' << fmt(c.initial_distance) << ','
       << c.attempts.size() << ',' << c.feasible_attempt << ','
       << (c.feasible_attempt >= 0 ? "feasible" : "infeasible") << '\n';
  }
}

void write_timing_table(std::ostream& os, const FeasibilityReport& report) {
  os << "index,initial_distance,attempts,feasible,wall_time_total,wall_time_last_attempt\n";
  for (const CaseRecord& c : report.cases) {
    const double last = c.attempts.empty() ? 0.0 : c.attempts.back().wall_time;
    os << c.index << ',' << fmt(c.initial_distance) << ',' << c.attempts.size() << ','
       << (c.feasible_attempt >= 0 ? 1 : 0) << ',' << fmt(c.wall_time) << ',' << fmt(last) << '\n';
  }
}

}  // namespace berth
