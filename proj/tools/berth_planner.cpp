// berth_planner: plan berthing maneuvers, run the tabulated cases and the
// feasibility study, and validate configuration files.
//
// Exit codes: 0 ok, 2 parse error, 3 invalid parameters, 4 infeasible,
// 5 internal error.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "berth/artifacts.hpp"
#include "berth/io.hpp"
#include "berth/scenarios.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace berth;

namespace {

enum Exit { kOk = 0, kParse = 2, kInvalid = 3, kInfeasible = 4, kInternal = 5 };

struct CommonFlags {
  std::string ship;
  std::string port;
  std::optional<int> segments;
  std::uint64_t seed = 1;
  bool no_speed = false;
  std::string collision;
  std::string objective;
  bool trace = false;
  std::string out = "out";
  int max_iterations = 400;
  int attempts = 1;
  int threads = 1;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--ship", f.ship, "ship parameter file");
  app->add_option("--port", f.port, "port geometry file");
  app->add_option("--segments", f.segments, "shooting segments")->check(CLI::Range(2, 1000));
  app->add_option("--seed", f.seed, "seed for control re-initialization and random cases");
  app->add_flag("--no-speed-constraint", f.no_speed, "drop the speed corridor rows");
  app->add_option("--collision-mode", f.collision, "winding, smooth or off")
      ->check(CLI::IsMember({"winding", "smooth", "off"}));
  app->add_flag("--trace", f.trace, "write the per-iteration solver trace");
  app->add_option("--out", f.out, "output directory");
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path ship_path(const CommonFlags& f, const fs::path& fallback) {
  if (!f.ship.empty()) return f.ship;
  return fallback.empty() ? data_dir() / "ship_a.json" : fallback;
}

fs::path port_path(const CommonFlags& f, const fs::path& fallback) {
  if (!f.port.empty()) return f.port;
  return fallback.empty() ? data_dir() / "port_inukai.json" : fallback;
}

void apply_flags(ScenarioConfig& s, const CommonFlags& f) {
  if (f.segments) s.segments = *f.segments;
  if (f.no_speed) s.speed_constraint = false;
  if (!f.collision.empty()) s.collision = parse_collision_mode(f.collision);
  if (!f.objective.empty()) s.objective = parse_objective_mode(f.objective);
}

struct RunOutput {
  std::string name;
  OcpSpec spec;
  RecomputationOutcome outcome;
  std::optional<AuditReport> audit_report;
  std::string spec_hash;
};

RunOutput run_scenario(const std::string& name, ScenarioConfig sc, const CommonFlags& f, const fs::path& ship_file,
                       const fs::path& port_file, const std::string& scenario_text) {
  RunOutput run;
  run.name = name;
  const std::string ship_text = read_text(ship_file);
  const std::string port_text = read_text(port_file);
  const ShipParams ship = parse_ship(ship_text, ship_file.filename().string());
  const PortConfig port = parse_port(port_text, port_file.filename().string());
  run.spec = make_spec(sc, ship, port);
  run.spec.validate();

  std::ostringstream key;
  key << scenario_text << '\n' << ship_text << '\n' << port_text << '\n'
      << sc.segments << ' ' << sc.speed_constraint << ' ' << to_string(sc.collision) << ' '
      << to_string(sc.objective) << ' ' << f.seed << ' ' << f.attempts << ' ' << f.max_iterations;
  run.spec_hash = hex(fnv1a(key.str()));

  RecomputationPolicy policy;
  policy.attempts = f.attempts;
  policy.seed = f.seed;
  policy.solver.max_iterations = f.max_iterations;
  policy.solver.record_trace = f.trace;
  run.outcome = run_with_recomputation(run.spec, policy);
  run.audit_report = audit(run.outcome.x, run.spec);
  return run;
}

void write_artifacts(const RunOutput& run, const fs::path& dir, const std::vector<PlotSeries>& extra = {}) {
  fs::create_directories(dir);
  {
    std::ofstream os(dir / (run.name + "_trajectory.csv"));
    write_trajectory_csv(os, run.outcome.x, run.spec);
  }
  {
    std::vector<PlotSeries> series{{run.spec.speed_constraint ? "with speed reduction" : "without speed reduction",
                                    run.spec.speed_constraint ? "#1f4fd1" : "#d1301f", run.outcome.x}};
    series.insert(series.end(), extra.begin(), extra.end());
    std::ofstream os(dir / (run.name + ".svg"));
    write_plot_svg(os, series, run.spec, run.name);
  }
  nlohmann::ordered_json j;
  const AttemptResult& last = run.outcome.attempts.back();
  j["name"] = run.name;
  j["spec_hash"] = run.spec_hash;
  j["status"] = to_string(last.status);
  j["feasible"] = run.outcome.feasible_attempt >= 0;
  j["feasible_attempt"] = run.outcome.feasible_attempt;
  j["tf"] = last.tf;
  j["iterations"] = last.iterations;
  j["max_violation"] = last.max_violation;
  j["speed_constraint"] = run.spec.speed_constraint;
  j["collision"] = to_string(run.spec.collision);
  j["objective"] = to_string(run.spec.objective);
  j["segments"] = run.spec.segments;
  double wall = 0.0;
  for (const auto& a : run.outcome.attempts) wall += a.wall_time;
  j["wall_time"] = wall;
  if (run.audit_report) {
    const AuditReport& a = *run.audit_report;
    j["audit"] = {{"passed", a.passed},
                  {"max_defect", a.max_defect},
                  {"terminal_error", a.terminal_error},
                  {"worst_corridor", a.worst_corridor},
                  {"outside_vertices", a.outside_vertices},
                  {"control_violations", a.control_violations},
                  {"failure", a.failure}};
  }
  j["message"] = last.message;
  std::ofstream os(dir / (run.name + "_summary.json"));
  os << j.dump(2) << "\n";
}

int cmd_plan(const std::string& scenario_file, CommonFlags f) {
  const std::string text = read_text(scenario_file);
  ScenarioConfig sc = parse_scenario(text, fs::path(scenario_file).filename().string(),
                                     fs::path(scenario_file).parent_path());
  apply_flags(sc, f);
  RunOutput run = run_scenario(sc.name, sc, f, ship_path(f, sc.ship_file), port_path(f, sc.port_file), text);
  if (f.trace) {
    fs::create_directories(f.out);
    std::ofstream os(fs::path(f.out) / (run.name + "_trace.jsonl"));
    write_trace(os, run.outcome.trace);
  }
  write_artifacts(run, f.out);
  const AttemptResult& last = run.outcome.attempts.back();
  std::cout << run.name << ": " << to_string(last.status) << ", tf " << last.tf << " s, " << last.iterations
            << " iterations, violation " << last.max_violation
            << (run.audit_report && run.audit_report->passed ? ", audit passed" : ", audit failed") << "\n";
  return run.outcome.feasible_attempt >= 0 ? kOk : kInfeasible;
}

int cmd_cases(CommonFlags f) {
  struct Job {
    int id;
    bool speed;
  };
  std::vector<Job> jobs;
  for (int id = 1; id <= kCaseCount; ++id) {
    jobs.push_back({id, true});
    jobs.push_back({id, false});
  }
  const fs::path ship_file = ship_path(f, {});
  const fs::path port_file = port_path(f, {});
  // Fail fast on broken inputs before the batch starts.
  load_ship(ship_file);
  load_port(port_file);

  std::vector<std::optional<RunOutput>> runs(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        ScenarioConfig sc = scenario_for_case(jobs[i].id);
        apply_flags(sc, f);
        sc.speed_constraint = jobs[i].speed;
        const std::string name = sc.name + (jobs[i].speed ? "_speed" : "_free");
        runs[i] = run_scenario(name, sc, f, ship_file, port_file, sc.name);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, f.threads); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(f.out);
  std::ofstream summary(fs::path(f.out) / "cases_summary.csv");
  summary << "case,speed_constraint,status,feasible,tf,iterations,max_violation,worst_corridor,wall_time\n";
  bool constrained_ok = true;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& j = jobs[i];
    if (!runs[i]) {
      summary << j.id << ',' << j.speed << ",error,0,,,,,\n";
      std::cerr << "case " << j.id << (j.speed ? " (speed)" : " (free)") << ": " << errors[i] << "\n";
      if (j.speed) constrained_ok = false;
      continue;
    }
    const RunOutput& r = *runs[i];
    // The unconstrained run is overlaid in the constrained run's plot.
    std::vector<PlotSeries> extra;
    if (j.speed && i + 1 < jobs.size() && runs[i + 1]) {
      extra.push_back({"without speed reduction", "#d1301f", runs[i + 1]->outcome.x});
    }
    write_artifacts(r, f.out, extra);

    // Corridor residual measured even when the rows were not enforced.
    OcpSpec probe = r.spec;
    probe.speed_constraint = true;
    const AuditReport corridor = audit(r.outcome.x, probe);
    const AttemptResult& last = r.outcome.attempts.back();
    double wall = 0.0;
    for (const auto& a : r.outcome.attempts) wall += a.wall_time;
    const bool feasible = r.outcome.feasible_attempt >= 0;
    if (j.speed && !feasible) constrained_ok = false;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%d,%s,%d,%.9g,%d,%.9g,%.9g,%.9g\n", j.id, j.speed ? 1 : 0,
                  to_string(last.status), feasible ? 1 : 0, last.tf, last.iterations, last.max_violation,
                  corridor.worst_corridor, wall);
    summary << buf;
    std::cout << "case " << j.id << (j.speed ? " with speed reduction   " : " without speed reduction")
              << ": " << to_string(last.status) << ", tf " << last.tf << " s, corridor "
              << corridor.worst_corridor << "\n";
  }
  return constrained_ok ? kOk : kInfeasible;
}

int cmd_feasibility(const std::string& study_file, CommonFlags f, std::optional<int> n_cases,
                    std::optional<std::uint64_t> seed) {
  StudyConfig st = load_study(study_file);
  if (n_cases) st.n_cases = *n_cases;
  if (seed) st.seed = *seed;
  if (f.segments) st.segments = *f.segments;
  if (f.no_speed) st.speed_constraint = false;
  if (!f.collision.empty()) st.collision = parse_collision_mode(f.collision);
  if (f.threads > 1) st.threads = f.threads;

  ScenarioConfig templ_sc = scenario_for_case(6);
  const ShipParams ship = load_ship(ship_path(f, st.ship_file));
  const PortConfig port = load_port(port_path(f, st.port_file));
  const OcpSpec templ = make_spec(templ_sc, ship, port);
  const FeasibilityReport rep = run_feasibility_study(st, templ);

  fs::create_directories(f.out);
  {
    std::ofstream os(fs::path(f.out) / "feasibility_report.json");
    write_report(os, rep);
  }
  {
    std::ofstream os(fs::path(f.out) / "feasibility_cases.csv");
    write_case_table(os, rep);
  }
  {
    std::ofstream os(fs::path(f.out) / "feasibility_timing.csv");
    write_timing_table(os, rep);
  }
  std::cout << "cumulative feasibility by attempt\n";
  for (std::size_t a = 0; a < rep.cumulative_rate.size(); ++a) {
    const double r = rep.cumulative_rate[a];
    std::cout << "  attempt " << a << "  " << std::string(static_cast<std::size_t>(r * 40 + 0.5), '#')
              << std::string(40 - static_cast<std::size_t>(r * 40 + 0.5), '.') << "  " << r * 100.0 << "%\n";
  }
  return kOk;
}

int cmd_validate(const std::vector<std::string>& files) {
  int worst = kOk;
  for (const std::string& file : files) {
    try {
      const std::string text = read_text(file);
      const std::string src = fs::path(file).filename().string();
      const fs::path base = fs::path(file).parent_path();
      const ConfigKind kind = detect_kind(text, src);
      switch (kind) {
        case ConfigKind::Ship: parse_ship(text, src); break;
        case ConfigKind::Port: parse_port(text, src); break;
        case ConfigKind::Scenario: {
          const ScenarioConfig sc = parse_scenario(text, src, base);
          load_spec(sc).validate();
          break;
        }
        case ConfigKind::Study: parse_study(text, src, base); break;
      }
      std::cout << "ok      " << file << " (" << to_string(kind) << ")\n";
    } catch (const ParseError& e) {
      std::cout << "error   " << e.what() << "\n";
      worst = worst == kOk ? kParse : std::min(worst, int(kParse));
    } catch (const std::invalid_argument& e) {
      std::cout << "invalid " << e.what() << "\n";
      if (worst == kOk) worst = kInvalid;
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-final-time berthing planner"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string scenario_file;
  CLI::App* plan = app.add_subcommand("plan", "plan one scenario");
  plan->add_option("scenario", scenario_file, "scenario file")->required();
  add_common(plan, flags);
  plan->add_option("--objective", flags.objective, "product or sum")->check(CLI::IsMember({"product", "sum"}));
  plan->add_option("--attempts", flags.attempts, "solves including recomputations")->check(CLI::Range(1, 4));
  plan->add_option("--max-iterations", flags.max_iterations, "SQP iteration cap")->check(CLI::PositiveNumber);

  CLI::App* cases = app.add_subcommand("cases", "run cases 1-6 with and without speed reduction");
  add_common(cases, flags);
  cases->add_option("--objective", flags.objective, "product or sum")->check(CLI::IsMember({"product", "sum"}));
  cases->add_option("--attempts", flags.attempts, "solves including recomputations")->check(CLI::Range(1, 4));
  cases->add_option("--max-iterations", flags.max_iterations, "SQP iteration cap")->check(CLI::PositiveNumber);
  cases->add_option("--threads", flags.threads, "parallel runs")->check(CLI::Range(1, 64));

  std::string study_file;
  std::optional<int> n_cases;
  std::optional<std::uint64_t> study_seed;
  CLI::App* feas = app.add_subcommand("feasibility", "run the stochastic feasibility study");
  feas->add_option("study", study_file, "study file")->required();
  feas->add_option("--ship", flags.ship, "ship parameter file");
  feas->add_option("--port", flags.port, "port geometry file");
  feas->add_option("--segments", flags.segments, "shooting segments")->check(CLI::Range(2, 1000));
  feas->add_option("--seed", study_seed, "override the study seed");
  feas->add_option("--cases", n_cases, "override the number of cases")->check(CLI::PositiveNumber);
  feas->add_flag("--no-speed-constraint", flags.no_speed, "drop the speed corridor rows");
  feas->add_option("--collision-mode", flags.collision, "winding, smooth or off")
      ->check(CLI::IsMember({"winding", "smooth", "off"}));
  feas->add_option("--threads", flags.threads, "parallel cases")->check(CLI::Range(1, 64));
  feas->add_option("--out", flags.out, "output directory");

  std::vector<std::string> files;
  CLI::App* val = app.add_subcommand("validate", "check ship, port, scenario and study files");
  val->add_option("files", files, "files to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    if (*plan) return cmd_plan(scenario_file, flags);
    if (*cases) return cmd_cases(flags);
    if (*feas) return cmd_feasibility(study_file, flags, n_cases, study_seed);
    if (*val) return cmd_validate(files);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kInvalid;
  } catch (const InvalidPolygon& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kInvalid;
  } catch (const GeneratorExhausted& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
