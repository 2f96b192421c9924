// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "berth/scenarios.hpp"
#include "oracles.hpp"

using namespace berth;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

OcpSpec case_spec(int id, bool speed = true) {
  ScenarioConfig s = scenario_for_case(id);
  s.speed_constraint = speed;
  return load_spec(s);
}

Verdict corridor_formula() {
  const SpeedLimitCoefficients c;
  const ShipParams p;
  const double up = c.upper(10.0), lo = c.lower(10.0);
  const SpeedLimits dim = speed_limits(10.0 * p.L, p, c);
  const bool ok = std::abs(up - 0.07100) <= 1e-5 && std::abs(lo - 0.03161) <= 1e-5 &&
                  std::abs(dim.max - p.u_nominal * up) <= 1e-15 && std::abs(dim.min - p.u_nominal * lo) <= 1e-15;
  return {ok, "u_max(10) = " + fmt("%.6f", up) + ", u_min(10) = " + fmt("%.6f", lo)};
}

Verdict point_in_polygon() {
  const PortConfig port = load_port(data_dir() / "port_inukai.json");
  const auto t0 = std::chrono::steady_clock::now();
  const oracle::Agreement a = oracle::winding_vs_crossing(port.polygon, 10200, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {a.compared >= 10000 && a.agree == a.compared && secs < 1.0,
          std::to_string(a.agree) + "/" + std::to_string(a.compared) + " agree in " + fmt("%.3f", secs) + " s"};
}

Verdict rk4_order() {
  const double slope = oracle::rk4_fitted_order(ShipParams{});
  return {slope >= 3.7, "fitted slope " + fmt("%.3f", slope)};
}

Verdict zero_defect_witness() {
  const OcpSpec spec = case_spec(1);
  std::mt19937_64 rng(4);
  const VectorXd X = forward_simulated_vector(spec, 150.0, oracle::random_controls(spec, rng, 0.5));
  const double defect = defect_constraints(X, spec).cwiseAbs().maxCoeff();
  const double ref = oracle::trapezoid_objective(X, spec);
  const double rel = std::abs(objective(X, spec) - ref) / std::abs(ref);
  return {defect <= 1e-10 && rel <= 1e-12,
          "max defect " + fmt("%.2e", defect) + ", objective rel. error " + fmt("%.2e", rel)};
}

NlpProblem unbounded(int n) {
  NlpProblem p;
  p.n = n;
  p.lower = VectorXd::Constant(n, -HUGE_VAL);
  p.upper = VectorXd::Constant(n, HUGE_VAL);
  p.x_scale = VectorXd::Ones(n);
  p.equalities = [](const VectorXd&) { return VectorXd(); };
  p.inequalities = [](const VectorXd&) { return VectorXd(); };
  return p;
}

Verdict solver_suite() {
  // Differenced derivatives throughout; no analytic gradients.
  SolverOptions opt;
  opt.fd_scheme = FdScheme::Central;
  opt.tol_opt = 1e-9;
  opt.max_iterations = 500;

  NlpProblem bound = unbounded(1);
  bound.lower[0] = 1.0;
  bound.objective = [](const VectorXd& x) { return x[0] * x[0]; };
  const double e1 = std::abs(solve(bound, VectorXd{{3.0}}, opt).x[0] - 1.0);

  NlpProblem proj = unbounded(2);
  proj.m_eq = 1;
  proj.objective = [](const VectorXd& x) { return std::pow(x[0] - 2, 2) + std::pow(x[1] - 3, 2); };
  proj.equalities = [](const VectorXd& x) { return VectorXd{{x[0] + x[1] - 1}}; };
  proj.eq_groups = {{"line", 0, 1}};
  const VectorXd xp = solve(proj, VectorXd{{5.0, -2.0}}, opt).x;
  const double e2 = std::max(std::abs(xp[0]), std::abs(xp[1] - 1.0));

  NlpProblem rosen = unbounded(2);
  rosen.m_in = 1;
  rosen.objective = [](const VectorXd& x) { return std::pow(1 - x[0], 2) + 100 * std::pow(x[1] - x[0] * x[0], 2); };
  rosen.inequalities = [](const VectorXd& x) { return VectorXd{{2 - x.squaredNorm()}}; };
  rosen.in_groups = {{"disc", 0, 1}};
  const VectorXd xr = solve(rosen, VectorXd{{-1.2, 1.0}}, opt).x;
  const double e3 = std::max(std::abs(xr[0] - 1.0), std::abs(xr[1] - 1.0));

  std::mt19937_64 rng(20240601);
  double qp_err = 0.0;
  int qp_ok = 0;
  for (int i = 0; i < 100; ++i) {
    const QpProblem qp = oracle::random_qp(rng);
    const oracle::QpOracle o = oracle::enumerate_active_sets(qp);
    const QpResult r = qp_subproblem(qp);
    if (!o.found || r.status != QpStatus::Optimal) continue;
    qp_err = std::max(qp_err, (r.d - o.x).cwiseAbs().maxCoeff());
    ++qp_ok;
  }
  const bool ok = e1 <= 1e-5 && e2 <= 1e-5 && e3 <= 1e-5 && qp_ok == 100 && qp_err <= 1e-8;
  return {ok, "bound " + fmt("%.1e", e1) + ", projection " + fmt("%.1e", e2) + ", rosenbrock " + fmt("%.1e", e3) +
                  ", QP " + std::to_string(qp_ok) + "/100 max err " + fmt("%.1e", qp_err)};
}

Verdict case1_end_to_end() {
  const OcpSpec spec = case_spec(1);
  RecomputationPolicy policy;
  policy.seed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const RecomputationOutcome out = run_with_recomputation(spec, policy);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  AuditTolerances tol;
  tol.terminal = policy.solver.tol_con;
  const AuditReport rep = audit(out.x, spec, tol);
  const bool ok = out.feasible_attempt >= 0 && rep.passed && rep.terminal_error <= policy.solver.tol_con &&
                  rep.worst_corridor >= -1e-6 && rep.outside_vertices == 0 && rep.control_violations == 0 &&
                  secs < 600.0;
  std::string detail = "tf " + fmt("%.1f", out.x[0]) + " s, attempt " + std::to_string(out.feasible_attempt) +
                       ", terminal err " + fmt("%.1e", rep.terminal_error) + ", worst corridor " +
                       fmt("%.1e", rep.worst_corridor) + ", " + fmt("%.1f", secs) + " s";
  if (!rep.passed) detail += ", audit: " + rep.failure;
  return {ok, detail};
}

Verdict speed_reduction_effect() {
  std::vector<int> contrast;
  std::string notes;
  for (int id = 1; id <= kCaseCount; ++id) {
    RecomputationPolicy policy;
    policy.seed = 1;
    const OcpSpec with = case_spec(id, true);
    const OcpSpec without = case_spec(id, false);
    const RecomputationOutcome a = run_with_recomputation(with, policy);
    const RecomputationOutcome b = run_with_recomputation(without, policy);
    const AuditReport ra = audit(a.x, with);
    const bool constrained_ok = a.feasible_attempt >= 0 && ra.passed && ra.worst_corridor >= -1e-6;

    // Upper-corridor excess of the free run at knots within 10 ship lengths.
    const Trajectory t = unpack(b.x, without);
    double excess = 0.0;
    for (int k = 0; k < without.segments; ++k) {
      const State& s = t.states[k];
      const double D = std::hypot(s.x0 - without.berth.x, s.y0 - without.berth.y);
      if (D > 10.0 * without.ship.L) continue;
      excess = std::max(excess, s.u - speed_limits(D, without.ship, without.coeffs).max);
    }
    const bool free_feasible = b.feasible_attempt >= 0;
    if (constrained_ok && free_feasible && excess > 1e-6) contrast.push_back(id);
    notes += (notes.empty() ? "" : "; ") + std::string("case ") + std::to_string(id) + " excess " +
             fmt("%.3f", excess) + (constrained_ok ? "" : " (constrained run failed)");
  }
  std::string ids;
  for (int id : contrast) ids += (ids.empty() ? "" : ",") + std::to_string(id);
  return {!contrast.empty(), "contrast in cases {" + ids + "}: " + notes};
}

Verdict feasibility_study(int n_cases, int threads) {
  StudyConfig study = load_study(data_dir() / "study.json");
  study.n_cases = n_cases;
  study.attempts = 4;
  const OcpSpec templ = case_spec(1);
  const auto t0 = std::chrono::steady_clock::now();
  study.threads = threads;
  const FeasibilityReport first = run_feasibility_study(study, templ);
  study.threads = 1;
  const FeasibilityReport second = run_feasibility_study(study, templ);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream a, b;
  write_report(a, first);
  write_report(b, second);
  int admissible = 0;
  bool capped = true;
  for (const CaseRecord& c : first.cases) {
    admissible += oracle::admissible(c.random_case.draw.x0, templ) ? 1 : 0;
    capped = capped && c.attempts.size() >= 1 && c.attempts.size() <= 4;
  }
  bool monotone = true;
  std::string rates;
  for (std::size_t i = 0; i < first.cumulative_rate.size(); ++i) {
    if (i && first.cumulative_rate[i] < first.cumulative_rate[i - 1]) monotone = false;
    rates += (i ? " -> " : "") + fmt("%.0f%%", 100 * first.cumulative_rate[i]);
  }
  const bool same = a.str() == b.str();
  const bool ok = admissible == n_cases && monotone && same && capped && secs < 7200.0;
  return {ok, std::to_string(admissible) + "/" + std::to_string(n_cases) + " admissible, feasibility " + rates +
                  (same ? ", reports identical" : ", reports DIFFER") + ", " + fmt("%.0f", secs) + " s"};
}

Verdict dynamics_symmetry() {
  const ShipParams p;
  const double eq = oracle::equilibrium_error(1000, 7, p);
  const double mi = oracle::mirror_error(1000, 11, p);
  const double mt = oracle::mirror_trajectory_error(1000, 12, p, 10.0);
  const double ro = oracle::rotation_error(1000, 13, p);
  const double sp = oracle::speed_preservation_error(1000, 14);
  const bool ok = eq == 0.0 && mi <= 1e-12 && mt <= 1e-9 && ro <= 1e-11 && sp <= 1e-14;
  return {ok, "equilibrium " + fmt("%.1e", eq) + ", mirror " + fmt("%.1e", mi) + " (trajectory " +
                  fmt("%.1e", mt) + "), rotation " + fmt("%.1e", ro) + ", speed " + fmt("%.1e", sp)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  int n_cases = 20;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<int> only;
  app.add_option("--cases", n_cases, "random cases in the feasibility study")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "worker threads for the feasibility study")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"speed corridor formula", corridor_formula},
      {"point-in-polygon oracle", point_in_polygon},
      {"rk4 order", rk4_order},
      {"zero-defect witness", zero_defect_witness},
      {"solver unit suite", solver_suite},
      {"case 1 end to end", case1_end_to_end},
      {"speed reduction effect", speed_reduction_effect},
      {"feasibility study", [&] { return feasibility_study(n_cases, threads); }},
      {"dynamics symmetry", dynamics_symmetry},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += v.pass ? 0 : 1;
    std::printf("criterion %d %s  %s (%s) [%.2f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
