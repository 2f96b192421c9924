#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>

#include "json.hpp"

#include "berth/solver.hpp"

namespace berth {

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::FeasibleOptimal: return "feasible-optimal";
    case SolverStatus::FeasibleStalled: return "feasible-stalled";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::MaxIterations: return "max-iterations";
  }
  return "?";
}

void SolverOptions::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(tol_con > 0.0 && tol_opt > 0.0 && tol_step > 0.0)) {
    throw std::invalid_argument("solver tolerances must be > 0");
  }
  if (fd_step < 0.0) throw std::invalid_argument("fd_step must be >= 0");
  if (!(armijo > 0.0 && armijo < 0.5)) throw std::invalid_argument("armijo must be in (0, 0.5)");
  if (max_backtracks < 1 || qp_max_iterations < 1 || stall_iterations < 1) {
    throw std::invalid_argument("solver iteration caps must be >= 1");
  }
}

void write_trace(std::ostream& os, const std::vector<TraceRecord>& trace) {
  for (const TraceRecord& r : trace) {
    nlohmann::json j = {{"iteration", r.iteration}, {"objective", r.objective},
                        {"violation", r.violation}, {"kkt", r.kkt},
                        {"merit", r.merit},         {"step_norm", r.step_norm},
                        {"alpha", r.alpha},         {"qp_slack", r.qp_slack},
                        {"qp_iterations", r.qp_iterations}};
    os << j.dump() << '\n';
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class NonFinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double default_step(FdScheme s) {
  return s == FdScheme::Forward ? std::sqrt(std::numeric_limits<double>::epsilon())
                                : std::cbrt(std::numeric_limits<double>::epsilon());
}

struct Evaluation {
  double f = 0.0;
  VectorXd ceq;
  VectorXd cin;
};

Evaluation evaluate(const NlpProblem& nlp, const VectorXd& x) {
  Evaluation e;
  e.f = nlp.objective(x);
  e.ceq = nlp.m_eq > 0 ? nlp.equalities(x) : VectorXd();
  e.cin = nlp.m_in > 0 ? nlp.inequalities(x) : VectorXd();
  if (e.ceq.size() != nlp.m_eq || e.cin.size() != nlp.m_in) {
    throw std::logic_error("nlp evaluator returned a vector of the wrong size");
  }
  return e;
}

std::string first_nonfinite(const NlpProblem& nlp, const Evaluation& e) {
  if (!std::isfinite(e.f)) return "objective";
  for (int i = 0; i < e.ceq.size(); ++i) {
    if (!std::isfinite(e.ceq[i])) return "equality " + NlpProblem::describe_row(nlp.eq_groups, i);
  }
  for (int i = 0; i < e.cin.size(); ++i) {
    if (!std::isfinite(e.cin[i])) return "inequality " + NlpProblem::describe_row(nlp.in_groups, i);
  }
  return {};
}

double violation_of(const NlpProblem& nlp, const Evaluation& e, const VectorXd& x) {
  double v = 0.0;
  if (e.ceq.size()) v = std::max(v, e.ceq.cwiseAbs().maxCoeff());
  if (e.cin.size()) v = std::max(v, (-e.cin).cwiseMax(0.0).maxCoeff());
  v = std::max(v, (nlp.lower - x).cwiseMax(0.0).maxCoeff());
  v = std::max(v, (x - nlp.upper).cwiseMax(0.0).maxCoeff());
  return v;
}

// Step for variable i that keeps x + h inside the bounds where possible.
double signed_step(const NlpProblem& nlp, const VectorXd& x, int i, double rel) {
  const double h = rel * (1.0 + std::abs(x[i]));
  if (x[i] + h > nlp.upper[i] && x[i] - h >= nlp.lower[i]) return -h;
  return h;
}

struct Derivatives {
  VectorXd grad;
  MatrixXd jeq;
  MatrixXd jin;
};

Derivatives differentiate(const NlpProblem& nlp, const VectorXd& x, const Evaluation& base,
                          const SolverOptions& opt) {
  const double rel = opt.fd_step > 0.0 ? opt.fd_step : default_step(opt.fd_scheme);
  const bool central = opt.fd_scheme == FdScheme::Central;
  const bool need_jac = !nlp.jacobian;
  Derivatives d;
  d.grad.resize(nlp.n);
  if (need_jac) {
    d.jeq.resize(nlp.m_eq, nlp.n);
    d.jin.resize(nlp.m_in, nlp.n);
  }
  const bool need_grad = !nlp.gradient;
  VectorXd xp = x;
  for (int i = 0; i < nlp.n && (need_grad || need_jac); ++i) {
    if (central) {
      const double h = rel * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      const double fp = need_grad ? nlp.objective(xp) : 0.0;
      VectorXd ep, ip;
      if (need_jac) {
        ep = nlp.m_eq ? nlp.equalities(xp) : VectorXd();
        ip = nlp.m_in ? nlp.inequalities(xp) : VectorXd();
      }
      xp[i] = x[i] - h;
      if (need_grad) d.grad[i] = (fp - nlp.objective(xp)) / (2.0 * h);
      if (need_jac) {
        if (nlp.m_eq) d.jeq.col(i) = (ep - nlp.equalities(xp)) / (2.0 * h);
        if (nlp.m_in) d.jin.col(i) = (ip - nlp.inequalities(xp)) / (2.0 * h);
      }
    } else {
      const double h = signed_step(nlp, x, i, rel);
      xp[i] = x[i] + h;
      if (need_grad) d.grad[i] = (nlp.objective(xp) - base.f) / h;
      if (need_jac) {
        if (nlp.m_eq) d.jeq.col(i) = (nlp.equalities(xp) - base.ceq) / h;
        if (nlp.m_in) d.jin.col(i) = (nlp.inequalities(xp) - base.cin) / h;
      }
    }
    xp[i] = x[i];
  }
  if (!need_jac) nlp.jacobian(x, d.jeq, d.jin);
  if (!need_grad) d.grad = nlp.gradient(x);
  if (!d.grad.allFinite() || !d.jeq.allFinite() || !d.jin.allFinite()) {
    throw NonFinite("non-finite derivative");
  }
  return d;
}

double kkt_from(const NlpProblem& nlp, const VectorXd& x, const Evaluation& e, const Derivatives& d,
                const Multipliers& m) {
  VectorXd stat = d.grad;
  if (nlp.m_eq) stat -= d.jeq.transpose() * m.eq;
  if (nlp.m_in) stat -= d.jin.transpose() * m.in;
  if (m.lower.size()) stat -= m.lower;
  if (m.upper.size()) stat += m.upper;
  double r = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  if (nlp.m_in && m.in.size()) r = std::max(r, (m.in.array() * e.cin.array()).abs().maxCoeff());
  if (m.lower.size()) {
    for (int i = 0; i < nlp.n; ++i) {
      if (std::isfinite(nlp.lower[i])) r = std::max(r, std::abs(m.lower[i] * (x[i] - nlp.lower[i])));
      if (std::isfinite(nlp.upper[i])) r = std::max(r, std::abs(m.upper[i] * (nlp.upper[i] - x[i])));
    }
  }
  return std::max(r, violation_of(nlp, e, x));
}

// The problem seen in scaled variables z = x / s and with a scaled objective.
NlpProblem scaled_problem(const NlpProblem& nlp, const VectorXd& s, double fscale) {
  NlpProblem p = nlp;
  p.objective = [f = nlp.objective, s, fscale](const VectorXd& z) {
    return fscale * f(z.cwiseProduct(s));
  };
  if (nlp.gradient) {
    p.gradient = [g = nlp.gradient, s, fscale](const VectorXd& z) -> VectorXd {
      return fscale * g(z.cwiseProduct(s)).cwiseProduct(s);
    };
  }
  if (nlp.equalities) {
    p.equalities = [c = nlp.equalities, s](const VectorXd& z) { return c(z.cwiseProduct(s)); };
  }
  if (nlp.inequalities) {
    p.inequalities = [c = nlp.inequalities, s](const VectorXd& z) { return c(z.cwiseProduct(s)); };
  }
  if (nlp.jacobian) {
    p.jacobian = [j = nlp.jacobian, s](const VectorXd& z, MatrixXd& je, MatrixXd& ji) {
      j(z.cwiseProduct(s), je, ji);
      if (je.size()) je = je * s.asDiagonal();
      if (ji.size()) ji = ji * s.asDiagonal();
    };
  }
  p.lower = nlp.lower.cwiseQuotient(s);
  p.upper = nlp.upper.cwiseQuotient(s);
  p.x_scale = VectorXd::Ones(nlp.n);
  return p;
}

Multipliers from_qp(const QpResult& q) { return {q.eq, q.in, q.lower_bound, q.upper_bound}; }

Multipliers zero_multipliers(const NlpProblem& nlp) {
  return {VectorXd::Zero(nlp.m_eq), VectorXd::Zero(nlp.m_in), VectorXd::Zero(nlp.n),
          VectorXd::Zero(nlp.n)};
}

struct Penalty {
  VectorXd eq;
  VectorXd in;

  double infeasibility(const Evaluation& e) const {
    double v = 0.0;
    if (e.ceq.size()) v += eq.dot(e.ceq.cwiseAbs());
    if (e.cin.size()) v += in.dot((-e.cin).cwiseMax(0.0));
    return v;
  }
  double merit(const Evaluation& e) const { return e.f + infeasibility(e); }
};

}  // namespace

double max_violation(const NlpProblem& nlp, const VectorXd& x) {
  return violation_of(nlp, evaluate(nlp, x), x);
}

double kkt_residual(const NlpProblem& nlp, const VectorXd& x, const Multipliers& m) {
  const Evaluation e = evaluate(nlp, x);
  const Derivatives d = differentiate(nlp, x, e, SolverOptions{});
  return kkt_from(nlp, x, e, d, m);
}

SolverResult solve(const NlpProblem& nlp_in, const VectorXd& x_init, const SolverOptions& opt) {
  opt.validate();
  nlp_in.check();
  if (x_init.size() != nlp_in.n) throw std::invalid_argument("solve: x_init has wrong dimension");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const VectorXd s = nlp_in.x_scale.size() ? nlp_in.x_scale : VectorXd::Ones(nlp_in.n);
  SolverResult res;
  res.multipliers = zero_multipliers(nlp_in);

  VectorXd x0 = x_init.cwiseMax(nlp_in.lower).cwiseMin(nlp_in.upper);
  if (x0 != x_init) res.message = "initial point clamped into bounds; ";

  // Objective scaling from the initial gradient.
  double fscale = 1.0;
  NlpProblem nlp = scaled_problem(nlp_in, s, 1.0);
  VectorXd z = x0.cwiseQuotient(s);
  Evaluation e;
  Derivatives d;
  try {
    e = evaluate(nlp, z);
    if (const std::string bad = first_nonfinite(nlp, e); !bad.empty()) {
      throw NonFinite("non-finite value in " + bad + " at the initial point");
    }
    d = differentiate(nlp, z, e, opt);
    const double gmax = d.grad.cwiseAbs().maxCoeff();
    if (gmax > 1.0) {
      fscale = 1.0 / gmax;
      nlp = scaled_problem(nlp_in, s, fscale);
      e.f *= fscale;
      d.grad *= fscale;
    }
  } catch (const std::exception& ex) {
    res.status = SolverStatus::Infeasible;
    res.x = x0;
    res.message += ex.what();
    res.wall_time = elapsed();
    return res;
  }

  const int n = nlp.n;
  MatrixXd B = MatrixXd::Identity(n, n);
  Penalty pen{VectorXd::Constant(nlp.m_eq, opt.penalty_floor), VectorXd::Constant(nlp.m_in, opt.penalty_floor)};
  Multipliers lam = zero_multipliers(nlp);
  double viol = violation_of(nlp, e, z);
  double kkt = kkt_from(nlp, z, e, d, lam);
  int stall = 0;
  double last_f = e.f;

  auto finish = [&](SolverStatus st, const std::string& msg) {
    res.status = st;
    res.x = z.cwiseProduct(s);
    res.objective = e.f / fscale;
    res.max_violation = viol;
    res.kkt = kkt;
    res.multipliers = lam;
    res.multipliers.eq /= fscale;
    res.multipliers.in /= fscale;
    res.multipliers.lower = lam.lower.cwiseQuotient(s) / fscale;
    res.multipliers.upper = lam.upper.cwiseQuotient(s) / fscale;
    res.message += msg;
    res.wall_time = elapsed();
    return res;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    // QP subproblem.
    QpProblem qp;
    qp.H = B;
    qp.g = d.grad;
    qp.A_eq = d.jeq;
    qp.b_eq = -e.ceq;
    qp.A_in = d.jin;
    qp.b_in = -e.cin;
    qp.lower = nlp.lower - z;
    qp.upper = nlp.upper - z;
    QpResult q = qp_subproblem(qp, opt.qp_max_iterations);
    if (q.status == QpStatus::Infeasible || q.status == QpStatus::IterationLimit) {
      return finish(viol <= opt.tol_con ? SolverStatus::FeasibleStalled : SolverStatus::Infeasible,
                    std::string("qp subproblem failed: ") + to_string(q.status));
    }
    const VectorXd& step = q.d;
    const double step_norm = step.cwiseAbs().maxCoeff();

    // Elastic multipliers belong to the relaxed subproblem and scale with the
    // elastic weight; keep the previous estimates instead.
    const bool elastic = q.status == QpStatus::Elastic;
    const Multipliers lam_new = elastic ? lam : from_qp(q);

    // Penalty update (Powell).
    for (int i = 0; i < nlp.m_eq; ++i) {
      const double a = std::abs(lam_new.eq[i]);
      pen.eq[i] = std::max({a, 0.5 * (pen.eq[i] + a), opt.penalty_floor});
    }
    for (int i = 0; i < nlp.m_in; ++i) {
      const double a = std::abs(lam_new.in[i]);
      pen.in[i] = std::max({a, 0.5 * (pen.in[i] + a), opt.penalty_floor});
    }

    const double phi0 = pen.merit(e);
    double slope = d.grad.dot(step) - (1.0 - q.slack) * pen.infeasibility(e);
    if (slope >= 0.0) slope = -step.dot(B * step);

    // Backtracking line search on the l1 merit function, with one
    // second-order correction when the full step is rejected.
    double alpha = 1.0;
    bool accepted = false;
    Evaluation en;
    VectorXd zn;
    auto try_point = [&](const VectorXd& cand, double a) {
      try {
        Evaluation ec = evaluate(nlp, cand);
        if (first_nonfinite(nlp, ec).empty() && pen.merit(ec) <= phi0 + opt.armijo * a * slope) {
          en = std::move(ec);
          zn = cand;
          return true;
        }
      } catch (const std::exception&) {
        // Trial point outside the model's domain.
      }
      return false;
    };
    VectorXd full = (z + step).cwiseMax(nlp.lower).cwiseMin(nlp.upper);
    accepted = try_point(full, 1.0);
    if (!accepted && !elastic) {
      try {
        const Evaluation ef = evaluate(nlp, full);
        if (first_nonfinite(nlp, ef).empty()) {
          QpProblem soc = qp;
          if (nlp.m_eq) soc.b_eq = -(ef.ceq - d.jeq * step);
          if (nlp.m_in) soc.b_in = -(ef.cin - d.jin * step);
          const QpResult qs = qp_solve_strict(soc, opt.qp_max_iterations);
          if (qs.status == QpStatus::Optimal) {
            accepted = try_point((z + qs.d).cwiseMax(nlp.lower).cwiseMin(nlp.upper), 1.0);
          }
        }
      } catch (const std::exception&) {
      }
    }
    for (int bt = 1; !accepted && bt < opt.max_backtracks; ++bt) {
      alpha *= 0.5;
      accepted = try_point((z + alpha * step).cwiseMax(nlp.lower).cwiseMin(nlp.upper), alpha);
    }
    if (!accepted || alpha * step_norm <= opt.tol_step) {
      if (opt.record_trace) {
        res.trace.push_back({it, e.f / fscale, viol, kkt, phi0, step_norm, accepted ? alpha : 0.0, q.slack,
                             q.iterations});
      }
      if (viol <= opt.tol_con) {
        return finish(kkt <= opt.tol_opt ? SolverStatus::FeasibleOptimal : SolverStatus::FeasibleStalled,
                      accepted ? "step below tolerance" : "line search failed");
      }
      return finish(SolverStatus::Infeasible, accepted ? "step below tolerance while infeasible"
                                                       : "line search failed while infeasible");
    }

    // New point and derivatives.
    Derivatives dn;
    try {
      dn = differentiate(nlp, zn, en, opt);
    } catch (const std::exception& ex) {
      return finish(SolverStatus::Infeasible, ex.what());
    }
    // Damped BFGS on the Lagrangian gradient difference.
    auto lag_grad = [&](const Derivatives& dd) {
      VectorXd g = dd.grad;
      if (nlp.m_eq) g -= dd.jeq.transpose() * lam_new.eq;
      if (nlp.m_in) g -= dd.jin.transpose() * lam_new.in;
      return g;
    };
    const VectorXd sk = zn - z;
    VectorXd yk = lag_grad(dn) - lag_grad(d);
    const VectorXd Bs = B * sk;
    const double sBs = sk.dot(Bs);
    if (sBs > 1e-16) {
      double sy = sk.dot(yk);
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        yk = theta * yk + (1.0 - theta) * Bs;
        sy = sk.dot(yk);
      }
      B += (yk * yk.transpose()) / sy - (Bs * Bs.transpose()) / sBs;
      B = 0.5 * (B + B.transpose());
      if (Eigen::LLT<MatrixXd>(B).info() != Eigen::Success) B.setIdentity();
    }

    z = zn;
    e = en;
    d = std::move(dn);
    lam = lam_new;
    viol = violation_of(nlp, e, z);
    kkt = kkt_from(nlp, z, e, d, lam);
    if (opt.record_trace) {
      res.trace.push_back({it + 1, e.f / fscale, viol, kkt, pen.merit(e), step_norm, alpha, q.slack,
                           q.iterations});
    }
    res.iterations = it + 1;

    if (viol <= opt.tol_con && kkt <= opt.tol_opt) return finish(SolverStatus::FeasibleOptimal, "converged");
    if (viol <= opt.tol_con && std::abs(e.f - last_f) <= opt.tol_opt * (1.0 + std::abs(e.f))) {
      if (++stall >= opt.stall_iterations) {
        return finish(SolverStatus::FeasibleStalled, "objective stalled at a feasible point");
      }
    } else {
      stall = 0;
    }
    last_f = e.f;
  }
  return finish(SolverStatus::MaxIterations, "iteration limit reached");
}

}  // namespace berth
