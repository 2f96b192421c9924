// Dual active-set QP (Goldfarb-Idnani) with an elastic fallback.
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "berth/solver.hpp"

namespace berth {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Elastic: return "elastic";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration-limit";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Constraint k in a unified index space: equalities, general inequalities,
// then one row per finite bound (sign * d_var >= sign * bound).
class ConstraintSet {
 public:
  explicit ConstraintSet(const QpProblem& qp) : qp_(qp) {
    me_ = static_cast<int>(qp.b_eq.size());
    mi_ = static_cast<int>(qp.b_in.size());
    for (int i = 0; i < qp.lower.size(); ++i) {
      if (std::isfinite(qp.lower[i])) bounds_.push_back({i, 1.0, qp.lower[i]});
    }
    for (int i = 0; i < qp.upper.size(); ++i) {
      if (std::isfinite(qp.upper[i])) bounds_.push_back({i, -1.0, -qp.upper[i]});
    }
  }

  int equalities() const { return me_; }
  int size() const { return me_ + mi_ + static_cast<int>(bounds_.size()); }

  // a_k' x - b_k
  double value(int k, const VectorXd& x) const {
    if (k < me_) return qp_.A_eq.row(k).dot(x) - qp_.b_eq[k];
    if (k < me_ + mi_) return qp_.A_in.row(k - me_).dot(x) - qp_.b_in[k - me_];
    const Bound& b = bounds_[k - me_ - mi_];
    return b.sign * x[b.var] - b.rhs;
  }

  double rhs(int k) const {
    if (k < me_) return qp_.b_eq[k];
    if (k < me_ + mi_) return qp_.b_in[k - me_];
    return bounds_[k - me_ - mi_].rhs;
  }

  // J' a_k
  void project(int k, const MatrixXd& J, VectorXd& d) const {
    if (k < me_) {
      d.noalias() = J.transpose() * qp_.A_eq.row(k).transpose();
    } else if (k < me_ + mi_) {
      d.noalias() = J.transpose() * qp_.A_in.row(k - me_).transpose();
    } else {
      const Bound& b = bounds_[k - me_ - mi_];
      d = b.sign * J.row(b.var).transpose();
    }
  }

  double dot_normal(int k, const VectorXd& z) const {
    if (k < me_) return qp_.A_eq.row(k).dot(z);
    if (k < me_ + mi_) return qp_.A_in.row(k - me_).dot(z);
    const Bound& b = bounds_[k - me_ - mi_];
    return b.sign * z[b.var];
  }

  // Maps multiplier of constraint k into the result.
  void store(int k, double u, QpResult& r) const {
    if (k < me_) {
      r.eq[k] = u;
    } else if (k < me_ + mi_) {
      r.in[k - me_] = u;
    } else {
      const Bound& b = bounds_[k - me_ - mi_];
      (b.sign > 0 ? r.lower_bound : r.upper_bound)[b.var] = u;
    }
  }

 private:
  struct Bound {
    int var;
    double sign;
    double rhs;
  };
  const QpProblem& qp_;
  int me_ = 0;
  int mi_ = 0;
  std::vector<Bound> bounds_;
};

void givens(double a, double b, double& c, double& s, double& h) {
  h = std::hypot(a, b);
  if (h == 0.0) {
    c = 1.0;
    s = 0.0;
  } else {
    c = a / h;
    s = b / h;
  }
}

class GoldfarbIdnani {
 public:
  GoldfarbIdnani(const QpProblem& qp, const ConstraintSet& cs, int max_iterations)
      : qp_(qp), cs_(cs), n_(static_cast<int>(qp.g.size())), max_iterations_(max_iterations) {}

  QpResult run() {
    QpResult res;
    res.eq = VectorXd::Zero(cs_.equalities());
    res.in = VectorXd::Zero(qp_.b_in.size());
    res.lower_bound = VectorXd::Zero(n_);
    res.upper_bound = VectorXd::Zero(n_);

    Eigen::LLT<MatrixXd> llt(qp_.H);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: H is not positive definite");
    // J = L^-T
    J_ = MatrixXd::Identity(n_, n_);
    llt.matrixU().solveInPlace(J_);
    R_ = MatrixXd::Zero(n_, n_);
    x_ = llt.solve(-qp_.g);
    active_.clear();
    u_.clear();
    r_norm_ = 1.0;

    VectorXd d(n_), z(n_), r;
    std::vector<char> is_active(static_cast<std::size_t>(cs_.size()), 0);

    for (int k = 0; k < cs_.equalities(); ++k) {
      directions(k, d, z, r);
      const double s = cs_.value(k, x_);
      const double za = cs_.dot_normal(k, z);
      if (std::abs(za) <= 1e3 * kEps * (1.0 + d.norm())) {
        // Dependent on the active set: fine if already satisfied.
        if (std::abs(s) <= feas_tol(k)) continue;
        res.status = QpStatus::Infeasible;
        return finish(res);
      }
      const double t = -s / za;
      x_ += t * z;
      for (std::size_t j = 0; j < active_.size(); ++j) u_[j] -= t * r[static_cast<Eigen::Index>(j)];
      if (!add_constraint(d)) {
        if (std::abs(cs_.value(k, x_)) <= feas_tol(k)) continue;
        res.status = QpStatus::Infeasible;
        return finish(res);
      }
      active_.push_back(k);
      u_.push_back(t);
      is_active[k] = 1;
    }

    int iter = 0;
    for (;; ++iter) {
      if (iter >= max_iterations_) {
        res.status = QpStatus::IterationLimit;
        res.iterations = iter;
        return finish(res);
      }
      int p = -1;
      double worst = 0.0;
      for (int k = cs_.equalities(); k < cs_.size(); ++k) {
        if (is_active[k]) continue;
        const double s = cs_.value(k, x_);
        if (s < -feas_tol(k) && s < worst) {
          worst = s;
          p = k;
        }
      }
      if (p < 0) break;

      double up = 0.0;
      double sp = worst;
      for (int inner = 0;; ++inner) {
        if (inner > 10 * n_ + 100) {
          res.status = QpStatus::IterationLimit;
          res.iterations = iter;
          return finish(res);
        }
        directions(p, d, z, r);
        double t1 = kInf;
        int drop = -1;
        for (std::size_t j = 0; j < active_.size(); ++j) {
          if (active_[j] < cs_.equalities()) continue;
          const double rj = r[static_cast<Eigen::Index>(j)];
          if (rj > 0.0) {
            const double t = u_[j] / rj;
            if (t < t1) {
              t1 = t;
              drop = static_cast<int>(j);
            }
          }
        }
        const double za = cs_.dot_normal(p, z);
        const double t2 = std::abs(za) > kEps * (1.0 + d.squaredNorm()) ? std::max(0.0, -sp / za) : kInf;
        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) {
          res.status = QpStatus::Infeasible;
          res.iterations = iter;
          return finish(res);
        }
        for (std::size_t j = 0; j < active_.size(); ++j) u_[j] -= t * r[static_cast<Eigen::Index>(j)];
        up += t;
        if (!std::isfinite(t2)) {
          is_active[active_[drop]] = 0;
          delete_constraint(drop);
          continue;
        }
        x_ += t * z;
        if (t2 <= t1) {
          if (!add_constraint(d)) {
            res.status = QpStatus::Infeasible;
            res.iterations = iter;
            return finish(res);
          }
          active_.push_back(p);
          u_.push_back(up);
          is_active[p] = 1;
          break;
        }
        is_active[active_[drop]] = 0;
        delete_constraint(drop);
        sp = cs_.value(p, x_);
      }
    }
    res.status = QpStatus::Optimal;
    res.iterations = iter;
    return finish(res);
  }

 private:
  double feas_tol(int k) const { return 1e-11 * (1.0 + std::abs(cs_.rhs(k))); }

  void directions(int k, VectorXd& d, VectorXd& z, VectorXd& r) const {
    const int iq = static_cast<int>(active_.size());
    cs_.project(k, J_, d);
    z.noalias() = J_.rightCols(n_ - iq) * d.tail(n_ - iq);
    r = R_.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  }

  bool add_constraint(VectorXd& d) {
    const int iq = static_cast<int>(active_.size());
    for (int j = n_ - 1; j > iq; --j) {
      double c, s, h;
      givens(d[j - 1], d[j], c, s, h);
      if (s == 0.0) continue;
      d[j - 1] = h;
      d[j] = 0.0;
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j - 1);
        const double b = J_(k, j);
        J_(k, j - 1) = c * a + s * b;
        J_(k, j) = -s * a + c * b;
      }
    }
    R_.col(iq).head(iq + 1) = d.head(iq + 1);
    r_norm_ = std::max(r_norm_, std::abs(d[iq]));
    return std::abs(d[iq]) > kEps * r_norm_ * 10.0;
  }

  void delete_constraint(int pos) {
    const int iq = static_cast<int>(active_.size());
    active_.erase(active_.begin() + pos);
    u_.erase(u_.begin() + pos);
    for (int j = pos; j < iq - 1; ++j) R_.col(j).head(iq) = R_.col(j + 1).head(iq);
    R_.col(iq - 1).setZero();
    for (int j = pos; j < iq - 1; ++j) {
      double c, s, h;
      givens(R_(j, j), R_(j + 1, j), c, s, h);
      if (s == 0.0) continue;
      for (int col = j; col < iq - 1; ++col) {
        const double a = R_(j, col);
        const double b = R_(j + 1, col);
        R_(j, col) = c * a + s * b;
        R_(j + 1, col) = -s * a + c * b;
      }
      R_(j + 1, j) = 0.0;
      for (int k = 0; k < n_; ++k) {
        const double a = J_(k, j);
        const double b = J_(k, j + 1);
        J_(k, j) = c * a + s * b;
        J_(k, j + 1) = -s * a + c * b;
      }
    }
  }

  QpResult& finish(QpResult& res) const {
    res.d = x_;
    for (std::size_t j = 0; j < active_.size(); ++j) cs_.store(active_[j], u_[j], res);
    return res;
  }

  const QpProblem& qp_;
  const ConstraintSet& cs_;
  int n_;
  int max_iterations_;
  MatrixXd J_;
  MatrixXd R_;
  VectorXd x_;
  std::vector<int> active_;
  std::vector<double> u_;
  double r_norm_ = 1.0;
};

void check_dimensions(const QpProblem& qp) {
  const auto n = qp.g.size();
  if (qp.H.rows() != n || qp.H.cols() != n) throw std::invalid_argument("qp: H must be n x n");
  if (qp.A_eq.rows() != qp.b_eq.size() || (qp.b_eq.size() > 0 && qp.A_eq.cols() != n)) {
    throw std::invalid_argument("qp: A_eq / b_eq dimension mismatch");
  }
  if (qp.A_in.rows() != qp.b_in.size() || (qp.b_in.size() > 0 && qp.A_in.cols() != n)) {
    throw std::invalid_argument("qp: A_in / b_in dimension mismatch");
  }
  if ((qp.lower.size() != 0 && qp.lower.size() != n) || (qp.upper.size() != 0 && qp.upper.size() != n)) {
    throw std::invalid_argument("qp: bound dimension mismatch");
  }
}

}  // namespace

QpResult qp_solve_strict(const QpProblem& qp, int max_iterations) {
  check_dimensions(qp);
  ConstraintSet cs(qp);
  return GoldfarbIdnani(qp, cs, max_iterations).run();
}

QpResult qp_subproblem(const QpProblem& qp, int max_iterations) {
  QpResult res = qp_solve_strict(qp, max_iterations);
  if (res.status != QpStatus::Infeasible) return res;

  // Elastic mode: relax every equality and every currently violated
  // inequality by the common fraction xi of its residual at d = 0.
  const auto n = qp.g.size();
  QpProblem el;
  const double rho = 1e4 * std::max({1.0, qp.H.cwiseAbs().maxCoeff(), qp.g.cwiseAbs().maxCoeff()});
  el.H = MatrixXd::Zero(n + 1, n + 1);
  el.H.topLeftCorner(n, n) = qp.H;
  el.H(n, n) = rho;
  el.g.resize(n + 1);
  el.g << qp.g, rho;
  el.A_eq.resize(qp.A_eq.rows(), n + 1);
  if (qp.A_eq.rows() > 0) el.A_eq << qp.A_eq, qp.b_eq;
  el.b_eq = qp.b_eq;
  el.A_in.resize(qp.A_in.rows(), n + 1);
  if (qp.A_in.rows() > 0) el.A_in << qp.A_in, qp.b_in.cwiseMax(0.0);
  el.b_in = qp.b_in;
  el.lower = VectorXd::Constant(n + 1, -kInf);
  el.upper = VectorXd::Constant(n + 1, kInf);
  if (qp.lower.size()) el.lower.head(n) = qp.lower;
  if (qp.upper.size()) el.upper.head(n) = qp.upper;
  el.lower[n] = 0.0;
  el.upper[n] = 1.0;

  QpResult er = qp_solve_strict(el, max_iterations);
  QpResult out;
  out.status = er.status == QpStatus::Optimal ? QpStatus::Elastic : er.status;
  out.d = er.d.head(n);
  out.slack = er.d[n];
  out.eq = er.eq;
  out.in = er.in;
  out.lower_bound = er.lower_bound.head(n);
  out.upper_bound = er.upper_bound.head(n);
  out.iterations = res.iterations + er.iterations;
  return out;
}

}  // namespace berth
