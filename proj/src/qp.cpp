#include "mavswarm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mavswarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Kind { kEq, kIneq, kLower, kUpper };

struct ConstraintRef {
  Kind kind;
  int index;
};

void rotate_columns(Eigen::MatrixXd& m, int a, int b, double c, double s) {
  for (int i = 0; i < m.rows(); ++i) {
    const double x = m(i, a), y = m(i, b);
    m(i, a) = c * x + s * y;
    m(i, b) = -s * x + c * y;
  }
}

class ActiveSetSolver {
 public:
  ActiveSetSolver(const DenseQp& qp, const QpSettings& settings)
      : qp_(qp), settings_(settings), n_(qp.size()) {}

  QpResult run() {
    QpResult res;
    res.z = Eigen::VectorXd::Zero(n_);
    res.eq_dual = Eigen::VectorXd::Zero(qp_.eq_rhs.size());
    res.ineq_dual = Eigen::VectorXd::Zero(qp_.ineq_rhs.size());
    res.lower_dual = Eigen::VectorXd::Zero(n_);
    res.upper_dual = Eigen::VectorXd::Zero(n_);

    Eigen::LLT<Eigen::MatrixXd> llt(qp_.hessian);
    if (llt.info() != Eigen::Success) {
      res.status = QpStatus::kNotPositiveDefinite;
      return res;
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd l_inv =
        l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n_, n_));
    j_ = l_inv.transpose();
    r_ = Eigen::MatrixXd::Zero(n_, n_);
    z_ = -(j_ * (j_.transpose() * qp_.gradient));
    d_.resize(n_);

    const int n_ineq = static_cast<int>(qp_.ineq_rhs.size());
    in_active_ineq_.assign(n_ineq, false);
    in_active_lower_.assign(n_, false);
    in_active_upper_.assign(n_, false);

    for (int i = 0; i < qp_.eq_rhs.size(); ++i) {
      if (!add({Kind::kEq, i})) return finish(res, QpStatus::kInfeasible);
    }

    while (true) {
      if (iterations_ >= settings_.max_iterations) return finish(res, QpStatus::kIterationLimit);
      ConstraintRef worst{Kind::kIneq, -1};
      double worst_violation = -settings_.feasibility_tol;
      for (int i = 0; i < n_ineq; ++i) {
        if (in_active_ineq_[i]) continue;
        const double norm = qp_.ineq_matrix.row(i).norm();
        if (norm == 0) continue;
        const double s = (qp_.ineq_rhs(i) - qp_.ineq_matrix.row(i).dot(z_)) / norm;
        if (s < worst_violation) worst_violation = s, worst = {Kind::kIneq, i};
      }
      for (int i = 0; i < n_; ++i) {
        if (!in_active_lower_[i] && std::isfinite(qp_.lower(i))) {
          const double s = z_(i) - qp_.lower(i);
          if (s < worst_violation) worst_violation = s, worst = {Kind::kLower, i};
        }
        if (!in_active_upper_[i] && std::isfinite(qp_.upper(i))) {
          const double s = qp_.upper(i) - z_(i);
          if (s < worst_violation) worst_violation = s, worst = {Kind::kUpper, i};
        }
      }
      if (worst.index < 0) return finish(res, QpStatus::kOptimal);
      if (!add(worst)) return finish(res, QpStatus::kInfeasible);
    }
  }

 private:
  // Every constraint is handled as n'z >= b (equalities as n'z = b).
  double slack(const ConstraintRef& c) const {
    switch (c.kind) {
      case Kind::kEq: return qp_.eq_matrix.row(c.index).dot(z_) - qp_.eq_rhs(c.index);
      case Kind::kIneq: return qp_.ineq_rhs(c.index) - qp_.ineq_matrix.row(c.index).dot(z_);
      case Kind::kLower: return z_(c.index) - qp_.lower(c.index);
      case Kind::kUpper: return qp_.upper(c.index) - z_(c.index);
    }
    return 0.0;
  }

  // d = J' n
  void project_normal(const ConstraintRef& c, double sign) {
    switch (c.kind) {
      case Kind::kEq: d_.noalias() = j_.transpose() * qp_.eq_matrix.row(c.index).transpose(); break;
      case Kind::kIneq:
        d_.noalias() = -(j_.transpose() * qp_.ineq_matrix.row(c.index).transpose());
        break;
      case Kind::kLower: d_ = j_.row(c.index).transpose(); break;
      case Kind::kUpper: d_ = -j_.row(c.index).transpose(); break;
    }
    if (sign < 0) d_ = -d_;
  }

  double normal_norm2(const ConstraintRef& c) const {
    switch (c.kind) {
      case Kind::kEq: return qp_.eq_matrix.row(c.index).squaredNorm();
      case Kind::kIneq: return qp_.ineq_matrix.row(c.index).squaredNorm();
      default: return 1.0;
    }
  }

  void set_active(const ConstraintRef& c, bool on) {
    switch (c.kind) {
      case Kind::kIneq: in_active_ineq_[c.index] = on; break;
      case Kind::kLower: in_active_lower_[c.index] = on; break;
      case Kind::kUpper: in_active_upper_[c.index] = on; break;
      case Kind::kEq: break;
    }
  }

  bool add(const ConstraintRef& c) {
    double sign = 1.0;
    if (c.kind == Kind::kEq && slack(c) > 0) sign = -1.0;
    const double nn = normal_norm2(c);
    double u_new = 0.0;
    while (true) {
      ++iterations_;
      if (iterations_ > settings_.max_iterations) return true;  // caller reports the limit
      const double s = sign * slack(c);
      project_normal(c, sign);
      const int free = n_ - q_;
      Eigen::VectorXd step = j_.rightCols(free) * d_.tail(free);
      Eigen::VectorXd r;
      if (q_ > 0) r = r_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d_.head(q_));

      double t1 = kInf;
      int drop_at = -1;
      for (int j = 0; j < q_; ++j) {
        if (active_[j].kind == Kind::kEq || r(j) <= 0) continue;
        const double ratio = u_[j] / r(j);
        if (ratio < t1) t1 = ratio, drop_at = j;
      }
      const double curvature = d_.tail(free).squaredNorm();
      const double t2 = curvature > 1e-14 * nn ? std::max(0.0, -s / curvature) : kInf;

      if (!std::isfinite(t1) && !std::isfinite(t2)) return false;
      if (!std::isfinite(t2)) {
        for (int j = 0; j < q_; ++j) u_[j] -= t1 * r(j);
        u_new += t1;
        drop(drop_at);
        continue;
      }
      const double t = std::min(t1, t2);
      z_ += t * step;
      for (int j = 0; j < q_; ++j) u_[j] -= t * r(j);
      u_new += t;
      if (t2 <= t1) {
        append(c, u_new, sign);
        return true;
      }
      drop(drop_at);
    }
  }

  void append(const ConstraintRef& c, double multiplier, double sign) {
    for (int j = n_ - 1; j > q_; --j) {
      const double a = d_(j - 1), b = d_(j);
      if (b == 0.0) continue;
      const double rho = std::hypot(a, b);
      const double cs = a / rho, sn = b / rho;
      d_(j - 1) = rho;
      d_(j) = 0.0;
      rotate_columns(j_, j - 1, j, cs, sn);
    }
    r_.col(q_).head(q_ + 1) = d_.head(q_ + 1);
    active_.push_back(c);
    signs_.push_back(sign);
    u_.push_back(multiplier);
    set_active(c, true);
    ++q_;
  }

  void drop(int k) {
    set_active(active_[k], false);
    for (int col = k; col < q_ - 1; ++col) r_.col(col).head(col + 2) = r_.col(col + 1).head(col + 2);
    active_.erase(active_.begin() + k);
    signs_.erase(signs_.begin() + k);
    u_.erase(u_.begin() + k);
    --q_;
    for (int j = k; j < q_; ++j) {
      const double a = r_(j, j), b = r_(j + 1, j);
      if (b == 0.0) continue;
      const double rho = std::hypot(a, b);
      const double cs = a / rho, sn = b / rho;
      for (int col = j; col < q_; ++col) {
        const double x = r_(j, col), y = r_(j + 1, col);
        r_(j, col) = cs * x + sn * y;
        r_(j + 1, col) = -sn * x + cs * y;
      }
      rotate_columns(j_, j, j + 1, cs, sn);
    }
    r_.col(q_).setZero();
  }

  QpResult& finish(QpResult& res, QpStatus status) {
    res.status = status;
    res.z = z_;
    res.iterations = iterations_;
    for (int j = 0; j < q_; ++j) {
      const auto& c = active_[j];
      switch (c.kind) {
        case Kind::kEq: res.eq_dual(c.index) = -signs_[j] * u_[j]; break;
        case Kind::kIneq: res.ineq_dual(c.index) = u_[j]; break;
        case Kind::kLower: res.lower_dual(c.index) = u_[j]; break;
        case Kind::kUpper: res.upper_dual(c.index) = u_[j]; break;
      }
    }
    return res;
  }

  const DenseQp& qp_;
  QpSettings settings_;
  int n_;
  int q_ = 0;
  int iterations_ = 0;
  Eigen::MatrixXd j_;
  Eigen::MatrixXd r_;
  Eigen::VectorXd z_;
  Eigen::VectorXd d_;
  std::vector<ConstraintRef> active_;
  std::vector<double> signs_;
  std::vector<double> u_;
  std::vector<bool> in_active_ineq_, in_active_lower_, in_active_upper_;
};

}  // namespace

void DenseQp::resize(int n) {
  hessian = Eigen::MatrixXd::Zero(n, n);
  gradient = Eigen::VectorXd::Zero(n);
  eq_matrix.resize(0, n);
  eq_rhs.resize(0);
  ineq_matrix.resize(0, n);
  ineq_rhs.resize(0);
  lower = Eigen::VectorXd::Constant(n, -kInf);
  upper = Eigen::VectorXd::Constant(n, kInf);
}

QpResult solve_qp(const DenseQp& qp, const QpSettings& settings) {
  return ActiveSetSolver(qp, settings).run();
}

double KktResidual::max() const {
  return std::max(std::max(stationarity, primal), std::max(dual, complementarity));
}

KktResidual kkt_residual(const DenseQp& qp, const QpResult& res) {
  KktResidual k;
  const Eigen::VectorXd& z = res.z;
  Eigen::VectorXd grad = qp.hessian * z + qp.gradient;
  if (qp.eq_rhs.size() > 0) grad += qp.eq_matrix.transpose() * res.eq_dual;
  if (qp.ineq_rhs.size() > 0) grad += qp.ineq_matrix.transpose() * res.ineq_dual;
  grad += res.upper_dual - res.lower_dual;
  k.stationarity = grad.cwiseAbs().maxCoeff();

  auto primal = [&](double v) { k.primal = std::max(k.primal, v); };
  auto comp = [&](double mult, double g) {
    if (mult != 0.0) k.complementarity = std::max(k.complementarity, std::abs(mult * g));
    k.dual = std::max(k.dual, -mult);
  };
  if (qp.eq_rhs.size() > 0) primal((qp.eq_matrix * z - qp.eq_rhs).cwiseAbs().maxCoeff());
  for (int i = 0; i < qp.ineq_rhs.size(); ++i) {
    const double g = qp.ineq_matrix.row(i).dot(z) - qp.ineq_rhs(i);
    primal(g);
    comp(res.ineq_dual(i), g);
  }
  for (int i = 0; i < z.size(); ++i) {
    if (std::isfinite(qp.upper(i))) {
      primal(z(i) - qp.upper(i));
      comp(res.upper_dual(i), z(i) - qp.upper(i));
    }
    if (std::isfinite(qp.lower(i))) {
      primal(qp.lower(i) - z(i));
      comp(res.lower_dual(i), qp.lower(i) - z(i));
    }
  }
  return k;
}

}  // namespace mavswarm
