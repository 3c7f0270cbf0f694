#include "lsf/dense_qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lsf {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::NotPositiveDefinite: return "not-positive-definite";
    case QpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Inequality k reads  n_k . x + c_k >= 0. General rows first, then bounds.
struct Inequalities {
  const MatrixXd* A = nullptr;
  const VectorXd* b = nullptr;
  struct Bound {
    int var;
    double sign;   // +1 for x >= lb, -1 for x <= ub
    double value;
  };
  std::vector<Bound> bounds;
  int general = 0;

  int size() const { return general + static_cast<int>(bounds.size()); }

  double slack(int k, const VectorXd& x) const {
    if (k < general) return A->row(k).dot(x) - (*b)(k);
    const Bound& bd = bounds[static_cast<std::size_t>(k - general)];
    return bd.sign * (x(bd.var) - bd.value);
  }

  void normal(int k, VectorXd& out) const {
    if (k < general) {
      out = A->row(k).transpose();
      return;
    }
    const Bound& bd = bounds[static_cast<std::size_t>(k - general)];
    out.setZero();
    out(bd.var) = bd.sign;
  }

  // d = J' n_k, exploiting unit normals for bounds.
  void project(int k, const MatrixXd& J, const VectorXd& np, VectorXd& d) const {
    if (k < general) {
      d.noalias() = J.transpose() * np;
      return;
    }
    const Bound& bd = bounds[static_cast<std::size_t>(k - general)];
    d = bd.sign * J.row(bd.var).transpose();
  }
};

struct Factors {
  MatrixXd J;
  MatrixXd R;
  double r_norm = 1.0;
  int n = 0;
};

void update_z(VectorXd& z, const Factors& f, const VectorXd& d, int iq) {
  z.noalias() = f.J.rightCols(f.n - iq) * d.tail(f.n - iq);
}

void update_r(VectorXd& r, const Factors& f, const VectorXd& d, int iq) {
  for (int i = iq - 1; i >= 0; --i) {
    double sum = 0.0;
    for (int j = i + 1; j < iq; ++j) sum += f.R(i, j) * r(j);
    r(i) = (d(i) - sum) / f.R(i, i);
  }
}

bool add_constraint(Factors& f, VectorXd& d, int& iq) {
  const int n = f.n;
  // Givens rotations zero d(iq+1..n-1) while keeping J orthogonal to the active normals.
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j - 1);
      const double t2 = f.J(k, j);
      f.J(k, j - 1) = t1 * cc + t2 * ss;
      f.J(k, j) = xny * (t1 + f.J(k, j - 1)) - t2;
    }
  }
  ++iq;
  for (int i = 0; i < iq; ++i) f.R(i, iq - 1) = d(i);
  if (std::abs(d(iq - 1)) <= kEps * f.r_norm) return false;  // linearly dependent
  f.r_norm = std::max(f.r_norm, std::abs(d(iq - 1)));
  return true;
}

void delete_constraint(Factors& f, std::vector<int>& active, VectorXd& u, int me, int& iq, int l) {
  const int n = f.n;
  int qq = -1;
  for (int i = me; i < iq; ++i)
    if (active[static_cast<std::size_t>(i)] == l) {
      qq = i;
      break;
    }
  if (qq < 0) return;

  for (int i = qq; i < iq - 1; ++i) {
    active[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i + 1)];
    u(i) = u(i + 1);
    f.R.col(i) = f.R.col(i + 1);
  }
  active[static_cast<std::size_t>(iq - 1)] = active[static_cast<std::size_t>(iq)];
  u(iq - 1) = u(iq);
  active[static_cast<std::size_t>(iq)] = 0;
  u(iq) = 0.0;
  for (int j = 0; j < iq; ++j) f.R(j, iq - 1) = 0.0;
  --iq;
  if (iq == 0) return;

  for (int j = qq; j < iq; ++j) {
    double cc = f.R(j, j);
    double ss = f.R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    f.R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      f.R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      f.R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = f.R(j, k);
      const double t2 = f.R(j + 1, k);
      f.R(j, k) = t1 * cc + t2 * ss;
      f.R(j + 1, k) = xny * (t1 + f.R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j);
      const double t2 = f.J(k, j + 1);
      f.J(k, j) = t1 * cc + t2 * ss;
      f.J(k, j + 1) = xny * (f.J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

QpSolution solve_dense_qp(const DenseQp& qp, int max_iterations) {
  const int n = static_cast<int>(qp.H.rows());
  QpSolution sol;
  if (n == 0 || qp.H.cols() != n || qp.g.size() != n) {
    sol.status = QpStatus::NotPositiveDefinite;
    return sol;
  }
  const int me = static_cast<int>(qp.A_eq.rows());

  Inequalities ineq;
  ineq.A = &qp.A_in;
  ineq.b = &qp.b_in;
  ineq.general = static_cast<int>(qp.A_in.rows());
  for (int i = 0; i < n; ++i) {
    if (qp.lb.size() == n && std::isfinite(qp.lb(i))) ineq.bounds.push_back({i, 1.0, qp.lb(i)});
    if (qp.ub.size() == n && std::isfinite(qp.ub(i))) ineq.bounds.push_back({i, -1.0, qp.ub(i)});
  }
  const int m = ineq.size();
  if (max_iterations <= 0) max_iterations = 50 * (n + m + me) + 100;

  Eigen::LLT<MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) {
    sol.status = QpStatus::NotPositiveDefinite;
    return sol;
  }

  Factors f;
  f.n = n;
  f.J = llt.matrixU().solve(MatrixXd::Identity(n, n));
  f.R = MatrixXd::Zero(n, n);
  const double c1 = qp.H.trace();
  const double c2 = f.J.trace();

  VectorXd x = -llt.solve(qp.g);
  VectorXd u = VectorXd::Zero(n + 1);
  VectorXd d(n), z(n), r(n + 1), np(n);
  std::vector<int> active(static_cast<std::size_t>(n + 1), 0);
  int iq = 0;

  for (int i = 0; i < me; ++i) {
    np = qp.A_eq.row(i).transpose();
    d.noalias() = f.J.transpose() * np;
    update_z(z, f, d, iq);
    update_r(r, f, d, iq);
    double t2 = 0.0;
    if (z.squaredNorm() > kEps) t2 = (qp.b_eq(i) - np.dot(x)) / z.dot(np);
    x += t2 * z;
    u(iq) = t2;
    u.head(iq) -= t2 * r.head(iq);
    active[static_cast<std::size_t>(iq)] = -i - 1;
    if (!add_constraint(f, d, iq)) {
      sol.status = QpStatus::Infeasible;
      sol.x = x;
      return sol;
    }
  }

  std::vector<int> iai(static_cast<std::size_t>(m));
  std::vector<char> iaexcl(static_cast<std::size_t>(m), 1);
  VectorXd s(m);
  VectorXd u_old(n + 1);
  std::vector<int> a_old(static_cast<std::size_t>(n + 1));
  VectorXd x_old(n);
  for (int i = 0; i < m; ++i) iai[static_cast<std::size_t>(i)] = i;

  int iter = 0;
  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.x = x;
    sol.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
    sol.iterations = iter;
    sol.active_constraints = iq;
    return sol;
  };

  while (true) {
    // Step 1: check primal feasibility of the current iterate.
    if (++iter > max_iterations) return finish(QpStatus::IterationLimit);
    for (int i = me; i < iq; ++i) iai[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])] = -1;
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[static_cast<std::size_t>(i)] = 1;
      s(i) = ineq.slack(i, x);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= m * kEps * c1 * c2 * 100.0) return finish(QpStatus::Optimal);
    u_old.head(iq) = u.head(iq);
    for (int i = 0; i < iq; ++i) a_old[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i)];
    x_old = x;

  choose_violated:
    int ip = -1;
    double most = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (s(i) < most && iai[si] != -1 && iaexcl[si]) {
        most = s(i);
        ip = i;
      }
    }
    if (ip < 0) return finish(QpStatus::Optimal);
    ineq.normal(ip, np);
    u(iq) = 0.0;
    active[static_cast<std::size_t>(iq)] = ip;

    // Step 2: step direction in primal (z) and dual (r) space.
    while (true) {
      if (++iter > max_iterations) return finish(QpStatus::IterationLimit);
      ineq.project(ip, f.J, np, d);
      update_z(z, f, d, iq);
      update_r(r, f, d, iq);

      double t1 = kInf;
      int l = -1;
      for (int k = me; k < iq; ++k) {
        if (r(k) > 0.0 && u(k) / r(k) < t1) {
          t1 = u(k) / r(k);
          l = active[static_cast<std::size_t>(k)];
        }
      }
      double t2 = kInf;
      if (z.squaredNorm() > kEps) {
        t2 = -s(ip) / z.dot(np);
        if (t2 < 0.0) t2 = kInf;
      }
      const double t = std::min(t1, t2);
      if (!(t < kInf)) return finish(QpStatus::Infeasible);

      if (!(t2 < kInf)) {
        // dual step only
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        iai[static_cast<std::size_t>(l)] = l;
        delete_constraint(f, active, u, me, iq, l);
        continue;
      }

      x += t * z;
      u.head(iq) -= t * r.head(iq);
      u(iq) += t;

      if (std::abs(t - t2) < kEps) {
        // full step: ip joins the active set
        if (!add_constraint(f, d, iq)) {
          iaexcl[static_cast<std::size_t>(ip)] = 0;
          delete_constraint(f, active, u, me, iq, ip);
          for (int i = 0; i < m; ++i) iai[static_cast<std::size_t>(i)] = i;
          for (int i = me; i < iq; ++i) {
            active[static_cast<std::size_t>(i)] = a_old[static_cast<std::size_t>(i)];
            u(i) = u_old(i);
            iai[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])] = -1;
          }
          x = x_old;
          goto choose_violated;
        }
        iai[static_cast<std::size_t>(ip)] = -1;
        break;
      }

      // partial step: drop the blocking constraint and retry ip
      iai[static_cast<std::size_t>(l)] = l;
      delete_constraint(f, active, u, me, iq, l);
      s(ip) = ineq.slack(ip, x);
    }
  }
}

}  // namespace lsf
