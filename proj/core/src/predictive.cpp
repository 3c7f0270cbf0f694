#include "lsf/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lsf/dense_qp.hpp"

namespace lsf {

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("mpc dt must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("mpc rho must lie in (0, 1)");
  if (!R.isApprox(R.transpose())) throw ConfigError("mpc weight R must be symmetric");
  if (Eigen::LLT<Eigen::Matrix3d>(R).info() != Eigen::Success) throw ConfigError("mpc weight R must be positive definite");
  if (sqp_max_iters < 1) throw ConfigError("sqp_max_iters must be >= 1");
  if (!(qp_tol > 0.0)) throw ConfigError("qp_tol must be positive");
  if (!(trust_radius > 0.0)) throw ConfigError("trust_radius must be positive");
  if (slack_penalty && *slack_penalty < 0.0) throw ConfigError("slack_penalty must be >= 0");
  if (input_bounds && !(input_bounds->array() > 0.0).all()) throw ConfigError("input bounds must be positive");
  if (!(exit_slope > 0.0)) throw ConfigError("exit_slope must be positive");
}

double Plan::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : dcbf_margins) m = std::min(m, v);
  return m;
}

bool MarginReport::any_flagged() const { return std::find(flagged.begin(), flagged.end(), true) != flagged.end(); }

std::vector<Vec3> rollout(const Vec3& chi, std::span<const Vec3> us, double dt) {
  std::vector<Vec3> xs;
  xs.reserve(us.size() + 1);
  xs.push_back(chi);
  for (const Vec3& u : us) xs.push_back(xs.back() + dt * u);
  return xs;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Sample {
  double h;
  Vec3 grad;
};

// Field value with a penalized linear continuation outside the mapped region, so
// that leaving the map always reads as a violated row.
Sample eval_field(const SafetyField& field, const Vec3& q, double t, double slope, bool with_grad) {
  if (field.contains(q)) {
    Sample s{field.value(q, t), Vec3::Zero()};
    if (with_grad) s.grad = field.gradient(q, t).d;
    return s;
  }
  const GridSpec& spec = field.domain();
  Vec3 qc = q;
  qc.x() = std::clamp(q.x(), spec.origin.x(), spec.x_max());
  qc.y() = std::clamp(q.y(), spec.origin.y(), spec.y_max());
  const Vec2 out{q.x() - qc.x(), q.y() - qc.y()};
  const double dist = out.norm();
  Sample s{std::min(field.value(qc, t), 0.0) - slope * dist, Vec3::Zero()};
  if (with_grad) {
    s.grad = field.gradient(qc, t).d;
    s.grad.x() -= slope * out.x() / dist;
    s.grad.y() -= slope * out.y() / dist;
  }
  return s;
}

struct Linearization {
  std::vector<Vec3> xs;
  std::vector<Sample> samples;
  VectorXd margins;  // c_i
};

class Sqp {
 public:
  Sqp(const SafetyField& field, const Vec3& chi, std::span<const Vec3> mu_d, const MpcConfig& cfg, double t0)
      : field_(field), chi_(chi), mu_d_(mu_d), cfg_(cfg), t0_(t0), n_(cfg.horizon) {
    const double scale = field.scale() > 0.0 ? field.scale() : 1.0;
    penalty_ = cfg.slack_penalty ? *cfg.slack_penalty : 1e3 * scale;
    merit_penalty_ = cfg.slacks_enabled() ? penalty_ : 1e3 * scale;
  }

  double time(int i) const { return t0_ + i * cfg_.dt; }

  Linearization linearize(std::span<const Vec3> us, bool with_grad) const {
    Linearization lin;
    lin.xs = rollout(chi_, us, cfg_.dt);
    lin.samples.reserve(lin.xs.size());
    for (int i = 0; i <= n_; ++i)
      lin.samples.push_back(eval_field(field_, lin.xs[static_cast<std::size_t>(i)], time(i), cfg_.exit_slope,
                                       with_grad && i > 0));
    lin.margins.resize(n_);
    for (int i = 0; i < n_; ++i)
      lin.margins(i) = lin.samples[static_cast<std::size_t>(i + 1)].h - cfg_.rho * lin.samples[static_cast<std::size_t>(i)].h;
    return lin;
  }

  double cost(std::span<const Vec3> us) const {
    double c = 0.0;
    for (int i = 0; i < n_; ++i) {
      const Vec3 e = us[static_cast<std::size_t>(i)] - mu_d_[static_cast<std::size_t>(i)];
      c += e.dot(cfg_.R * e);
    }
    return c;
  }

  double violation(const VectorXd& margins) const { return (-margins.array()).max(0.0).sum(); }

  double merit(std::span<const Vec3> us, const VectorXd& margins) const {
    return cost(us) + merit_penalty_ * violation(margins);
  }

  Plan run(std::vector<Vec3> us) {
    Plan plan;
    double radius = cfg_.trust_radius;
    Linearization lin = linearize(us, true);
    double phi = merit(us, lin.margins);
    plan.merit_trace.push_back(phi);
    VectorXd model;

    for (int it = 0; it < cfg_.sqp_max_iters; ++it) {
      ++plan.sqp_iters;
      auto step = solve_subproblem(us, lin, radius, plan.qp_iters);
      if (!step) {
        if (!cfg_.slacks_enabled()) {
          if (radius < 64.0 * cfg_.trust_radius) {
            radius *= 4.0;
            continue;
          }
          throw InfeasibleError("DCBF subproblem infeasible without slacks");
        }
        break;
      }
      const VectorXd& d = *step;
      const int nu = 3 * n_;

      // linear model of the merit
      VectorXd lin_margins = lin.margins;
      for (int i = 0; i < n_; ++i) lin_margins(i) += row_dot(lin, i, d);
      double quad = 0.0;
      for (int j = 0; j < n_; ++j) {
        const Vec3 dj = d.segment<3>(3 * j);
        const Vec3 e = us[static_cast<std::size_t>(j)] - mu_d_[static_cast<std::size_t>(j)];
        quad += 2.0 * e.dot(cfg_.R * dj) + dj.dot(cfg_.R * dj);
      }
      const double predicted = -quad + merit_penalty_ * (violation(lin.margins) - violation(lin_margins));
      const double step_norm = d.head(nu).lpNorm<Eigen::Infinity>();
      if (step_norm < cfg_.qp_tol || predicted <= 1e-12 * std::max(1.0, std::abs(phi))) {
        model = lin_margins;
        plan.converged = true;
        break;
      }

      bool accepted = false;
      double alpha = 1.0;
      std::vector<Vec3> trial(us.size());
      for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
        for (int j = 0; j < n_; ++j)
          trial[static_cast<std::size_t>(j)] = us[static_cast<std::size_t>(j)] + alpha * d.segment<3>(3 * j);
        Linearization tl = linearize(trial, false);
        const double tphi = merit(trial, tl.margins);
        if (tphi <= phi - 1e-4 * alpha * predicted) {
          us = trial;
          phi = tphi;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        radius *= 0.25;
        if (radius < cfg_.qp_tol) break;
        continue;
      }
      plan.merit_trace.push_back(phi);
      model = lin.margins + alpha * (lin_margins - lin.margins);
      lin = linearize(us, true);
      if (alpha * step_norm < cfg_.qp_tol) {
        plan.converged = true;
        break;
      }
    }

    plan.us = us;
    plan.xs = lin.xs;
    plan.cost = cost(us);
    plan.dcbf_margins.assign(lin.margins.data(), lin.margins.data() + n_);
    for (double m : plan.dcbf_margins) plan.slack_used.push_back(std::max(0.0, -m));
    if (model.size() == n_) plan.model_margins.assign(model.data(), model.data() + n_);
    return plan;
  }

 private:
  // G_i . d for row i: dt * (grad_{i+1} - rho grad_i) on steps j < i, dt * grad_{i+1} on j = i.
  double row_dot(const Linearization& lin, int i, const VectorXd& d) const {
    const Vec3& g1 = lin.samples[static_cast<std::size_t>(i + 1)].grad;
    const Vec3 gi = i > 0 ? lin.samples[static_cast<std::size_t>(i)].grad : Vec3::Zero();
    Vec3 sum = Vec3::Zero();
    for (int j = 0; j < i; ++j) sum += d.segment<3>(3 * j);
    return cfg_.dt * ((g1 - cfg_.rho * gi).dot(sum) + g1.dot(d.segment<3>(3 * i)));
  }

  std::optional<VectorXd> solve_subproblem(const std::vector<Vec3>& us, const Linearization& lin, double radius,
                                           int& qp_iters) const {
    const int nu = 3 * n_;
    const bool slacks = cfg_.slacks_enabled();
    const int nv = nu + (slacks ? n_ : 0);
    DenseQp qp;
    qp.H = MatrixXd::Zero(nv, nv);
    qp.g = VectorXd::Zero(nv);
    for (int j = 0; j < n_; ++j) {
      qp.H.block<3, 3>(3 * j, 3 * j) = 2.0 * cfg_.R;
      qp.g.segment<3>(3 * j) =
          2.0 * cfg_.R * (us[static_cast<std::size_t>(j)] - mu_d_[static_cast<std::size_t>(j)]);
    }
    qp.A_in = MatrixXd::Zero(n_, nv);
    qp.b_in = -lin.margins;
    for (int i = 0; i < n_; ++i) {
      const Vec3& g1 = lin.samples[static_cast<std::size_t>(i + 1)].grad;
      const Vec3 gi = i > 0 ? lin.samples[static_cast<std::size_t>(i)].grad : Vec3::Zero();
      const Vec3 early = cfg_.dt * (g1 - cfg_.rho * gi);
      for (int j = 0; j < i; ++j) qp.A_in.block<1, 3>(i, 3 * j) = early.transpose();
      qp.A_in.block<1, 3>(i, 3 * i) = (cfg_.dt * g1).transpose();
      if (slacks) qp.A_in(i, nu + i) = 1.0;
    }
    qp.lb = VectorXd::Constant(nv, -radius);
    qp.ub = VectorXd::Constant(nv, radius);
    if (cfg_.input_bounds) {
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < 3; ++k) {
          const double b = (*cfg_.input_bounds)(k);
          const double u = us[static_cast<std::size_t>(j)](k);
          qp.lb(3 * j + k) = std::max(-radius, -b - u);
          qp.ub(3 * j + k) = std::min(radius, b - u);
        }
    }
    if (slacks) {
      // small curvature keeps H positive definite; the linear term carries the penalty
      for (int i = 0; i < n_; ++i) {
        qp.H(nu + i, nu + i) = 1e-6;
        qp.g(nu + i) = penalty_;
        qp.lb(nu + i) = 0.0;
        qp.ub(nu + i) = std::numeric_limits<double>::infinity();
      }
    }
    const QpSolution sol = solve_dense_qp(qp);
    qp_iters += sol.iterations;
    if (sol.status != QpStatus::Optimal) return std::nullopt;
    return sol.x;
  }

  const SafetyField& field_;
  Vec3 chi_;
  std::span<const Vec3> mu_d_;
  const MpcConfig& cfg_;
  double t0_;
  int n_;
  double penalty_ = 0.0;
  double merit_penalty_ = 0.0;
};

}  // namespace

Plan plan_on_field(const SafetyField& field, const RomState& chi, std::span<const Vec3> mu_d, const MpcConfig& cfg,
                   double t0, const Plan* warm) {
  cfg.validate();
  const int n = cfg.horizon;
  if (static_cast<int>(mu_d.size()) != n)
    throw ArgumentError("nominal sequence has " + std::to_string(mu_d.size()) + " entries, horizon is " +
                        std::to_string(n));
  const Vec3 x0 = chi.vec();
  if (!field.contains(x0)) throw DomainError("plan start lies outside the mapped region");

  Sqp sqp(field, x0, mu_d, cfg, t0);

  std::vector<Vec3> nominal(mu_d.begin(), mu_d.end());
  if (cfg.input_bounds)
    for (Vec3& u : nominal) u = u.cwiseMax(-*cfg.input_bounds).cwiseMin(*cfg.input_bounds);
  const Linearization nom = sqp.linearize(nominal, false);
  if ((nom.margins.array() > cfg.qp_tol).all()) {
    Plan p;
    p.us = nominal;
    p.xs = nom.xs;
    p.cost = sqp.cost(nominal);
    p.dcbf_margins.assign(nom.margins.data(), nom.margins.data() + n);
    p.slack_used.assign(static_cast<std::size_t>(n), 0.0);
    p.merit_trace.push_back(p.cost);
    p.converged = true;
    p.nominal_feasible = true;
    return p;
  }

  std::vector<Vec3> init = nominal;
  if (warm && static_cast<int>(warm->us.size()) == n) {
    for (int i = 0; i + 1 < n; ++i) init[static_cast<std::size_t>(i)] = warm->us[static_cast<std::size_t>(i + 1)];
    init.back() = warm->us.back();
  }
  return sqp.run(std::move(init));
}

Plan plan_from_guess(const SafetyField& field, const RomState& chi, std::span<const Vec3> mu_d,
                     const MpcConfig& cfg, double t0, std::vector<Vec3> initial) {
  cfg.validate();
  const int n = cfg.horizon;
  if (static_cast<int>(mu_d.size()) != n || static_cast<int>(initial.size()) != n)
    throw ArgumentError("nominal and initial sequences must both have horizon entries");
  if (!field.contains(chi.vec())) throw DomainError("plan start lies outside the mapped region");
  Sqp sqp(field, chi.vec(), mu_d, cfg, t0);
  return sqp.run(std::move(initial));
}

Plan plan(const RomState& chi, const RomCommand& mu_d, const PsfSnapshot& snap, const MpcConfig& cfg, double t0,
          const Plan* warm) {
  const ExtrapolatedField field(snap);
  const std::vector<Vec3> nominal(static_cast<std::size_t>(std::max(cfg.horizon, 0)), mu_d.vec());
  return plan_on_field(field, chi, nominal, cfg, t0, warm);
}

MarginReport check_plan_on_field(const Plan& plan, const SafetyField& field, const MpcConfig& cfg, double t0) {
  MarginReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  const std::size_t n = plan.us.size();
  std::vector<double> h(plan.xs.size());
  for (std::size_t i = 0; i < plan.xs.size(); ++i)
    h[i] = eval_field(field, plan.xs[i], t0 + static_cast<double>(i) * cfg.dt, cfg.exit_slope, false).h;
  for (std::size_t i = 0; i < n && i + 1 < h.size(); ++i) {
    const double m = h[i + 1] - cfg.rho * h[i];
    bool flag = m < -cfg.qp_tol;
    if (plan.model_margins.size() == n && std::abs(plan.model_margins[i] - m) > cfg.qp_tol) flag = true;
    rep.margins.push_back(m);
    rep.flagged.push_back(flag);
    rep.min_margin = std::min(rep.min_margin, m);
  }
  return rep;
}

MarginReport check_plan(const Plan& plan, const PsfSnapshot& snap, const MpcConfig& cfg, double t0) {
  return check_plan_on_field(plan, ExtrapolatedField(snap), cfg, t0);
}

}  // namespace lsf
