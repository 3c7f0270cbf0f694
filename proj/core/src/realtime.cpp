#include "lsf/realtime.hpp"

#include <cmath>

namespace lsf {

void IssfConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("issf alpha must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("issf epsilon must be positive");
  if (!(grad_floor > 0.0)) throw ConfigError("issf grad_floor must be positive");
}

FilterResult issf_project(const Vec3& a, double h, double dh_dt, const RomCommand& mu_p, const IssfConfig& cfg) {
  FilterResult r;
  r.h = h;
  r.dh_dt = dh_dt;
  r.grad = a;
  const double a2 = a.squaredNorm();
  const double b = -cfg.alpha * h - dh_dt + a2 / cfg.epsilon;
  const Vec3 mu = mu_p.vec();
  r.margin_before = a.dot(mu) - b;
  if (r.margin_before >= 0.0) {
    r.mu_s = mu_p;
    r.margin_after = r.margin_before;
    return r;
  }
  r.active = true;
  if (std::sqrt(a2) < cfg.grad_floor) {
    r.degenerate = true;
    r.mu_s = RomCommand{};
    r.margin_after = -b;
    return r;
  }
  const Vec3 mu_s = mu + a * ((b - a.dot(mu)) / a2);
  r.mu_s = RomCommand::from(mu_s);
  r.margin_after = a.dot(mu_s) - b;
  return r;
}

FilterResult filter(const RomCommand& mu_p, const RomState& chi, const SafetyField& field, const IssfConfig& cfg,
                    double t) {
  const Vec3 q = chi.vec();
  if (!field.contains(q)) throw DomainError("robot left the mapped region");
  return issf_project(field.gradient(q, t).d, field.value(q, t), field.time_derivative(q, t), mu_p, cfg);
}

FilterResult filter(const RomCommand& mu_p, const RomState& chi, const PsfSnapshot& snap, const IssfConfig& cfg,
                    double t) {
  return filter(mu_p, chi, ExtrapolatedField(snap), cfg, t);
}

bool theorem1_gate(double lambda, double alpha, double epsilon, double mu_barrier, double beta) {
  if (!(lambda > 0.0 && alpha > 0.0 && epsilon > 0.0 && mu_barrier > 0.0 && beta > 0.0))
    throw ArgumentError("theorem1_gate arguments must be positive");
  return lambda >= alpha + epsilon * mu_barrier / (4.0 * beta);
}

double composite_barrier(double h_val, double v_val, double mu_barrier) {
  if (!(mu_barrier > 0.0)) throw ArgumentError("mu_barrier must be positive");
  return h_val - v_val / mu_barrier;
}

}  // namespace lsf
