#pragma once

#include "lsf/field.hpp"

namespace lsf {

struct IssfConfig {
  double alpha = 2.0;       // linear class-K gain, 1/s
  double epsilon = 5.0;     // robustness weight
  double grad_floor = 1e-6; // smallest |grad h| treated as nonzero

  void validate() const;
};

struct FilterResult {
  RomCommand mu_s;
  bool active = false;      // constraint was binding
  double margin_before = 0.0;
  double margin_after = 0.0;
  bool degenerate = false;  // zero gradient with a violated constraint: full stop
  double h = 0.0;
  double dh_dt = 0.0;
  Vec3 grad = Vec3::Zero();
};

/// Closed-form projection of mu_p onto a.mu >= b with
/// b = -alpha h - dh/dt + |a|^2 / epsilon. Margins are a.mu - b.
FilterResult issf_project(const Vec3& a, double h, double dh_dt, const RomCommand& mu_p, const IssfConfig& cfg);

/// ISSf CBF-QP on the field at (chi, t). Throws DomainError outside the field.
FilterResult filter(const RomCommand& mu_p, const RomState& chi, const SafetyField& field, const IssfConfig& cfg,
                    double t);
FilterResult filter(const RomCommand& mu_p, const RomState& chi, const PsfSnapshot& snap, const IssfConfig& cfg,
                    double t);

/// lambda >= alpha + epsilon * mu_barrier / (4 beta). Throws ArgumentError on nonpositive input.
bool theorem1_gate(double lambda, double alpha, double epsilon, double mu_barrier, double beta);

/// B = h - V / mu_barrier.
double composite_barrier(double h_val, double v_val, double mu_barrier);

}  // namespace lsf
