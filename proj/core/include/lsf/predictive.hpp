#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lsf/field.hpp"

namespace lsf {

struct MpcConfig {
  int horizon = 20;        // N
  double dt = 0.1;         // step, s
  double rho = 0.9;        // DCBF contraction in (0, 1)
  Eigen::Matrix3d R = Eigen::Vector3d(1.0, 1.0, 0.2).asDiagonal();
  int sqp_max_iters = 30;
  double qp_tol = 1e-4;
  double trust_radius = 1.0;  // per-component bound on one SQP step
  /// Penalty on DCBF slacks. nullopt: 1e3 * max field value. 0 disables slacks.
  std::optional<double> slack_penalty;
  /// Symmetric box |nu_k| <= bound_k, off when absent.
  std::optional<Vec3> input_bounds;
  /// Slope (field units per meter) of the penalty continuation outside the mapped region.
  double exit_slope = 1.0;

  void validate() const;
  bool slacks_enabled() const { return !slack_penalty || *slack_penalty > 0.0; }
};

struct Plan {
  std::vector<Vec3> xs;  // xi_0 .. xi_N
  std::vector<Vec3> us;  // nu_0 .. nu_{N-1}
  std::vector<double> dcbf_margins;   // h(xi_{i+1}, t_{i+1}) - rho h(xi_i, t_i), true field
  std::vector<double> model_margins;  // same rows from the last linearization (empty if none)
  std::vector<double> slack_used;     // max(0, -margin) per row
  std::vector<double> merit_trace;    // merit at each accepted iterate
  double cost = 0.0;                  // sum (nu_i - mu_d)' R (nu_i - mu_d)
  int sqp_iters = 0;
  int qp_iters = 0;
  bool converged = false;
  bool nominal_feasible = false;  // returned the nominal rollout untouched

  RomCommand first() const { return RomCommand::from(us.front()); }
  double min_margin() const;
};

/// DCBF-constrained receding-horizon plan on the extrapolated snapshot field.
/// Throws InfeasibleError if slacks are disabled and a QP subproblem has no solution.
Plan plan(const RomState& chi, const RomCommand& mu_d, const PsfSnapshot& snap, const MpcConfig& cfg,
          double t0, const Plan* warm = nullptr);

/// Same SQP on any time-varying field with a per-step nominal sequence (size N).
Plan plan_on_field(const SafetyField& field, const RomState& chi, std::span<const Vec3> mu_d,
                   const MpcConfig& cfg, double t0, const Plan* warm = nullptr);

/// SQP from an explicit initial input sequence (size N), unshifted.
Plan plan_from_guess(const SafetyField& field, const RomState& chi, std::span<const Vec3> mu_d,
                     const MpcConfig& cfg, double t0, std::vector<Vec3> initial);

struct MarginReport {
  std::vector<double> margins;
  std::vector<bool> flagged;  // negative beyond qp_tol, or linearization off by more than qp_tol
  double min_margin = 0.0;
  bool any_flagged() const;
};

MarginReport check_plan(const Plan& plan, const PsfSnapshot& snap, const MpcConfig& cfg, double t0);
MarginReport check_plan_on_field(const Plan& plan, const SafetyField& field, const MpcConfig& cfg, double t0);

/// xi_{i+1} = xi_i + dt nu_i from xi_0 = chi.
std::vector<Vec3> rollout(const Vec3& chi, std::span<const Vec3> us, double dt);

}  // namespace lsf
