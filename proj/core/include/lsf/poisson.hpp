#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "lsf/grid.hpp"

namespace lsf {

struct PoissonConfig {
  double forcing = -4.0;   // constant f < 0
  double sor_omega = 1.9;  // relaxation factor in (1, 2)
  double tol = 1e-6;       // max |discrete Laplacian - f| over free cells
  int max_iters = 10000;
  bool warm_start = true;
  int workers = 1;         // threads used across orientation layers
  int check_every = 5;     // sweeps between residual evaluations

  void validate() const;
};

/// Per-orientation free-space masks C(theta_k): 1 = free, 0 = blocked.
using ThetaMasks = std::vector<ScalarGrid2D>;

/// Pontryagin difference of the free set (complement of m_hat) with the rotated
/// footprint, one mask per orientation layer. Grid border cells count as occupied.
/// Throws ConfigError when the footprint does not fit in the grid.
ThetaMasks erode_free_space(const ScalarGrid2D& m_hat, const RobotFootprint& footprint, int n_theta);

struct LayerSolveReport {
  int iterations = 0;
  double residual = 0.0;
  bool infeasible = false;  // empty free set; layer left at zero
};

struct PsfSolveResult {
  PsfStack stack;
  std::vector<LayerSolveReport> layers;

  int total_iterations() const;
  double max_residual() const;
};

/// Red-black SOR solve of lap(h) = f on free cells, h = 0 elsewhere, per layer.
/// `warm` seeds the iteration when its geometry matches. Throws SolverError (with
/// the final residual) if any layer misses tol within max_iters.
PsfSolveResult solve_psf(const ThetaMasks& masks, const PoissonConfig& cfg, double timestamp,
                         const PsfStack* warm = nullptr);

/// max |(hE + hW + hN + hS - 4 hC) / res^2 - f| over cells flagged free in `mask`.
double pde_residual(const ScalarGrid2D& h, const ScalarGrid2D& mask, double forcing);

/// Current field plus (optionally) the previous one, for first-order extrapolation in time.
struct PsfSnapshot {
  std::shared_ptr<const PsfStack> curr;
  std::shared_ptr<const PsfStack> prev;  // null on the first frame

  /// Throws ArgumentError on missing/mismatched stacks or non-increasing times.
  void validate() const;
  double t0() const { return curr->timestamp; }
};

/// h(q, t) = h0(q) + (h0(q) - h_{-1}(q)) / (t0 - t_{-1}) * (t - t0).
double extrapolate_h(const PsfSnapshot& snap, const Vec3& q, double t);

/// Slope of the extrapolation at q; 0 when there is no previous field.
double h_time_derivative(const PsfSnapshot& snap, const Vec3& q);

}  // namespace lsf
