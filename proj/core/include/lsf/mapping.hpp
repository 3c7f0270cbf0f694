#pragma once

#include <vector>

#include "lsf/grid.hpp"

namespace lsf {

/// Pre-segmented planar returns in the world frame.
struct PointCloud {
  std::vector<Vec2> points;
  double timestamp = 0.0;
};

struct MapperConfig {
  int kernel_radius_cells = 2;   // r: kernel support, in cells
  double kernel_sigma = 1.0;     // Gaussian width, in cells
  double sigma_switch = 1.5;     // threshold on the convolved map
  double beta_minus = 4.0;       // decay rate, 1/s
  double beta_plus = 6.0;        // growth gain, 1/s
  double tau_high = 0.6;
  double tau_low = 0.3;
  double initial_confidence = 0.0;

  void validate() const;
};

struct MapperState {
  ScalarGrid2D m0;     // instantaneous point map, {0, 1}
  ScalarGrid2D m_bar;  // convolved map, >= 0
  ScalarGrid2D gamma;  // confidence, [0, 1]
  ScalarGrid2D m_hat;  // estimated occupancy, {0, 1}
  double last_update = 0.0;
};

/// Fresh state: confidence at cfg.initial_confidence, estimate all free.
MapperState make_mapper_state(const GridSpec& spec, const MapperConfig& cfg, double t0);

/// Cell = 1 iff at least one point lands in it; out-of-grid points are dropped.
ScalarGrid2D project_cloud(const GridSpec& spec, const PointCloud& cloud);

/// Unnormalized truncated Gaussian kernel (unit center weight), zero padding.
ScalarGrid2D convolve(const ScalarGrid2D& m0, const MapperConfig& cfg);

/// Exact integration of the switched confidence ODE over dt with m_bar held constant.
/// Throws ArgumentError when dt <= 0.
ScalarGrid2D update_confidence(const ScalarGrid2D& gamma, const ScalarGrid2D& m_bar, const MapperConfig& cfg,
                               double dt);

/// Two-threshold binarization; the dead band keeps the previous estimate.
ScalarGrid2D threshold_hysteresis(const ScalarGrid2D& gamma, const ScalarGrid2D& m_hat_prev,
                                  const MapperConfig& cfg);

/// project -> convolve -> confidence update -> hysteresis.
/// Throws ArgumentError when cloud.timestamp <= state.last_update.
MapperState step_mapper(const MapperState& state, const PointCloud& cloud, const MapperConfig& cfg,
                        const GridSpec& spec);

}  // namespace lsf
