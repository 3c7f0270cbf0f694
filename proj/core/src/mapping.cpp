#include "lsf/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lsf {

void MapperConfig::validate() const {
  if (kernel_radius_cells < 0) throw ConfigError("kernel_radius_cells must be >= 0");
  if (!(kernel_sigma > 0.0)) throw ConfigError("kernel_sigma must be > 0");
  if (!(sigma_switch > 0.0)) throw ConfigError("sigma_switch must be > 0");
  if (!(beta_minus > 0.0) || !(beta_plus > 0.0)) throw ConfigError("beta_minus and beta_plus must be > 0");
  if (tau_low < 0.0 || tau_high > 1.0 || !(tau_high > tau_low))
    throw ConfigError("hysteresis thresholds need 0 <= tau_low < tau_high <= 1");
  if (initial_confidence < 0.0 || initial_confidence > 1.0) throw ConfigError("initial_confidence must be in [0,1]");
}

MapperState make_mapper_state(const GridSpec& spec, const MapperConfig& cfg, double t0) {
  return {ScalarGrid2D(spec), ScalarGrid2D(spec), ScalarGrid2D(spec, cfg.initial_confidence), ScalarGrid2D(spec), t0};
}

ScalarGrid2D project_cloud(const GridSpec& spec, const PointCloud& cloud) {
  ScalarGrid2D m0(spec);
  for (const Vec2& p : cloud.points) {
    if (auto c = world_to_cell(spec, p)) m0(c->i, c->j) = 1.0;
  }
  return m0;
}

ScalarGrid2D convolve(const ScalarGrid2D& m0, const MapperConfig& cfg) {
  const GridSpec& spec = m0.spec();
  const int r = cfg.kernel_radius_cells;
  if (2 * r >= std::min(spec.nx, spec.ny))
    throw ConfigError("kernel radius " + std::to_string(r) + " too large for the grid");

  struct Tap {
    int di, dj;
    double w;
  };
  std::vector<Tap> taps;
  const double inv = 1.0 / (2.0 * cfg.kernel_sigma * cfg.kernel_sigma);
  for (int dj = -r; dj <= r; ++dj)
    for (int di = -r; di <= r; ++di) {
      const int d2 = di * di + dj * dj;
      if (d2 <= r * r) taps.push_back({di, dj, std::exp(-d2 * inv)});
    }

  // Scatter from occupied cells only; M0 is sparse.
  ScalarGrid2D out(spec);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const double v = m0(i, j);
      if (v == 0.0) continue;
      for (const Tap& t : taps) {
        const int a = i + t.di, b = j + t.dj;
        if (spec.in_bounds(a, b)) out(a, b) += t.w * v;
      }
    }
  return out;
}

ScalarGrid2D update_confidence(const ScalarGrid2D& gamma, const ScalarGrid2D& m_bar, const MapperConfig& cfg,
                               double dt) {
  if (!(dt > 0.0)) throw ArgumentError("confidence update needs dt > 0, got " + std::to_string(dt));
  ScalarGrid2D out(gamma.spec());
  const double decay = std::exp(-cfg.beta_minus * dt);
  const auto g = gamma.values();
  const auto mb = m_bar.values();
  auto o = out.values();
  for (std::size_t k = 0; k < g.size(); ++k) {
    double v;
    if (mb[k] < cfg.sigma_switch) {
      v = g[k] * decay;
    } else {
      v = 1.0 - (1.0 - g[k]) * std::exp(-cfg.beta_plus * mb[k] * dt);
    }
    o[k] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

ScalarGrid2D threshold_hysteresis(const ScalarGrid2D& gamma, const ScalarGrid2D& m_hat_prev,
                                  const MapperConfig& cfg) {
  if (!(cfg.tau_high > cfg.tau_low)) throw ConfigError("hysteresis needs tau_high > tau_low");
  ScalarGrid2D out(gamma.spec());
  const auto g = gamma.values();
  const auto prev = m_hat_prev.values();
  auto o = out.values();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k] >= cfg.tau_high)
      o[k] = 1.0;
    else if (g[k] <= cfg.tau_low)
      o[k] = 0.0;
    else
      o[k] = prev[k];
  }
  return out;
}

MapperState step_mapper(const MapperState& state, const PointCloud& cloud, const MapperConfig& cfg,
                        const GridSpec& spec) {
  if (!(cloud.timestamp > state.last_update))
    throw ArgumentError("point cloud timestamp " + std::to_string(cloud.timestamp) +
                        " does not advance past " + std::to_string(state.last_update));
  MapperState next;
  next.m0 = project_cloud(spec, cloud);
  next.m_bar = convolve(next.m0, cfg);
  next.gamma = update_confidence(state.gamma, next.m_bar, cfg, cloud.timestamp - state.last_update);
  next.m_hat = threshold_hysteresis(next.gamma, state.m_hat, cfg);
  next.last_update = cloud.timestamp;
  return next;
}

}  // namespace lsf
