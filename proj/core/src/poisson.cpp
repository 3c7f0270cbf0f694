#include "lsf/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>

namespace lsf {

void PoissonConfig::validate() const {
  if (!(forcing < 0.0)) throw ConfigError("Poisson forcing must be negative");
  if (!(sor_omega > 1.0 && sor_omega < 2.0)) throw ConfigError("SOR omega must lie in (1, 2)");
  if (!(tol > 0.0)) throw ConfigError("Poisson tolerance must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (check_every < 1) throw ConfigError("check_every must be >= 1");
}

ThetaMasks erode_free_space(const ScalarGrid2D& m_hat, const RobotFootprint& footprint, int n_theta) {
  const GridSpec& spec = m_hat.spec();
  footprint.validate(spec.resolution);
  if (n_theta < 1) throw ConfigError("n_theta must be >= 1");

  std::vector<unsigned char> blocked(spec.cell_count());
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i)
      blocked[spec.index(i, j)] = spec.on_border(i, j) || m_hat(i, j) != 0.0;

  GridSpec layer_spec = spec;
  layer_spec.n_theta = n_theta;
  const double step = 2.0 * std::numbers::pi / n_theta;

  ThetaMasks masks;
  masks.reserve(static_cast<std::size_t>(n_theta));
  for (int k = 0; k < n_theta; ++k) {
    std::vector<CellIndex> offsets;
    for (const Vec2& p : footprint.body_points) {
      const Vec2 r = geom::rotate(p, k * step) / spec.resolution;
      const CellIndex o{static_cast<int>(std::floor(r.x() + 0.5)), static_cast<int>(std::floor(r.y() + 0.5))};
      if (std::abs(o.i) >= spec.nx || std::abs(o.j) >= spec.ny)
        throw ConfigError("robot footprint is larger than the grid");
      if (std::find(offsets.begin(), offsets.end(), o) == offsets.end()) offsets.push_back(o);
    }
    int lo_i = 0, hi_i = 0, lo_j = 0, hi_j = 0;
    for (const CellIndex& o : offsets) {
      lo_i = std::min(lo_i, o.i), hi_i = std::max(hi_i, o.i);
      lo_j = std::min(lo_j, o.j), hi_j = std::max(hi_j, o.j);
    }
    // a cell is free when every offset lands in bounds on an unblocked cell:
    // start from the in-bounds window, then knock out cells reaching a blocked one
    ScalarGrid2D mask(layer_spec);
    for (int j = std::max(1, -lo_j); j < std::min(spec.ny - 1, spec.ny - hi_j); ++j)
      for (int i = std::max(1, -lo_i); i < std::min(spec.nx - 1, spec.nx - hi_i); ++i) mask(i, j) = 1.0;
    for (int b = 0; b < spec.ny; ++b)
      for (int a = 0; a < spec.nx; ++a) {
        if (!blocked[spec.index(a, b)]) continue;
        for (const CellIndex& o : offsets) {
          const int i = a - o.i, j = b - o.j;
          if (spec.in_bounds(i, j)) mask(i, j) = 0.0;
        }
      }
    masks.push_back(std::move(mask));
  }
  return masks;
}

double pde_residual(const ScalarGrid2D& h, const ScalarGrid2D& mask, double forcing) {
  const GridSpec& spec = h.spec();
  const double inv = 1.0 / (spec.resolution * spec.resolution);
  double worst = 0.0;
  for (int j = 1; j < spec.ny - 1; ++j)
    for (int i = 1; i < spec.nx - 1; ++i) {
      if (mask(i, j) == 0.0) continue;
      const double lap = (h(i + 1, j) + h(i - 1, j) + h(i, j + 1) + h(i, j - 1) - 4.0 * h(i, j)) * inv;
      worst = std::max(worst, std::abs(lap - forcing));
    }
  return worst;
}

namespace {

LayerSolveReport solve_layer(const ScalarGrid2D& mask, const PoissonConfig& cfg, const ScalarGrid2D* warm,
                             ScalarGrid2D& out) {
  const GridSpec& spec = mask.spec();
  const int nx = spec.nx;
  const std::size_t n = spec.cell_count();
  const auto free = mask.values();
  std::vector<double> h(n, 0.0);

  bool any_free = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (free[k] == 0.0) continue;
    any_free = true;
    if (warm) h[k] = std::max(0.0, warm->values()[k]);
  }
  LayerSolveReport report;
  if (!any_free) {
    report.infeasible = true;
    out = ScalarGrid2D(spec);
    return report;
  }

  const double res2 = spec.resolution * spec.resolution;
  const double frhs = cfg.forcing * res2;
  const double omega = cfg.sor_omega;

  // free interior cells split by colour; border cells are never free after erosion
  std::vector<std::uint32_t> colour_cells[2];
  for (int j = 1; j < spec.ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * nx + i;
      if (free[c] != 0.0) colour_cells[(i + j) & 1].push_back(static_cast<std::uint32_t>(c));
    }

  double* hp = h.data();
  const std::size_t stride = static_cast<std::size_t>(nx);
  auto residual = [&] {
    double worst = 0.0;
    for (const auto& cells : colour_cells)
      for (const std::uint32_t c : cells) {
        const double lap = hp[c + 1] + hp[c - 1] + hp[c + stride] + hp[c - stride] - 4.0 * hp[c];
        worst = std::max(worst, std::abs(lap - frhs));
      }
    return worst / res2;
  };

  report.residual = residual();
  while (report.residual >= cfg.tol && report.iterations < cfg.max_iters) {
    const int sweeps = std::min(cfg.check_every, cfg.max_iters - report.iterations);
    for (int s = 0; s < sweeps; ++s)
      for (const auto& cells : colour_cells)
        for (const std::uint32_t c : cells) {
          const double gs = 0.25 * (hp[c + 1] + hp[c - 1] + hp[c + stride] + hp[c - stride] - frhs);
          hp[c] += omega * (gs - hp[c]);
        }
    report.iterations += sweeps;
    report.residual = residual();
  }
  out = ScalarGrid2D(spec, std::move(h));
  return report;
}

}  // namespace

int PsfSolveResult::total_iterations() const {
  int n = 0;
  for (const auto& l : layers) n += l.iterations;
  return n;
}

double PsfSolveResult::max_residual() const {
  double r = 0.0;
  for (const auto& l : layers) r = std::max(r, l.residual);
  return r;
}

PsfSolveResult solve_psf(const ThetaMasks& masks, const PoissonConfig& cfg, double timestamp,
                         const PsfStack* warm) {
  cfg.validate();
  if (masks.empty()) throw ArgumentError("solve_psf needs at least one orientation layer");
  GridSpec spec = masks.front().spec();
  spec.n_theta = static_cast<int>(masks.size());
  spec.validate();
  for (const auto& m : masks)
    if (!m.spec().same_plane(spec)) throw ArgumentError("orientation masks disagree on grid geometry");

  const bool use_warm = cfg.warm_start && warm != nullptr && warm->spec == spec;

  PsfSolveResult result;
  result.stack = PsfStack(spec, timestamp);
  result.layers.resize(masks.size());

  auto work = [&](std::size_t k) {
    const ScalarGrid2D* seed = use_warm ? &warm->layers[k] : nullptr;
    result.layers[k] = solve_layer(masks[k], cfg, seed, result.stack.layers[k]);
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), masks.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < masks.size(); ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < masks.size(); k += workers) work(k);
      });
  }

  for (std::size_t k = 0; k < result.layers.size(); ++k) {
    const auto& l = result.layers[k];
    if (!l.infeasible && l.residual >= cfg.tol)
      throw SolverError("SOR did not reach tol on layer " + std::to_string(k) + " after " +
                            std::to_string(l.iterations) + " iterations (residual " + std::to_string(l.residual) + ")",
                        l.residual);
  }
  return result;
}

void PsfSnapshot::validate() const {
  if (!curr) throw ArgumentError("snapshot has no current field");
  if (prev) {
    if (!(prev->spec == curr->spec)) throw ArgumentError("snapshot fields disagree on grid geometry");
    if (curr->timestamp == prev->timestamp) throw ArgumentError("degenerate snapshot: t0 == t_-1");
    if (!(curr->timestamp > prev->timestamp)) throw ArgumentError("snapshot times must increase");
  }
}

double h_time_derivative(const PsfSnapshot& snap, const Vec3& q) {
  snap.validate();
  if (!snap.prev) return 0.0;
  return (sample_trilinear(*snap.curr, q) - sample_trilinear(*snap.prev, q)) /
         (snap.curr->timestamp - snap.prev->timestamp);
}

double extrapolate_h(const PsfSnapshot& snap, const Vec3& q, double t) {
  snap.validate();
  const double h0 = sample_trilinear(*snap.curr, q);
  if (!snap.prev || t == snap.curr->timestamp) return h0;
  const double hm1 = sample_trilinear(*snap.prev, q);
  return h0 + (h0 - hm1) / (snap.curr->timestamp - snap.prev->timestamp) * (t - snap.curr->timestamp);
}

}  // namespace lsf
