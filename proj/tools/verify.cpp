#include "verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "lsf/dense_qp.hpp"
#include "lsf/harness.hpp"

namespace lsf::tools {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

CheckResult interpolation_nodes(std::mt19937_64& rng) {
  GridSpec spec{Vec2(-0.3, 0.2), 0.07, 9, 7, 6};
  PsfStack st(spec, 0.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& layer : st.layers)
    for (double& v : layer.values()) v = u(rng);
  int bad = 0;
  for (int k = 0; k < spec.n_theta; ++k)
    for (int j = 0; j < spec.ny; ++j)
      for (int i = 0; i < spec.nx; ++i) {
        const Vec2 p = cell_to_world(spec, {i, j});
        const double v = sample_trilinear(st, {p.x(), p.y(), spec.layer_angle(k)});
        const double w = sample_trilinear(st, {p.x(), p.y(), spec.layer_angle(k) + 2.0 * std::numbers::pi});
        if (v != st.layers[static_cast<std::size_t>(k)](i, j) || std::abs(v - w) > 1e-12) ++bad;
      }
  return {"interpolation exact at nodes and 2pi-periodic", bad == 0, std::to_string(bad) + " mismatches"};
}

CheckResult confidence_bounds(std::mt19937_64& rng) {
  GridSpec spec{Vec2::Zero(), 0.1, 5, 5, 1};
  MapperConfig cfg;
  ScalarGrid2D gamma(spec, 0.0), mbar(spec, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool ok = true;
  for (int step = 0; step < 20000 && ok; ++step) {
    for (double& v : mbar.values()) v = 4.0 * u(rng);
    gamma = update_confidence(gamma, mbar, cfg, 1e-3 + u(rng));
    for (double v : gamma.values()) ok = ok && v >= 0.0 && v <= 1.0;
  }
  return {"confidence stays in [0, 1]", ok, "20000 random updates"};
}

CheckResult psf_invariants(std::mt19937_64& rng) {
  GridSpec spec{Vec2::Zero(), 0.05, 40, 32, 1};
  ScalarGrid2D occ(spec, 0.0);
  std::uniform_int_distribution<int> ci(2, spec.nx - 3), cj(2, spec.ny - 3);
  for (int k = 0; k < 6; ++k) {
    const int i0 = ci(rng), j0 = cj(rng);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (spec.in_bounds(i0 + di, j0 + dj)) occ(i0 + di, j0 + dj) = 1.0;
  }
  PoissonConfig cfg;
  const ThetaMasks masks = erode_free_space(occ, RobotFootprint::point(), 1);
  const PsfSolveResult r = solve_psf(masks, cfg, 0.0);
  const double res = pde_residual(r.stack.layers[0], masks[0], cfg.forcing);
  bool positive = true, zero = true;
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const double h = r.stack.layers[0](i, j);
      if (masks[0](i, j) != 0.0) positive = positive && h > 0.0;
      else zero = zero && h == 0.0;
    }
  return {"PSF residual, positivity, Dirichlet zeros", res < cfg.tol && positive && zero,
          "residual " + fmt(res)};
}

CheckResult issf_vs_qp(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vec3 a(n(rng), n(rng), n(rng));
    IssfConfig cfg;
    cfg.alpha = u(rng);
    cfg.epsilon = u(rng);
    const double h = std::abs(n(rng)), dh = n(rng);
    const RomCommand mu_p = RomCommand::from(Vec3(n(rng), n(rng), n(rng)));
    const FilterResult fr = issf_project(a, h, dh, mu_p, cfg);
    DenseQp qp;
    qp.H = Eigen::Matrix3d::Identity();
    qp.g = -mu_p.vec();
    qp.A_in = a.transpose();
    qp.b_in = Eigen::VectorXd::Constant(1, -cfg.alpha * h - dh + a.squaredNorm() / cfg.epsilon);
    const QpSolution s = solve_dense_qp(qp);
    worst = std::max(worst, (s.x - fr.mu_s.vec()).lpNorm<Eigen::Infinity>());
  }
  return {"ISSf closed form matches dense QP", worst < 1e-9, "max deviation " + fmt(worst)};
}

CheckResult plan_dynamics() {
  GridSpec spec{Vec2(-1.0, -0.5), 0.05, 61, 21, 1};
  ScalarGrid2D occ(spec, 0.0);
  for (int j = 0; j < spec.ny; ++j) occ(spec.nx - 20, j) = 1.0;
  const ThetaMasks masks = erode_free_space(occ, RobotFootprint::point(), 1);
  auto stack = std::make_shared<const PsfStack>(solve_psf(masks, PoissonConfig{}, 0.0).stack);
  MpcConfig cfg;
  const Plan p = plan({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, PsfSnapshot{stack, nullptr}, cfg, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i < p.us.size(); ++i) err = std::max(err, (p.xs[i + 1] - p.xs[i] - cfg.dt * p.us[i]).norm());
  const MarginReport rep = check_plan(p, PsfSnapshot{stack, nullptr}, cfg, 0.0);
  const bool ok = err < 1e-12 && p.converged && rep.min_margin >= -10.0 * cfg.qp_tol;
  return {"plan dynamics exact and margins hold", ok, "dyn err " + fmt(err) + ", min margin " + fmt(rep.min_margin)};
}

CheckResult episode_determinism() {
  Scenario sc;
  sc.name = "verify";
  sc.arena = {-1.0, 1.5, -0.8, 0.8};
  sc.grid = grid_for_arena(sc.arena, 0.05, 1);
  sc.robot.footprint = RobotFootprint::point();
  sc.robot.padding = 0.05;
  sc.static_obstacles.push_back({{0.8, -0.3}, {1.0, -0.3}, {1.0, 0.3}, {0.8, 0.3}});
  sc.nominal.segments.push_back({0.0, {0.8, 0.0, 0.0}});
  sc.sensor.range_noise_std = 0.005;
  sc.sensor.dropout_prob = 0.05;
  sc.duration = 1.5;
  sc.validate();
  EpisodeOptions opt;
  opt.rates = sc.rates;
  opt.seed = 7;
  const EpisodeOutput a = run_episode(sc, opt);
  const EpisodeOutput b = run_episode(sc, opt);
  const bool same = metrics_json(a).dump() == metrics_json(b).dump();
  return {"episode determinism", same && !a.log.error && a.metrics.success,
          a.log.error ? a.log.error_message : (a.metrics.success ? "ok" : "collision")};
}

}  // namespace

std::vector<CheckResult> run_verify(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  auto guarded = [&](auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"(check raised)", false, e.what()});
    }
  };
  guarded([&] { return interpolation_nodes(rng); });
  guarded([&] { return confidence_bounds(rng); });
  guarded([&] { return psf_invariants(rng); });
  guarded([&] { return issf_vs_qp(rng); });
  guarded([&] { return plan_dynamics(); });
  guarded([&] { return episode_determinism(); });
  return out;
}

}  // namespace lsf::tools
