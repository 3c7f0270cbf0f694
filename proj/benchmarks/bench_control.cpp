// Control side: ISSf projection, dense QP, predictive plans.

#include <benchmark/benchmark.h>

#include <random>

#include "lsf/dense_qp.hpp"
#include "lsf/predictive.hpp"
#include "lsf/realtime.hpp"
#include "lsf/scenario_io.hpp"

using namespace lsf;

namespace {

Scenario preset(const char* name) { return io::load_scenario(std::string(LSF_SCENARIO_DIR) + "/" + name + ".json"); }

PsfSnapshot static_snapshot(const Scenario& sc) {
  const ThetaMasks masks =
      erode_free_space(ScalarGrid2D(sc.grid), sc.robot.erosion_footprint(0.5 * sc.grid.resolution), sc.grid.n_theta);
  return {std::make_shared<PsfStack>(solve_psf(masks, sc.poisson, 0.0).stack), nullptr};
}

}  // namespace

static void BM_IssfProject(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<Vec3> as(256), mus(256);
  for (auto& a : as) a = {nd(rng), nd(rng), nd(rng)};
  for (auto& m : mus) m = {nd(rng), nd(rng), nd(rng)};
  const IssfConfig cfg;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(issf_project(as[k & 255], 0.2, 0.0, RomCommand::from(mus[k & 255]), cfg));
    ++k;
  }
}
BENCHMARK(BM_IssfProject);

static void BM_FilterOnField(benchmark::State& state) {
  const Scenario sc = preset("corridor");
  const PsfSnapshot snap = static_snapshot(sc);
  for (auto _ : state) benchmark::DoNotOptimize(filter({1.0, 0.2, 0.0}, {1.5, 0.1, 0.0}, snap, sc.issf, 0.0));
}
BENCHMARK(BM_FilterOnField);

static void BM_DenseQp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  DenseQp qp;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n * n; ++i) m.data()[i] = nd(rng);
  qp.H = m * m.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  qp.g = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
  qp.A_in = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return nd(rng); });
  qp.b_in = Eigen::VectorXd::NullaryExpr(n, [&] { return nd(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(solve_dense_qp(qp));
}
BENCHMARK(BM_DenseQp)->Arg(20)->Arg(60)->Arg(120);

static void BM_PlanCorridorHeadOn(benchmark::State& state) {
  const Scenario sc = preset("corridor");
  const PsfSnapshot snap = static_snapshot(sc);
  int iters = 0;
  for (auto _ : state) {
    const Plan p = plan({1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, snap, sc.mpc, 0.0);
    iters = p.sqp_iters;
    benchmark::DoNotOptimize(p.us);
  }
  state.counters["sqp_iters"] = iters;
}
BENCHMARK(BM_PlanCorridorHeadOn)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
