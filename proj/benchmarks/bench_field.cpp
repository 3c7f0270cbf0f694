// Perception side: mapper step, erosion, PSF solves.

#include <benchmark/benchmark.h>

#include <random>

#include "lsf/scenario_io.hpp"
#include "lsf/sim.hpp"

using namespace lsf;

namespace {

Scenario preset(const char* name) { return io::load_scenario(std::string(LSF_SCENARIO_DIR) + "/" + name + ".json"); }

ScalarGrid2D disk_mask(double res) {
  const int half = static_cast<int>(std::ceil(0.9 / res));
  GridSpec g;
  g.nx = g.ny = 2 * half + 1;
  g.resolution = res;
  g.origin = {-half * res, -half * res};
  ScalarGrid2D mask(g, 0.0);
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) mask(i, j) = cell_to_world(g, {i, j}).norm() < 0.8 ? 1.0 : 0.0;
  return mask;
}

}  // namespace

static void BM_MapperStep(benchmark::State& state) {
  const Scenario sc = preset("ball_1.0");
  std::mt19937_64 rng(1);
  const PointCloud cloud = scan(sc, initial_world(sc), rng);
  MapperState m = make_mapper_state(sc.grid, sc.mapper, cloud.timestamp - 1.0);
  double t = cloud.timestamp;
  for (auto _ : state) {
    PointCloud c = cloud;
    c.timestamp = (t += 1.0 / 15.0);
    m = step_mapper(m, c, sc.mapper, sc.grid);
    benchmark::DoNotOptimize(m.m_hat);
  }
}
BENCHMARK(BM_MapperStep)->Unit(benchmark::kMillisecond);

static void BM_Erode16(benchmark::State& state) {
  const Scenario sc = preset("ball_1.0");
  const ScalarGrid2D occ = rasterize_occupancy(sc, 1.0);
  const RobotFootprint fp = sc.robot.erosion_footprint(0.5 * sc.grid.resolution);
  for (auto _ : state) benchmark::DoNotOptimize(erode_free_space(occ, fp, sc.grid.n_theta));
}
BENCHMARK(BM_Erode16)->Unit(benchmark::kMillisecond);

static void BM_PoissonDiskCold(benchmark::State& state) {
  const ScalarGrid2D mask = disk_mask(state.range(0) / 1000.0);
  const PoissonConfig cfg;
  int sweeps = 0;
  for (auto _ : state) {
    const PsfSolveResult r = solve_psf({mask}, cfg, 0.0);
    sweeps = r.total_iterations();
    benchmark::DoNotOptimize(r.stack);
  }
  state.counters["sweeps"] = sweeps;
}
BENCHMARK(BM_PoissonDiskCold)->Arg(40)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);

// One PSF frame of the ball scenario warm-started from the frame before.
static void BM_PsfFrameWarm(benchmark::State& state) {
  const Scenario sc = preset("ball_1.0");
  const RobotFootprint fp = sc.robot.erosion_footprint(0.5 * sc.grid.resolution);
  const PsfStack prev = solve_psf(erode_free_space(rasterize_occupancy(sc, 1.0), fp, sc.grid.n_theta), sc.poisson, 1.0).stack;
  const ThetaMasks next = erode_free_space(rasterize_occupancy(sc, 1.0 + 1.0 / 15.0), fp, sc.grid.n_theta);
  int sweeps = 0;
  for (auto _ : state) {
    const PsfSolveResult r = solve_psf(next, sc.poisson, 1.0 + 1.0 / 15.0, &prev);
    sweeps = r.total_iterations();
    benchmark::DoNotOptimize(r.stack);
  }
  state.counters["sweeps"] = sweeps;
}
BENCHMARK(BM_PsfFrameWarm)->Unit(benchmark::kMillisecond);
