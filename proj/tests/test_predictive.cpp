#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "lsf/predictive.hpp"
#include "lsf/scenario_io.hpp"
#include "support.hpp"

using namespace lsf;

namespace {

/// Static corridor field: empty arena, walls = grid border.
PsfSnapshot corridor_snapshot(const Scenario& sc) {
  const ThetaMasks masks = erode_free_space(ScalarGrid2D(sc.grid), sc.robot.erosion_footprint(0.025), sc.grid.n_theta);
  return {std::make_shared<PsfStack>(solve_psf(masks, sc.poisson, 0.0).stack), nullptr};
}

MpcConfig corridor_config(const Scenario& sc) {
  MpcConfig c = sc.mpc;
  c.R = Eigen::Matrix3d::Identity();
  return c;
}

/// Piecewise-constant vx sequences (4 pieces of N/4 steps, levels 0..1 by 1/8),
/// feasible iff every true DCBF margin is nonnegative. Returns the cheapest cost.
double enumeration_oracle(const PsfSnapshot& snap, const MpcConfig& cfg, double vx_d) {
  const ExtrapolatedField field(snap);
  const int pieces = 4, levels = 9;
  const int per = cfg.horizon / pieces;
  double best = std::numeric_limits<double>::infinity();
  int code[4];
  for (int idx = 0; idx < levels * levels * levels * levels; ++idx) {
    int rem = idx;
    for (int& c : code) {
      c = rem % levels;
      rem /= levels;
    }
    std::vector<Vec3> us;
    for (int p = 0; p < pieces; ++p)
      for (int s = 0; s < per; ++s) us.push_back({code[p] / 8.0, 0.0, 0.0});
    const auto xs = rollout(Vec3::Zero(), us, cfg.dt);
    bool ok = true;
    double prev = field.value(xs[0], 0.0);
    for (int i = 1; ok && i <= cfg.horizon; ++i) {
      if (!field.contains(xs[static_cast<std::size_t>(i)])) {
        ok = false;
        break;
      }
      const double h = field.value(xs[static_cast<std::size_t>(i)], i * cfg.dt);
      ok = h - cfg.rho * prev >= 0.0;
      prev = h;
    }
    if (!ok) continue;
    double cost = 0.0;
    for (const Vec3& u : us) cost += (u.x() - vx_d) * (u.x() - vx_d);
    best = std::min(best, cost);
  }
  return best;
}

PsfSnapshot uniform_snapshot(double h_prev, double h_curr, double dt) {
  const GridSpec g = test::square_grid(11, 0.1, 1);
  auto prev = std::make_shared<PsfStack>(g, -dt);
  auto curr = std::make_shared<PsfStack>(g, 0.0);
  for (double& v : prev->layers[0].values()) v = h_prev;
  for (double& v : curr->layers[0].values()) v = h_curr;
  return {curr, prev};
}

}  // namespace

TEST(MpcConfig, Validation) {
  MpcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rho = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.R(0, 1) = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.R(2, 2) = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MpcConfig{};
  c.horizon = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Rollout, ExactIntegration) {
  const std::vector<Vec3> us{{1.0, 0.0, 0.0}, {0.0, 2.0, 0.5}};
  const auto xs = rollout({0.5, 0.5, 0.0}, us, 0.1);
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(xs[1], Vec3(0.6, 0.5, 0.0));
  EXPECT_NEAR((xs[2] - Vec3(0.6, 0.7, 0.05)).norm(), 0.0, 1e-15);
}

class CorridorPlan : public ::testing::Test {
 protected:
  void SetUp() override {
    sc = io::load_scenario(test::scenario_path("corridor"));
    snap = corridor_snapshot(sc);
    cfg = corridor_config(sc);
  }
  Scenario sc;
  PsfSnapshot snap;
  MpcConfig cfg;
};

TEST_F(CorridorPlan, StationaryNominalIsReturnedUntouched) {
  const Plan p = plan({0.0, 0.0, 0.0}, {}, snap, cfg, 0.0);
  EXPECT_TRUE(p.nominal_feasible);
  EXPECT_EQ(p.cost, 0.0);
  for (const Vec3& u : p.us) EXPECT_EQ(u, Vec3::Zero());
  for (const Vec3& x : p.xs) EXPECT_EQ(x, Vec3::Zero());
  const MarginReport rep = check_plan(p, snap, cfg, 0.0);
  const double h0 = sample_trilinear(*snap.curr, Vec3::Zero());
  for (double m : rep.margins) EXPECT_NEAR(m, (1.0 - cfg.rho) * h0, 1e-12);
  EXPECT_FALSE(rep.any_flagged());
}

TEST_F(CorridorPlan, SlowNominalIsFeasibleAndFree) {
  const Plan p = plan({0.0, 0.0, 0.0}, {0.05, 0.0, 0.0}, snap, cfg, 0.0);
  EXPECT_TRUE(p.nominal_feasible);
  EXPECT_EQ(p.cost, 0.0);
  for (const Vec3& u : p.us) EXPECT_EQ(u, Vec3(0.05, 0.0, 0.0));
}

TEST_F(CorridorPlan, HeadOnPlanBeatsEnumerationOracle) {
  const auto t0 = std::chrono::steady_clock::now();
  const Plan p = plan({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, snap, cfg, 0.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_TRUE(p.converged);
  EXPECT_FALSE(p.nominal_feasible);
  EXPECT_LT(secs, 1.0);
  const MarginReport rep = check_plan(p, snap, cfg, 0.0);
  EXPECT_GE(rep.min_margin, -10.0 * cfg.qp_tol);
  const double oracle = enumeration_oracle(snap, cfg, 1.0);
  ASSERT_TRUE(std::isfinite(oracle));
  EXPECT_LE(p.cost, 1.05 * oracle);
  EXPECT_GT(p.cost, 0.0);
  // decelerates: the final command is slower than the first
  EXPECT_LT(p.us.back().x(), p.us.front().x());
}

TEST_F(CorridorPlan, DynamicsExactAndMeritMonotone) {
  for (double vx : {0.6, 1.0, 1.5}) {
    const Plan p = plan({0.2, 0.05, 0.0}, {vx, 0.0, 0.0}, snap, cfg, 0.0);
    ASSERT_EQ(p.xs.size(), p.us.size() + 1);
    EXPECT_EQ(p.xs.front(), Vec3(0.2, 0.05, 0.0));
    for (std::size_t i = 0; i < p.us.size(); ++i)
      EXPECT_LT((p.xs[i + 1] - p.xs[i] - cfg.dt * p.us[i]).lpNorm<Eigen::Infinity>(), 1e-15);
    for (std::size_t k = 1; k < p.merit_trace.size(); ++k) EXPECT_LE(p.merit_trace[k], p.merit_trace[k - 1]);
  }
}

// For feasible plans from h(xi_0) >= 0, h(xi_i) >= rho^i h(xi_0) - accumulated slack.
TEST_F(CorridorPlan, ContractionBound) {
  const Plan p = plan({0.0, 0.0, 0.0}, {1.2, 0.1, 0.0}, snap, cfg, 0.0);
  const ExtrapolatedField field(snap);
  const double h0 = field.value(p.xs[0], 0.0);
  double slack = 0.0;
  double bound = h0;
  for (std::size_t i = 1; i < p.xs.size(); ++i) {
    slack = cfg.rho * slack + p.slack_used[i - 1];
    bound *= cfg.rho;
    EXPECT_GE(field.value(p.xs[i], static_cast<double>(i) * cfg.dt), bound - slack - 1e-12);
  }
}

TEST_F(CorridorPlan, WarmStartShiftsPreviousPlan) {
  const Plan first = plan({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, snap, cfg, 0.0);
  const RomState next = RomState::from(first.xs[1]);
  const Plan cold = plan(next, {1.0, 0.0, 0.0}, snap, cfg, cfg.dt);
  const Plan warm = plan(next, {1.0, 0.0, 0.0}, snap, cfg, cfg.dt, &first);
  EXPECT_LE(warm.sqp_iters, cold.sqp_iters);
  EXPECT_NEAR(warm.cost, cold.cost, 1e-3 * std::max(1.0, cold.cost));
}

TEST_F(CorridorPlan, InputBoundsAreRespected) {
  MpcConfig c = cfg;
  c.input_bounds = Vec3{0.3, 0.3, 0.5};
  const Plan p = plan({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, snap, c, 0.0);
  for (const Vec3& u : p.us) EXPECT_TRUE((u.cwiseAbs().array() <= c.input_bounds->array() + 1e-12).all());
}

TEST_F(CorridorPlan, HandBuiltPlanIntoWallIsFlagged) {
  Plan bad;
  bad.us.assign(static_cast<std::size_t>(cfg.horizon), Vec3{1.0, 0.0, 0.0});
  bad.xs = rollout(Vec3::Zero(), bad.us, cfg.dt);
  const MarginReport rep = check_plan(bad, snap, cfg, 0.0);
  EXPECT_TRUE(rep.any_flagged());
  EXPECT_LT(rep.min_margin, 0.0);
  EXPECT_TRUE(rep.flagged.back());
}

TEST_F(CorridorPlan, StartOutsideFieldIsDomainError) {
  EXPECT_THROW(plan({5.0, 0.0, 0.0}, {}, snap, cfg, 0.0), DomainError);
}

TEST(PlanInfeasible, ShrinkingFieldWithoutSlacksThrows) {
  const PsfSnapshot snap = uniform_snapshot(1.0, 0.5, 0.1);
  MpcConfig c;
  c.slack_penalty = 0.0;
  EXPECT_THROW(plan({0.5, 0.5, 0.0}, {}, snap, c, 0.0), InfeasibleError);

  c.slack_penalty.reset();
  const Plan soft = plan({0.5, 0.5, 0.0}, {}, snap, c, 0.0);
  double used = 0.0;
  for (double s : soft.slack_used) used += s;
  EXPECT_GT(used, 0.0);
}

TEST(PlanOnField, NominalSequenceLengthMustMatch) {
  const PsfSnapshot snap = uniform_snapshot(1.0, 1.0, 0.1);
  const ExtrapolatedField field(snap);
  std::vector<Vec3> nominal(3, Vec3::Zero());
  EXPECT_THROW(plan_on_field(field, {0.5, 0.5, 0.0}, nominal, MpcConfig{}, 0.0), ArgumentError);
}
