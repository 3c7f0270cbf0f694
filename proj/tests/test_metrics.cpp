#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lsf/metrics.hpp"
#include "lsf/scenario_io.hpp"
#include "support.hpp"

using namespace lsf;

namespace {

/// F(2, m) has a closed-form quantile: x = (m / 2) ((1 - q)^(-2/m) - 1).
double f2_quantile(double q, double m) { return 0.5 * m * (std::pow(1.0 - q, -2.0 / m) - 1.0); }

EpisodeMetrics run(FilterMode mode, bool success, double rob = 0.0, double opt = 0.0) {
  EpisodeMetrics m;
  m.mode = mode;
  m.success = success;
  m.collision = !success;
  m.j_robustness = rob;
  m.j_optimality = opt;
  return m;
}

}  // namespace

TEST(Robustness, MinimumOfTrace) {
  const std::vector<double> flat{0.5, 0.5, 0.5}, dip{0.5, 0.2, 0.4}, crash{0.3, -0.1, 0.2};
  EXPECT_EQ(robustness(flat), 0.5);
  EXPECT_EQ(robustness(dip), 0.2);
  EXPECT_LT(robustness(crash), 0.0);
  EXPECT_THROW(robustness(std::vector<double>{}), ArgumentError);
}

TEST(MeasuredCost, ArithmeticAndLinearity) {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const std::vector<Vec3> d{Vec3::Zero(), Vec3{1.0, 0.0, 0.0}};
  EXPECT_EQ(measured_cost(d, d, I), 0.0);
  const std::vector<Vec3> s{Vec3{1.0, 0.0, 0.0}, Vec3{1.0, 0.0, 0.0}};
  EXPECT_EQ(measured_cost(s, d, I), 1.0);
  EXPECT_EQ(measured_cost(s, d, 3.0 * I), 3.0);
  EXPECT_THROW(measured_cost(s, std::vector<Vec3>(1), I), ArgumentError);
}

TEST(NormalizeOptimality, ZeroIdealGuard) {
  EpisodeMetrics m;
  m.measured_cost = 4.0;
  m.j_ideal = 0.0;
  normalize_optimality(m);
  EXPECT_TRUE(m.unnormalized);
  EXPECT_EQ(m.j_optimality, 4.0);
  m.j_ideal = 2.0;
  normalize_optimality(m);
  EXPECT_FALSE(m.unnormalized);
  EXPECT_EQ(m.j_optimality, 2.0);
}

TEST(Hotelling, MatchesClosedFormComputation) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  std::vector<Vec2> pts;
  for (int k = 0; k < 12; ++k) pts.emplace_back(1.0 + 0.3 * nd(rng), 2.0 + 0.1 * nd(rng) + 0.05 * k);
  const auto e = hotelling_ellipse(pts, 0.85);
  ASSERT_TRUE(e);

  const double n = static_cast<double>(pts.size());
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const Vec2& p : pts) {
    sxx += (p.x() - mean.x()) * (p.x() - mean.x());
    syy += (p.y() - mean.y()) * (p.y() - mean.y());
    sxy += (p.x() - mean.x()) * (p.y() - mean.y());
  }
  sxx /= n - 1, syy /= n - 1, sxy /= n - 1;
  // 2x2 eigenvalues by the quadratic formula
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double l1 = 0.5 * tr + std::sqrt(0.25 * tr * tr - det), l2 = 0.5 * tr - std::sqrt(0.25 * tr * tr - det);
  const double t2 = 2.0 * (n - 1) / (n - 2) * f2_quantile(0.85, n - 2);
  EXPECT_NEAR(e->t2_critical, t2, 1e-9);
  EXPECT_NEAR(e->center.x(), mean.x(), 1e-12);
  EXPECT_NEAR(e->semi_major, std::sqrt(t2 * l1 / n), 1e-12);
  EXPECT_NEAR(e->semi_minor, std::sqrt(t2 * l2 / n), 1e-12);
  EXPECT_NEAR(std::tan(e->angle), (l1 - sxx) / sxy, 1e-9);
}

TEST(Hotelling, OmittedWhenDegenerate) {
  std::string why;
  const std::vector<Vec2> same(5, Vec2{1.0, 2.0});
  EXPECT_FALSE(hotelling_ellipse(same, 0.85, &why));
  EXPECT_EQ(why, "singular covariance");
  const std::vector<Vec2> two{{0.0, 0.0}, {1.0, 1.0}};
  EXPECT_FALSE(hotelling_ellipse(two, 0.85, &why));
  EXPECT_EQ(why, "fewer than 3 samples");
}

TEST(Hotelling, PolylineLiesOnTheBoundary) {
  Ellipse e;
  e.center = {1.0, -1.0};
  e.semi_major = 2.0;
  e.semi_minor = 0.5;
  e.angle = 0.4;
  const auto pts = e.polyline(64);
  EXPECT_EQ(pts.size(), 65u);
  EXPECT_EQ(pts.front(), pts.back());
  for (const Vec2& p : pts) {
    const Vec2 d = geom::rotate(p - e.center, -e.angle);
    EXPECT_NEAR(std::pow(d.x() / 2.0, 2) + std::pow(d.y() / 0.5, 2), 1.0, 1e-12);
  }
  EXPECT_TRUE(e.contains(e.center));
  EXPECT_FALSE(e.contains({4.0, 4.0}));
}

// Coverage of the true mean over repeated Gaussian draws.
TEST(HotellingProperty, EightyFivePercentCoverage) {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> nd;
  const Vec2 mu{0.4, 1.7};
  Eigen::Matrix2d L;
  L << 0.3, 0.0, 0.2, 0.1;
  int hits = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    std::vector<Vec2> pts;
    for (int k = 0; k < 10; ++k) pts.push_back(mu + L * Vec2{nd(rng), nd(rng)});
    const auto e = hotelling_ellipse(pts, 0.85);
    ASSERT_TRUE(e);
    hits += e->contains(mu);
  }
  const double coverage = static_cast<double>(hits) / trials;
  EXPECT_GE(coverage, 0.80);
  EXPECT_LE(coverage, 0.90);
}

TEST(Aggregate, CountsAndExclusions) {
  std::vector<EpisodeMetrics> runs;
  for (int k = 0; k < 10; ++k) runs.push_back(run(FilterMode::Multistage, k < 7, 0.1 * k, 1.0 + 0.01 * k * k));
  runs.push_back(run(FilterMode::Realtime, false));
  const auto s = aggregate(runs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].mode, FilterMode::Realtime);
  EXPECT_EQ(s[0].successes, 0);
  EXPECT_EQ(s[0].failures, 1);
  EXPECT_FALSE(s[0].ellipse);
  EXPECT_EQ(s[1].successes, 7);
  EXPECT_EQ(s[1].failures, 3);
  EXPECT_NEAR(s[1].mean.x(), 0.3, 1e-12);
  EXPECT_TRUE(s[1].ellipse);
}

TEST(FilterModeNames, ParseAndPrint) {
  for (FilterMode m : {FilterMode::Predictive, FilterMode::Realtime, FilterMode::Multistage})
    EXPECT_EQ(parse_filter_mode(to_string(m)), m);
  EXPECT_THROW(parse_filter_mode("hybrid"), ArgumentError);
}

class CorridorIdeal : public ::testing::Test {
 protected:
  void SetUp() override { sc = io::load_scenario(test::scenario_path("corridor")); }
  Scenario sc;
};

TEST_F(CorridorIdeal, ScalesWithRAndTickRate) {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const IdealResult a = ideal_cost(sc, I, 0.01);
  const IdealResult b = ideal_cost(sc, 2.0 * I, 0.01);
  ASSERT_GT(a.plan_cost, 0.0);
  EXPECT_NEAR(b.plan_cost, 2.0 * a.plan_cost, 1e-6 * a.plan_cost);
  EXPECT_NEAR(a.j_ideal, a.plan_cost * sc.mpc.dt / 0.01, 1e-12);
  EXPECT_GE(a.plan.min_margin(), -10.0 * sc.mpc.qp_tol);
}

// Piecewise-constant vx enumeration over the whole episode (5 pieces, levels 0..1 by 1/8).
TEST_F(CorridorIdeal, WithinFivePercentOfEnumeration) {
  const IdealResult r = ideal_cost(sc, Eigen::Matrix3d::Identity(), 0.01);
  const StackSequenceField field(r.truth);
  const int horizon = static_cast<int>(r.plan.us.size());
  ASSERT_EQ(horizon % 5, 0);
  const int per = horizon / 5, levels = 9;
  const double dt = sc.mpc.dt, rho = sc.mpc.rho;
  double best = std::numeric_limits<double>::infinity();
  int total = 1;
  for (int k = 0; k < 5; ++k) total *= levels;
  for (int idx = 0; idx < total; ++idx) {
    std::vector<Vec3> us;
    int rem = idx;
    for (int p = 0; p < 5; ++p, rem /= levels)
      for (int s = 0; s < per; ++s) us.push_back({(rem % levels) / 8.0, 0.0, 0.0});
    double cost = 0.0;
    for (const Vec3& u : us) cost += (u.x() - 1.0) * (u.x() - 1.0);
    if (cost >= best) continue;
    Vec3 x = sc.robot.start.vec();
    double prev = field.value(x, 0.0);
    bool ok = true;
    for (int i = 1; ok && i <= horizon; ++i) {
      x += dt * us[static_cast<std::size_t>(i - 1)];
      ok = field.contains(x) && field.value(x, i * dt) - rho * prev >= 0.0;
      if (ok) prev = field.value(x, i * dt);
    }
    if (ok) best = cost;
  }
  ASSERT_TRUE(std::isfinite(best));
  EXPECT_LE(r.plan_cost, 1.05 * best);
}

TEST(Ideal, NoConflictIsZero) {
  Scenario sc = io::load_scenario(test::scenario_path("static_wall"));
  const IdealResult r = ideal_cost(sc, sc.mpc.R, 0.01);
  EXPECT_EQ(r.j_ideal, 0.0);
  EXPECT_TRUE(r.plan.nominal_feasible);
}

TEST(Ideal, ImpossibleScenarioIsUnscorable) {
  Scenario sc = io::load_scenario(test::scenario_path("corridor"));
  // a wall closing in faster than the robot can retreat
  sc.moving_obstacles.push_back({0.6, {-1.0, 0.0}, {2.0, 0.0}, 0.0});
  sc.moving_obstacles.push_back({0.6, {2.0, 0.0}, {-2.0, 0.0}, 0.0});
  EXPECT_THROW(ideal_cost(sc, sc.mpc.R, 0.01), ConfigError);
}
