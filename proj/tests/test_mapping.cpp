#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lsf/mapping.hpp"
#include "support.hpp"

using namespace lsf;
using lsf::test::square_grid;

namespace {

/// Direct double sum over the kernel support.
ScalarGrid2D brute_convolve(const ScalarGrid2D& m0, int r, double sigma) {
  const GridSpec& g = m0.spec();
  ScalarGrid2D out(g, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double acc = 0.0;
      for (int b = j - r; b <= j + r; ++b)
        for (int a = i - r; a <= i + r; ++a) {
          if (!g.in_bounds(a, b)) continue;
          const double d2 = (a - i) * (a - i) + (b - j) * (b - j);
          if (d2 > r * r) continue;
          acc += m0(a, b) * std::exp(-d2 / (2 * sigma * sigma));
        }
      out(i, j) = acc;
    }
  return out;
}

int transitions(const ScalarGrid2D& a, const ScalarGrid2D& b) {
  int n = 0;
  for (std::size_t k = 0; k < a.values().size(); ++k) n += a.values()[k] != b.values()[k];
  return n;
}

}  // namespace

TEST(MapperConfig, Validation) {
  MapperConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau_low = 0.7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MapperConfig{};
  c.beta_minus = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MapperConfig{};
  c.sigma_switch = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ProjectCloud, EmptyDuplicateAndOutside) {
  const GridSpec g = square_grid(10, 0.1);
  PointCloud c;
  EXPECT_EQ(project_cloud(g, c), ScalarGrid2D(g, 0.0));
  c.points = {{0.31, 0.52}, {0.32, 0.49}, {-3.0, 0.0}};
  const ScalarGrid2D m = project_cloud(g, c);
  const CellIndex cell = *world_to_cell(g, {0.31, 0.52});
  EXPECT_EQ(m(cell.i, cell.j), 1.0);
  double total = 0.0;
  for (double v : m.values()) total += v;
  EXPECT_EQ(total, 1.0);
}

TEST(Convolve, HandEvaluatedKernel) {
  const GridSpec g = square_grid(7, 0.1);
  ScalarGrid2D m0(g, 0.0);
  m0(3, 3) = 1.0;
  MapperConfig c;
  c.kernel_radius_cells = 1;
  c.kernel_sigma = 1.0;
  const ScalarGrid2D m = convolve(m0, c);
  EXPECT_DOUBLE_EQ(m(3, 3), 1.0);
  EXPECT_NEAR(m(4, 3), 0.6065306597, 1e-9);
  EXPECT_NEAR(m(3, 2), 0.6065306597, 1e-9);
  // diagonal at distance sqrt(2) > r = 1 falls outside the truncated support
  EXPECT_EQ(m(4, 4), 0.0);

  c.kernel_radius_cells = 2;
  const ScalarGrid2D m2 = convolve(m0, c);
  EXPECT_NEAR(m2(4, 4), 0.3678794412, 1e-9);

  m0(4, 3) = 1.0;
  const ScalarGrid2D m3 = convolve(m0, c);
  EXPECT_NEAR(m3(3, 3), 1.0 + std::exp(-0.5), 1e-12);
  EXPECT_NEAR(m3(4, 3), 1.0 + std::exp(-0.5), 1e-12);
}

TEST(Convolve, MatchesBruteForceOnRandomMaps) {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution occ(0.1);
  std::uniform_int_distribution<int> radius(0, 3);
  std::uniform_real_distribution<double> sig(0.5, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const GridSpec g = square_grid(12, 0.05);
    ScalarGrid2D m0(g, 0.0);
    for (double& v : m0.values()) v = occ(rng) ? 1.0 : 0.0;
    MapperConfig c;
    c.kernel_radius_cells = radius(rng);
    c.kernel_sigma = sig(rng);
    const ScalarGrid2D fast = convolve(m0, c);
    const ScalarGrid2D slow = brute_convolve(m0, c.kernel_radius_cells, c.kernel_sigma);
    for (std::size_t k = 0; k < fast.values().size(); ++k) {
      ASSERT_NEAR(fast.values()[k], slow.values()[k], 1e-12);
      ASSERT_GE(fast.values()[k], m0.values()[k]);
    }
  }
}

TEST(UpdateConfidence, ExactExponentialSteps) {
  const GridSpec g = square_grid(3, 0.1);
  MapperConfig c;
  c.beta_minus = 2.0;
  c.beta_plus = 3.0;
  c.sigma_switch = 1.0;
  ScalarGrid2D gamma(g, 0.5), mbar(g, 0.0);
  EXPECT_NEAR(update_confidence(gamma, mbar, c, 0.1)(1, 1), 0.5 * std::exp(-0.2), 1e-12);
  EXPECT_NEAR(update_confidence(gamma, mbar, c, 0.1)(1, 1), 0.40936537653899, 1e-10);
  gamma = ScalarGrid2D(g, 0.0);
  mbar = ScalarGrid2D(g, 1.0);
  EXPECT_NEAR(update_confidence(gamma, mbar, c, 0.1)(1, 1), 0.25918177931828, 1e-10);
  EXPECT_EQ(update_confidence(ScalarGrid2D(g, 1.0), mbar, c, 0.3)(0, 0), 1.0);
  EXPECT_EQ(update_confidence(ScalarGrid2D(g, 0.0), ScalarGrid2D(g, 0.0), c, 0.3)(0, 0), 0.0);
  EXPECT_THROW(update_confidence(gamma, mbar, c, 0.0), ArgumentError);
}

// Fine RK4 integration of the switched ODE as an independent check of the closed form.
TEST(UpdateConfidence, AgreesWithFineNumericalIntegration) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0), um(0.0, 3.0), udt(0.01, 0.5);
  MapperConfig c;
  const GridSpec g = square_grid(3, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const double g0 = u01(rng), mb = um(rng), dt = udt(rng);
    auto rhs = [&](double y) { return mb < c.sigma_switch ? -c.beta_minus * y : c.beta_plus * mb * (1.0 - y); };
    double y = g0;
    const int steps = 2000;
    const double h = dt / steps;
    for (int s = 0; s < steps; ++s) {
      const double k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
      y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const double exact = update_confidence(ScalarGrid2D(g, g0), ScalarGrid2D(g, mb), c, dt)(1, 1);
    EXPECT_NEAR(exact, y, 1e-9);
  }
}

TEST(Hysteresis, Branches) {
  const GridSpec g = square_grid(3, 0.1);
  MapperConfig c;
  c.tau_high = 0.8;
  c.tau_low = 0.2;
  EXPECT_EQ(threshold_hysteresis(ScalarGrid2D(g, 0.9), ScalarGrid2D(g, 0.0), c)(1, 1), 1.0);
  EXPECT_EQ(threshold_hysteresis(ScalarGrid2D(g, 0.5), ScalarGrid2D(g, 1.0), c)(1, 1), 1.0);
  EXPECT_EQ(threshold_hysteresis(ScalarGrid2D(g, 0.5), ScalarGrid2D(g, 0.0), c)(1, 1), 0.0);
  EXPECT_EQ(threshold_hysteresis(ScalarGrid2D(g, 0.2), ScalarGrid2D(g, 1.0), c)(1, 1), 0.0);
  EXPECT_EQ(threshold_hysteresis(ScalarGrid2D(g, 0.8), ScalarGrid2D(g, 0.0), c)(1, 1), 1.0);
}

TEST(Hysteresis, OscillationInsideBandNeverSwitches) {
  const GridSpec g = square_grid(4, 0.1);
  MapperConfig c;
  for (double start : {0.0, 1.0}) {
    ScalarGrid2D m(g, start);
    int changes = 0;
    for (int k = 0; k < 100; ++k) {
      const double gamma = 0.45 + 0.14 * std::sin(0.7 * k);
      const ScalarGrid2D next = threshold_hysteresis(ScalarGrid2D(g, gamma), m, c);
      changes += transitions(m, next);
      m = next;
    }
    EXPECT_EQ(changes, 0);
  }
}

TEST(StepMapper, StaticObstacleConvergesAndStays) {
  const GridSpec g = square_grid(20, 0.1);
  MapperConfig c;
  MapperState s = make_mapper_state(g, c, 0.0);
  PointCloud cloud;
  cloud.points = {{1.0, 1.0}, {1.1, 1.0}, {1.2, 1.0}};
  int converged_at = -1;
  for (int k = 1; k <= 30; ++k) {
    cloud.timestamp = k / 15.0;
    s = step_mapper(s, cloud, c, g);
    const bool all = s.m_hat(10, 10) == 1.0 && s.m_hat(11, 10) == 1.0 && s.m_hat(12, 10) == 1.0;
    if (all && converged_at < 0) converged_at = k;
    if (converged_at > 0) ASSERT_TRUE(all) << "lost the obstacle at frame " << k;
  }
  EXPECT_GT(converged_at, 0);
  EXPECT_LE(converged_at, 15);
  EXPECT_EQ(s.m_hat(2, 2), 0.0);
}

TEST(StepMapper, VanishedObstacleDecays) {
  const GridSpec g = square_grid(10, 0.1);
  MapperConfig c;
  MapperState s = make_mapper_state(g, c, 0.0);
  PointCloud cloud;
  cloud.points = {{0.5, 0.5}, {0.6, 0.5}};
  for (int k = 1; k <= 20; ++k) {
    cloud.timestamp = k / 15.0;
    s = step_mapper(s, cloud, c, g);
  }
  ASSERT_EQ(s.m_hat(5, 5), 1.0);
  const double dt = 1.0 / 15.0;
  // decay law: gamma <= tau_low after ln(gamma0 / tau_low) / (beta_minus dt) frames
  const int bound = static_cast<int>(std::ceil(std::log(s.gamma(5, 5) / c.tau_low) / (c.beta_minus * dt)));
  cloud.points.clear();
  int k = 20;
  int frames = 0;
  while (s.m_hat(5, 5) == 1.0 && frames < 1000) {
    cloud.timestamp = (++k) / 15.0;
    s = step_mapper(s, cloud, c, g);
    ++frames;
  }
  EXPECT_EQ(frames, bound);
}

TEST(StepMapper, EmptyWorldStaysEmptyAndTimestampsMustIncrease) {
  const GridSpec g = square_grid(8, 0.1);
  MapperConfig c;
  MapperState s = make_mapper_state(g, c, 0.0);
  PointCloud cloud;
  for (int k = 1; k <= 20; ++k) {
    cloud.timestamp = 0.1 * k;
    s = step_mapper(s, cloud, c, g);
  }
  EXPECT_EQ(s.m_hat, ScalarGrid2D(g, 0.0));
  EXPECT_EQ(s.gamma, ScalarGrid2D(g, 0.0));
  cloud.timestamp = 2.0;
  EXPECT_THROW(step_mapper(s, cloud, c, g), ArgumentError);
}

// Persistence: continuous observation makes gamma strictly increase toward 1.
TEST(StepMapperProperty, PersistentObservationIncreasesConfidence) {
  const GridSpec g = square_grid(8, 0.1);
  MapperConfig c;
  c.initial_confidence = 0.1;
  MapperState s = make_mapper_state(g, c, 0.0);
  PointCloud cloud;
  cloud.points = {{0.4, 0.4}, {0.5, 0.4}};
  double prev = s.gamma(4, 4);
  for (int k = 1; k <= 8; ++k) {
    cloud.timestamp = 0.05 * k;
    s = step_mapper(s, cloud, c, g);
    EXPECT_GT(s.gamma(4, 4), prev);
    EXPECT_LE(s.gamma(4, 4), 1.0);
    prev = s.gamma(4, 4);
  }
}

TEST(StepMapperProperty, ConfidenceStaysInUnitInterval) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u01(0.0, 1.0), um(0.0, 5.0), udt(1e-4, 5.0);
  MapperConfig c;
  const GridSpec g = square_grid(3, 0.1);
  ScalarGrid2D gamma(g, 0.5);
  for (int n = 0; n < 20000; ++n) {
    ScalarGrid2D mbar(g);
    for (double& v : mbar.values()) v = um(rng);
    gamma = update_confidence(gamma, mbar, c, udt(rng));
    for (double v : gamma.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
}
