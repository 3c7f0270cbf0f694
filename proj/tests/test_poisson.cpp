#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SparseCholesky>

#include "lsf/poisson.hpp"
#include "support.hpp"

using namespace lsf;
using lsf::test::random_occupancy;
using lsf::test::square_grid;

namespace {

/// Direct sparse solve of the same 5-point system, h = 0 off the free set.
ScalarGrid2D direct_solve(const ScalarGrid2D& mask, double f) {
  const GridSpec& g = mask.spec();
  std::vector<int> id(g.cell_count(), -1);
  int n = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (mask(i, j) != 0.0) id[g.index(i, j)] = n++;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, -f * g.resolution * g.resolution);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int r = id[g.index(i, j)];
      if (r < 0) continue;
      trip.emplace_back(r, r, 4.0);
      for (const auto [a, b] : {std::pair{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}}) {
        const int c = id[g.index(a, b)];
        if (c >= 0) trip.emplace_back(r, c, -1.0);
      }
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  const Eigen::VectorXd x = ldlt.solve(rhs);
  ScalarGrid2D out(g, 0.0);
  for (std::size_t k = 0; k < id.size(); ++k)
    if (id[k] >= 0) out.values()[k] = x(id[k]);
  return out;
}

/// Cell free iff every rotated footprint sample lands in bounds on a free cell.
ScalarGrid2D brute_erode(const ScalarGrid2D& occ, const RobotFootprint& fp, double angle) {
  const GridSpec& g = occ.spec();
  ScalarGrid2D out(g, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.on_border(i, j)) continue;
      bool ok = true;
      for (const Vec2& p : fp.body_points) {
        const Vec2 r = geom::rotate(p, angle) / g.resolution;
        const int a = i + static_cast<int>(std::floor(r.x() + 0.5));
        const int b = j + static_cast<int>(std::floor(r.y() + 0.5));
        if (!g.in_bounds(a, b) || g.on_border(a, b) || occ(a, b) != 0.0) {
          ok = false;
          break;
        }
      }
      out(i, j) = ok ? 1.0 : 0.0;
    }
  return out;
}

}  // namespace

TEST(PoissonConfig, Validation) {
  PoissonConfig c;
  EXPECT_NO_THROW(c.validate());
  c.forcing = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PoissonConfig{};
  c.sor_omega = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.sor_omega = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Erode, PointFootprintKeepsFreeInterior) {
  const GridSpec g = square_grid(6, 0.1);
  ScalarGrid2D occ(g, 0.0);
  occ(2, 2) = 1.0;
  const ThetaMasks m = erode_free_space(occ, RobotFootprint::point(), 2);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0](2, 2), 0.0);
  EXPECT_EQ(m[0](3, 3), 1.0);
  EXPECT_EQ(m[0](0, 3), 0.0);
  EXPECT_EQ(m[1], m[0]);
}

TEST(Erode, MatchesBruteForceOnRandomMaps) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const GridSpec g = square_grid(30, 0.05);
    const ScalarGrid2D occ = random_occupancy(rng, g);
    const RobotFootprint fp = RobotFootprint::rectangle(0.3, 0.15, 0.025);
    const ThetaMasks masks = erode_free_space(occ, fp, 8);
    for (int k = 0; k < 8; ++k) ASSERT_EQ(masks[static_cast<std::size_t>(k)], brute_erode(occ, fp, 2.0 * std::numbers::pi / 8.0 * k));
  }
}

TEST(Erode, FootprintLargerThanGridIsConfigError) {
  const GridSpec g = square_grid(5, 0.1);
  EXPECT_THROW(erode_free_space(ScalarGrid2D(g), RobotFootprint::rectangle(2.0, 2.0, 0.05), 1), ConfigError);
}

TEST(SolvePsf, MatchesDirectSolveOnRandomMaps) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const GridSpec g = square_grid(25, 0.05);
    const ThetaMasks masks = erode_free_space(random_occupancy(rng, g), RobotFootprint::point(), 1);
    PoissonConfig c;
    const PsfSolveResult r = solve_psf(masks, c, 0.0);
    const ScalarGrid2D ref = direct_solve(masks[0], c.forcing);
    for (std::size_t k = 0; k < ref.values().size(); ++k)
      ASSERT_NEAR(r.stack.layers[0].values()[k], ref.values()[k], 1e-5);
  }
}

// Residual, positivity and exact zeros on random maps and footprints.
TEST(SolvePsfProperty, ResidualPositivityBoundary) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(12, 36);
  for (int trial = 0; trial < 30; ++trial) {
    const GridSpec g = square_grid(size(rng), 0.05);
    const RobotFootprint fp = trial % 2 ? RobotFootprint::point() : RobotFootprint::rectangle(0.15, 0.1, 0.025);
    const ThetaMasks masks = erode_free_space(random_occupancy(rng, g), fp, 4);
    PoissonConfig c;
    const PsfSolveResult r = solve_psf(masks, c, 0.0);
    for (std::size_t k = 0; k < masks.size(); ++k) {
      const ScalarGrid2D& h = r.stack.layers[k];
      if (r.layers[k].infeasible) continue;
      EXPECT_LT(pde_residual(h, masks[k], c.forcing), c.tol);
      for (std::size_t n = 0; n < h.values().size(); ++n) {
        if (masks[k].values()[n] != 0.0) ASSERT_GT(h.values()[n], 0.0);
        else ASSERT_EQ(h.values()[n], 0.0);
      }
    }
  }
}

TEST(SolvePsfProperty, LinearInForcing) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const GridSpec g = square_grid(20, 0.05);
    const ThetaMasks masks = erode_free_space(random_occupancy(rng, g), RobotFootprint::point(), 1);
    PoissonConfig c;
    const PsfSolveResult a = solve_psf(masks, c, 0.0);
    c.forcing *= 2.0;
    const PsfSolveResult b = solve_psf(masks, c, 0.0);
    // residual tol bounds the error by tol * (largest eigen-inverse) << 2 tol on these sizes
    for (std::size_t n = 0; n < a.stack.layers[0].values().size(); ++n)
      ASSERT_NEAR(b.stack.layers[0].values()[n], 2.0 * a.stack.layers[0].values()[n], 2.0 * c.tol);
  }
}

TEST(SolvePsfProperty, WarmStartAgreesWithColdStart) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const GridSpec g = square_grid(24, 0.05);
    PoissonConfig c;
    const ThetaMasks m1 = erode_free_space(random_occupancy(rng, g), RobotFootprint::point(), 2);
    const ThetaMasks m2 = erode_free_space(random_occupancy(rng, g), RobotFootprint::point(), 2);
    const PsfSolveResult first = solve_psf(m1, c, 0.0);
    const PsfSolveResult warm = solve_psf(m2, c, 0.1, &first.stack);
    const PsfSolveResult cold = solve_psf(m2, c, 0.1);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t n = 0; n < cold.stack.layers[k].values().size(); ++n)
        ASSERT_NEAR(warm.stack.layers[k].values()[n], cold.stack.layers[k].values()[n], 2.0 * c.tol);
  }
}

TEST(SolvePsf, WarmStartOnSameMapNeedsNoSweeps) {
  const GridSpec g = square_grid(30, 0.05);
  const ThetaMasks m = erode_free_space(ScalarGrid2D(g), RobotFootprint::point(), 1);
  PoissonConfig c;
  const PsfSolveResult a = solve_psf(m, c, 0.0);
  const PsfSolveResult b = solve_psf(m, c, 0.1, &a.stack);
  EXPECT_GT(a.total_iterations(), 0);
  EXPECT_EQ(b.total_iterations(), 0);
}

TEST(SolvePsf, EmptyLayerIsReportedNotThrown) {
  const GridSpec g = square_grid(5, 0.1);
  ScalarGrid2D occ(g, 1.0);
  const PsfSolveResult r = solve_psf(erode_free_space(occ, RobotFootprint::point(), 1), PoissonConfig{}, 0.0);
  EXPECT_TRUE(r.layers[0].infeasible);
  EXPECT_EQ(r.stack.max_value(), 0.0);
}

TEST(SolvePsf, IterationCapRaisesSolverError) {
  const GridSpec g = square_grid(40, 0.05);
  PoissonConfig c;
  c.max_iters = 3;
  try {
    solve_psf(erode_free_space(ScalarGrid2D(g), RobotFootprint::point(), 1), c, 0.0);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), c.tol);
  }
}

TEST(SolvePsf, MismatchedMasksAreRejected) {
  ThetaMasks m{ScalarGrid2D(square_grid(5, 0.1)), ScalarGrid2D(square_grid(6, 0.1))};
  EXPECT_THROW(solve_psf(m, PoissonConfig{}, 0.0), ArgumentError);
  EXPECT_THROW(solve_psf({}, PoissonConfig{}, 0.0), ArgumentError);
}

TEST(Snapshot, ExtrapolationAndSlope) {
  const GridSpec g = square_grid(3, 1.0, 1);
  auto prev = std::make_shared<PsfStack>(g, 0.0);
  auto curr = std::make_shared<PsfStack>(g, 0.5);
  prev->layers[0](1, 1) = 2.0;
  curr->layers[0](1, 1) = 3.0;
  PsfSnapshot snap{curr, prev};
  const Vec3 q{1.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(h_time_derivative(snap, q), 2.0);
  EXPECT_DOUBLE_EQ(extrapolate_h(snap, q, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(extrapolate_h(snap, q, 0.75), 3.5);

  PsfSnapshot single{curr, nullptr};
  EXPECT_EQ(h_time_derivative(single, q), 0.0);
  EXPECT_EQ(extrapolate_h(single, q, 4.0), 3.0);

  PsfSnapshot equal{curr, curr};
  EXPECT_THROW(extrapolate_h(equal, q, 1.0), ArgumentError);
  PsfSnapshot backwards{prev, curr};
  EXPECT_THROW(h_time_derivative(backwards, q), ArgumentError);
}
