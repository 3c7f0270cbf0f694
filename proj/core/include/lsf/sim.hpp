#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lsf/mapping.hpp"
#include "lsf/poisson.hpp"
#include "lsf/predictive.hpp"
#include "lsf/realtime.hpp"

namespace lsf {

struct Arena {
  double x_min = -3.0;
  double x_max = 3.0;
  double y_min = -2.0;
  double y_max = 2.0;

  bool contains(const Vec2& p) const { return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max; }
};

/// Disc moving at constant velocity once released; it rests at `start` before `start_time`.
struct MovingDisc {
  double radius = 0.11;
  Vec2 start = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double start_time = 0.0;

  Vec2 position(double t) const { return start + velocity * std::max(0.0, t - start_time); }
};

enum class TrackingMode { Perfect, FirstOrder };

struct TrackingModel {
  TrackingMode mode = TrackingMode::Perfect;
  double time_constant = 0.05;  // tau_track, s

  /// Convergence rate of V = |chi_dot - chi_dot_s|^2 under the lag model.
  double lambda() const { return 2.0 / time_constant; }
};

struct RobotSpec {
  RobotFootprint footprint;  // true body; outline used for collision checks
  double padding = 0.0;      // extra margin (m) added to the footprint for erosion only
  RomState start;
  TrackingModel tracking;
  /// Actuator saturation |chi_dot_k| <= limit_k, off when absent.
  std::optional<Vec3> velocity_limits;

  /// Footprint used to build C(theta): outline inflated by `padding`, resampled.
  RobotFootprint erosion_footprint(double spacing) const;
};

/// Piecewise-constant nominal command: each entry holds from its time until the next.
struct NominalSchedule {
  struct Segment {
    double t = 0.0;
    RomCommand command;
  };
  std::vector<Segment> segments;

  RomCommand at(double t) const;
};

struct SensorConfig {
  int n_rays = 360;
  double max_range = 5.0;
  double range_noise_std = 0.01;
  double dropout_prob = 0.0;

  void validate() const;
};

/// Loop rates in Hz. The real-time layer must run at least as fast as the others.
struct Rates {
  double sensor = 15.0;
  double psf = 15.0;
  double predictive = 10.0;
  double realtime = 100.0;

  void validate() const;
};

struct MonitorConfig {
  double mu_barrier = 20.0;
  double beta = 1.0;
};

struct Scenario {
  std::string name = "scenario";
  Arena arena;
  GridSpec grid;  // covers the arena; origin at its lower-left corner
  std::vector<geom::Polygon> static_obstacles;  // convex, counter-clockwise
  std::vector<MovingDisc> moving_obstacles;
  RobotSpec robot;
  NominalSchedule nominal;
  SensorConfig sensor;
  Rates rates;
  double duration = 5.0;
  std::uint64_t seed = 1;

  MapperConfig mapper;
  PoissonConfig poisson;
  MpcConfig mpc;
  IssfConfig issf;
  MonitorConfig monitor;
  /// Only ticks with h below this count towards the metrics, when set.
  std::optional<double> encounter_h_threshold;

  /// Throws ConfigError on any inconsistent field.
  void validate() const;
};

/// Grid covering the arena at the given resolution.
GridSpec grid_for_arena(const Arena& arena, double resolution, int n_theta);

struct RobotTrackingState {
  RomState chi;
  Vec3 chi_dot = Vec3::Zero();    // actual velocity
  Vec3 chi_dot_s = Vec3::Zero();  // commanded velocity
};

struct WorldState {
  double t = 0.0;
  RobotTrackingState robot;
};

WorldState initial_world(const Scenario& sc);

/// Advance obstacles and robot by dt. Perfect tracking sets chi_dot = mu_s; the
/// first-order lag relaxes chi_dot towards mu_s with time constant tau_track
/// before integrating the pose (semi-implicit Euler). Saturation applies to chi_dot.
WorldState step_world(const Scenario& sc, const WorldState& w, const RomCommand& mu_s, double dt);

/// Ring scan from the robot center: uniform bearings in the body frame, nearest
/// hit among obstacles and arena walls, Gaussian range noise, random dropouts.
PointCloud scan(const Scenario& sc, const WorldState& w, std::mt19937_64& rng);

/// Geometric test of the true footprint against the true obstacle set and arena.
bool in_collision(const Scenario& sc, const RomState& pose, double t);

/// Cells whose center lies inside an obstacle at time t.
ScalarGrid2D rasterize_occupancy(const Scenario& sc, double t);

struct MonitorSample {
  double h = 0.0;
  Vec3 chi_dot = Vec3::Zero();
  Vec3 chi_dot_s = Vec3::Zero();
};

struct MonitorReport {
  std::vector<double> barrier;
  std::optional<std::size_t> first_violation;
  double min_barrier = 0.0;
};

/// B = h - beta |chi_dot - chi_dot_s|^2 / mu_barrier per tick; first index with B < 0.
MonitorReport monitor_theorem1(const std::vector<MonitorSample>& trace, double mu_barrier, double beta);

}  // namespace lsf
