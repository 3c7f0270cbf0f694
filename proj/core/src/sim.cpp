#include "lsf/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lsf {

namespace {

double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) a += geom::cross(poly[j], poly[i]);
  return 0.5 * a;
}

geom::Polygon ccw(geom::Polygon poly) {
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

bool is_convex(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = geom::cross(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n]);
    if (c == 0.0) continue;
    const int s = c > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return sign != 0;
}

std::array<std::pair<Vec2, Vec2>, 4> arena_walls(const Arena& a) {
  const Vec2 p00{a.x_min, a.y_min}, p10{a.x_max, a.y_min}, p11{a.x_max, a.y_max}, p01{a.x_min, a.y_max};
  return {{{p00, p10}, {p10, p11}, {p11, p01}, {p01, p00}}};
}

}  // namespace

RobotFootprint RobotSpec::erosion_footprint(double spacing) const {
  if (padding <= 0.0) return footprint;
  geom::Polygon base;
  if (footprint.outline.size() >= 3) {
    base = geom::inflate_convex(ccw(footprint.outline), padding);
  } else {
    // point-like body: regular octagon circumscribing a disc of radius `padding`
    const double r = padding / std::cos(std::numbers::pi / 8.0);
    for (int k = 0; k < 8; ++k) {
      const double a = (k + 0.5) * std::numbers::pi / 4.0;
      base.push_back({r * std::cos(a), r * std::sin(a)});
    }
  }
  return RobotFootprint::from_polygon(base, spacing);
}

RomCommand NominalSchedule::at(double t) const {
  RomCommand c;
  for (const Segment& s : segments) {
    if (s.t <= t) c = s.command;
    else break;
  }
  return c;
}

void Rates::validate() const {
  if (!(sensor > 0.0 && psf > 0.0 && predictive > 0.0 && realtime > 0.0))
    throw ConfigError("all loop rates must be positive");
  if (realtime < predictive || realtime < psf)
    throw ConfigError("realtime rate must be at least the predictive and psf rates");
}

void SensorConfig::validate() const {
  if (n_rays < 1) throw ConfigError("sensor n_rays must be >= 1");
  if (!(max_range > 0.0)) throw ConfigError("sensor max_range must be positive");
  if (!(range_noise_std >= 0.0)) throw ConfigError("sensor range_noise_std must be >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) throw ConfigError("sensor dropout_prob must lie in [0, 1)");
}

GridSpec grid_for_arena(const Arena& arena, double resolution, int n_theta) {
  GridSpec g;
  g.origin = {arena.x_min, arena.y_min};
  g.resolution = resolution;
  g.nx = static_cast<int>(std::lround((arena.x_max - arena.x_min) / resolution)) + 1;
  g.ny = static_cast<int>(std::lround((arena.y_max - arena.y_min) / resolution)) + 1;
  g.n_theta = n_theta;
  return g;
}

void Scenario::validate() const {
  if (!(arena.x_max > arena.x_min && arena.y_max > arena.y_min)) throw ConfigError("arena extents are empty");
  grid.validate();
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  for (std::size_t k = 0; k < static_obstacles.size(); ++k) {
    const auto& p = static_obstacles[k];
    if (p.size() < 3) throw ConfigError("static obstacle " + std::to_string(k) + " needs at least 3 vertices");
    if (!is_convex(p)) throw ConfigError("static obstacle " + std::to_string(k) + " is not convex");
    if (signed_area(p) <= 0.0) throw ConfigError("static obstacle " + std::to_string(k) + " is not counter-clockwise");
  }
  for (std::size_t k = 0; k < moving_obstacles.size(); ++k) {
    const auto& m = moving_obstacles[k];
    if (!(m.radius > 0.0)) throw ConfigError("moving obstacle " + std::to_string(k) + " needs a positive radius");
    if (!m.start.allFinite() || !m.velocity.allFinite() || !std::isfinite(m.start_time))
      throw ConfigError("moving obstacle " + std::to_string(k) + " has non-finite path data");
  }
  robot.footprint.validate(grid.resolution);
  if (!(robot.padding >= 0.0)) throw ConfigError("robot padding must be >= 0");
  if (robot.tracking.mode == TrackingMode::FirstOrder && !(robot.tracking.time_constant > 0.0))
    throw ConfigError("tracking time_constant must be positive");
  if (robot.velocity_limits && !(robot.velocity_limits->array() > 0.0).all())
    throw ConfigError("robot velocity limits must be positive");
  if (!arena.contains({robot.start.x, robot.start.y})) throw ConfigError("robot start lies outside the arena");
  for (std::size_t k = 1; k < nominal.segments.size(); ++k)
    if (!(nominal.segments[k].t > nominal.segments[k - 1].t)) throw ConfigError("nominal schedule times must increase");
  sensor.validate();
  rates.validate();
  mapper.validate();
  poisson.validate();
  mpc.validate();
  issf.validate();
  if (!(monitor.mu_barrier > 0.0 && monitor.beta > 0.0)) throw ConfigError("monitor mu_barrier and beta must be positive");
}

WorldState initial_world(const Scenario& sc) {
  WorldState w;
  w.robot.chi = sc.robot.start;
  return w;
}

WorldState step_world(const Scenario& sc, const WorldState& w, const RomCommand& mu_s, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("step_world needs dt > 0");
  WorldState next = w;
  next.t = w.t + dt;
  Vec3 target = mu_s.vec();
  if (sc.robot.velocity_limits) target = target.cwiseMax(-*sc.robot.velocity_limits).cwiseMin(*sc.robot.velocity_limits);
  next.robot.chi_dot_s = mu_s.vec();
  if (sc.robot.tracking.mode == TrackingMode::Perfect) {
    next.robot.chi_dot = target;
  } else {
    next.robot.chi_dot = w.robot.chi_dot + (dt / sc.robot.tracking.time_constant) * (target - w.robot.chi_dot);
  }
  next.robot.chi = RomState::from(w.robot.chi.vec() + dt * next.robot.chi_dot);
  return next;
}

PointCloud scan(const Scenario& sc, const WorldState& w, std::mt19937_64& rng) {
  PointCloud cloud;
  cloud.timestamp = w.t;
  const Vec2 origin{w.robot.chi.x, w.robot.chi.y};
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> discs;
  for (const MovingDisc& d : sc.moving_obstacles) discs.push_back(d.position(w.t));
  const auto walls = arena_walls(sc.arena);
  const double step = 2.0 * std::numbers::pi / sc.sensor.n_rays;

  for (int k = 0; k < sc.sensor.n_rays; ++k) {
    const double bearing = w.robot.chi.theta + k * step;
    const Vec2 dir{std::cos(bearing), std::sin(bearing)};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& poly : sc.static_obstacles)
      for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        best = std::min(best, geom::ray_segment(origin, dir, poly[j], poly[i]));
    for (std::size_t i = 0; i < discs.size(); ++i)
      best = std::min(best, geom::ray_circle(origin, dir, discs[i], sc.moving_obstacles[i].radius));
    for (const auto& [a, b] : walls) best = std::min(best, geom::ray_segment(origin, dir, a, b));

    // draw both variates for every ray so the stream does not depend on hits
    const double n = noise(rng);
    const double u = unit(rng);
    if (!(best <= sc.sensor.max_range)) continue;
    if (u < sc.sensor.dropout_prob) continue;
    const double range = std::max(0.0, best + sc.sensor.range_noise_std * n);
    cloud.points.push_back(origin + range * dir);
  }
  return cloud;
}

bool in_collision(const Scenario& sc, const RomState& pose, double t) {
  const auto& fp = sc.robot.footprint;
  if (fp.outline.size() >= 3) {
    const geom::Polygon body = geom::transform(fp.outline, pose);
    for (const Vec2& v : body)
      if (!sc.arena.contains(v)) return true;
    for (const auto& poly : sc.static_obstacles)
      if (geom::polygons_intersect(body, poly)) return true;
    for (const MovingDisc& d : sc.moving_obstacles)
      if (geom::polygon_intersects_disc(body, d.position(t), d.radius)) return true;
    return false;
  }
  const geom::Polygon pts = geom::transform(fp.body_points, pose);
  for (const Vec2& p : pts) {
    if (!sc.arena.contains(p)) return true;
    for (const auto& poly : sc.static_obstacles)
      if (geom::point_in_polygon(p, poly)) return true;
    for (const MovingDisc& d : sc.moving_obstacles)
      if ((p - d.position(t)).norm() < d.radius) return true;
  }
  return false;
}

ScalarGrid2D rasterize_occupancy(const Scenario& sc, double t) {
  ScalarGrid2D occ(sc.grid, 0.0);
  std::vector<Vec2> discs;
  for (const MovingDisc& d : sc.moving_obstacles) discs.push_back(d.position(t));
  for (int j = 0; j < sc.grid.ny; ++j) {
    for (int i = 0; i < sc.grid.nx; ++i) {
      const Vec2 c = cell_to_world(sc.grid, {i, j});
      bool hit = false;
      for (const auto& poly : sc.static_obstacles)
        if (geom::point_in_polygon(c, poly)) {
          hit = true;
          break;
        }
      for (std::size_t k = 0; !hit && k < discs.size(); ++k)
        hit = (c - discs[k]).norm() <= sc.moving_obstacles[k].radius;
      if (hit) occ(i, j) = 1.0;
    }
  }
  return occ;
}

MonitorReport monitor_theorem1(const std::vector<MonitorSample>& trace, double mu_barrier, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
  MonitorReport rep;
  rep.min_barrier = std::numeric_limits<double>::infinity();
  rep.barrier.reserve(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double v = beta * (trace[k].chi_dot - trace[k].chi_dot_s).squaredNorm();
    const double b = composite_barrier(trace[k].h, v, mu_barrier);
    rep.barrier.push_back(b);
    rep.min_barrier = std::min(rep.min_barrier, b);
    if (b < 0.0 && !rep.first_violation) rep.first_violation = k;
  }
  return rep;
}

}  // namespace lsf
