#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lsf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Reduced-order pose chi = (x, y, theta). Positions in meters, theta in radians
/// (not wrapped; field lookups wrap it).
struct RomState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec3 vec() const { return {x, y, theta}; }
  static RomState from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  bool operator==(const RomState&) const = default;
};

/// Reduced-order velocity command mu = (vx, vy, omega) in the world frame.
struct RomCommand {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  Vec3 vec() const { return {vx, vy, omega}; }
  static RomCommand from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  bool operator==(const RomCommand&) const = default;
};

// Error taxonomy shared by every module.

/// A query left the region where a field is defined.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid argument values (non-positive dt, non-monotone timestamps, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration or scenario content.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A constrained subproblem has no feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lsf
