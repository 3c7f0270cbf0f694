#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "lsf/geometry.hpp"
#include "lsf/types.hpp"

namespace lsf {

/// Discretization of the planar map and its orientation lift.
///
/// Values live at cell centers: cell (i, j) sits at origin + (i, j) * resolution.
/// Orientation layer k corresponds to theta = k * 2*pi / n_theta and layer
/// indices wrap modulo n_theta.
struct GridSpec {
  Vec2 origin = Vec2::Zero();
  double resolution = 0.05;
  int nx = 3;
  int ny = 3;
  int n_theta = 16;

  /// Throws ConfigError on resolution <= 0, nx/ny < 3 or n_theta < 1.
  void validate() const;

  std::size_t cell_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  bool on_border(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }

  double theta_step() const { return 2.0 * std::numbers::pi / n_theta; }
  double layer_angle(int k) const { return wrap_layer(k) * theta_step(); }
  int wrap_layer(int k) const { return ((k % n_theta) + n_theta) % n_theta; }

  double x_max() const { return origin.x() + (nx - 1) * resolution; }
  double y_max() const { return origin.y() + (ny - 1) * resolution; }

  /// Same planar geometry; n_theta is ignored.
  bool same_plane(const GridSpec& o) const {
    return origin == o.origin && resolution == o.resolution && nx == o.nx && ny == o.ny;
  }
  bool operator==(const GridSpec& o) const { return same_plane(o) && n_theta == o.n_theta; }
};

struct CellIndex {
  int i = 0;
  int j = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Nearest cell center, or nullopt when p falls outside the grid.
std::optional<CellIndex> world_to_cell(const GridSpec& spec, const Vec2& p);
Vec2 cell_to_world(const GridSpec& spec, CellIndex c);

/// One real value per cell, row-major (x fastest).
class ScalarGrid2D {
 public:
  ScalarGrid2D() = default;
  explicit ScalarGrid2D(const GridSpec& spec, double fill = 0.0);
  /// Throws ArgumentError when the value count mismatches or a value is not finite.
  ScalarGrid2D(const GridSpec& spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  double operator()(int i, int j) const { return values_[spec_.index(i, j)]; }
  double& operator()(int i, int j) { return values_[spec_.index(i, j)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const ScalarGrid2D& o) const { return spec_.same_plane(o.spec_) && values_ == o.values_; }

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// Orientation-layered safety field h0(x, y, theta) at one time stamp.
struct PsfStack {
  GridSpec spec;
  std::vector<ScalarGrid2D> layers;
  double timestamp = 0.0;

  PsfStack() = default;
  PsfStack(const GridSpec& s, double t);

  double max_value() const;
  bool operator==(const PsfStack&) const = default;
};

/// Occupied set R(theta) of the robot, as body-frame sample points.
///
/// `outline` keeps the polygon the points were sampled from (when known), used
/// for exact geometric collision checks.
struct RobotFootprint {
  std::vector<Vec2> body_points;
  geom::Polygon outline;

  static RobotFootprint point();
  /// Boundary and interior samples of a polygon at `spacing`.
  static RobotFootprint from_polygon(const geom::Polygon& outline, double spacing);
  /// Axis-aligned rectangle centered on the body origin, length along body x.
  static RobotFootprint rectangle(double length, double width, double spacing);

  /// Throws ConfigError when empty or when no point lies within `resolution` of the origin.
  void validate(double resolution) const;
};

/// True when (x, y) lies in the closed interpolable rectangle of the grid.
bool in_domain(const GridSpec& spec, double x, double y);

double sample_bilinear(const ScalarGrid2D& grid, double x, double y);

/// Bilinear in (x, y), linear in theta with wrap-around. Exact at nodes.
/// Throws DomainError outside the interpolable rectangle.
double sample_trilinear(const PsfStack& stack, const Vec3& q);

struct FieldGradient {
  Vec3 d = Vec3::Zero();  // (dh/dx, dh/dy, dh/dtheta)
  bool one_sided = false;  // a one-sided difference replaced a central one near the border
};

/// Central differences of the trilinear field with one-cell / one-layer steps.
FieldGradient gradient_xy(const PsfStack& stack, const Vec3& q);

}  // namespace lsf
