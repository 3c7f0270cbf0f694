#include "lsf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lsf {

void GridSpec::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw ConfigError("grid resolution must be positive, got " + std::to_string(resolution));
  if (nx < 3 || ny < 3)
    throw ConfigError("grid needs at least 3x3 cells, got " + std::to_string(nx) + "x" + std::to_string(ny));
  if (n_theta < 1) throw ConfigError("n_theta must be >= 1");
  if (!origin.allFinite()) throw ConfigError("grid origin must be finite");
}

std::optional<CellIndex> world_to_cell(const GridSpec& spec, const Vec2& p) {
  const double fx = std::floor((p.x() - spec.origin.x()) / spec.resolution + 0.5);
  const double fy = std::floor((p.y() - spec.origin.y()) / spec.resolution + 0.5);
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  if (fx < 0.0 || fy < 0.0 || fx >= spec.nx || fy >= spec.ny) return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

Vec2 cell_to_world(const GridSpec& spec, CellIndex c) {
  return spec.origin + Vec2{c.i * spec.resolution, c.j * spec.resolution};
}

ScalarGrid2D::ScalarGrid2D(const GridSpec& spec, double fill) : spec_(spec), values_(spec.cell_count(), fill) {}

ScalarGrid2D::ScalarGrid2D(const GridSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.cell_count())
    throw ArgumentError("grid value count " + std::to_string(values_.size()) + " != nx*ny " +
                        std::to_string(spec_.cell_count()));
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    throw ArgumentError("grid values must be finite");
}

PsfStack::PsfStack(const GridSpec& s, double t) : spec(s), timestamp(t) {
  layers.assign(static_cast<std::size_t>(s.n_theta), ScalarGrid2D(s, 0.0));
}

double PsfStack::max_value() const {
  double m = 0.0;
  for (const auto& layer : layers)
    for (double v : layer.values()) m = std::max(m, v);
  return m;
}

RobotFootprint RobotFootprint::point() {
  RobotFootprint fp;
  fp.body_points.push_back(Vec2::Zero());
  return fp;
}

RobotFootprint RobotFootprint::from_polygon(const geom::Polygon& outline, double spacing) {
  if (outline.size() < 3) throw ConfigError("footprint polygon needs at least 3 vertices");
  if (!(spacing > 0.0)) throw ConfigError("footprint sample spacing must be positive");
  RobotFootprint fp;
  fp.outline = outline;
  for (std::size_t i = 0; i < outline.size(); ++i) {
    const Vec2& a = outline[i];
    const Vec2& b = outline[(i + 1) % outline.size()];
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int s = 0; s < steps; ++s) fp.body_points.push_back(a + (b - a) * (static_cast<double>(s) / steps));
  }
  double xmin = outline[0].x(), xmax = xmin, ymin = outline[0].y(), ymax = ymin;
  for (const Vec2& v : outline) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  // Interior lattice anchored at the body origin so the origin itself is sampled.
  const int i0 = static_cast<int>(std::floor(xmin / spacing));
  const int i1 = static_cast<int>(std::ceil(xmax / spacing));
  const int j0 = static_cast<int>(std::floor(ymin / spacing));
  const int j1 = static_cast<int>(std::ceil(ymax / spacing));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Vec2 p{i * spacing, j * spacing};
      if (geom::point_in_polygon(p, outline)) fp.body_points.push_back(p);
    }
  }
  return fp;
}

RobotFootprint RobotFootprint::rectangle(double length, double width, double spacing) {
  const double hx = 0.5 * length;
  const double hy = 0.5 * width;
  return from_polygon({{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}}, spacing);
}

void RobotFootprint::validate(double resolution) const {
  if (body_points.empty()) throw ConfigError("robot footprint has no body points");
  double nearest = std::numeric_limits<double>::infinity();
  for (const Vec2& p : body_points) {
    if (!p.allFinite()) throw ConfigError("robot footprint point is not finite");
    nearest = std::min(nearest, p.norm());
  }
  if (nearest > resolution)
    throw ConfigError("robot footprint does not cover the body origin (nearest point " + std::to_string(nearest) +
                      " m away)");
}

bool in_domain(const GridSpec& spec, double x, double y) {
  return x >= spec.origin.x() && y >= spec.origin.y() && x <= spec.x_max() && y <= spec.y_max();
}

namespace {

struct Bilinear {
  std::size_t i00, i10, i01, i11;
  double wx, wy;
};

// Lattice coordinates within 1e-9 of an integer are snapped so node queries are exact.
double snap(double g) {
  const double r = std::round(g);
  return std::abs(g - r) < 1e-9 ? r : g;
}

Bilinear locate(const GridSpec& spec, double x, double y) {
  const double gx = snap((x - spec.origin.x()) / spec.resolution);
  const double gy = snap((y - spec.origin.y()) / spec.resolution);
  int i = std::min(static_cast<int>(std::floor(gx)), spec.nx - 2);
  int j = std::min(static_cast<int>(std::floor(gy)), spec.ny - 2);
  i = std::max(i, 0);
  j = std::max(j, 0);
  return {spec.index(i, j), spec.index(i + 1, j), spec.index(i, j + 1), spec.index(i + 1, j + 1), gx - i, gy - j};
}

double blend(std::span<const double> v, const Bilinear& b) {
  // Written so that wx == 0 / wy == 0 reproduce node values bit-exactly.
  auto lerp = [](double a, double c, double w) { return w == 0.0 ? a : (w == 1.0 ? c : a + w * (c - a)); };
  return lerp(lerp(v[b.i00], v[b.i10], b.wx), lerp(v[b.i01], v[b.i11], b.wx), b.wy);
}

void require_domain(const GridSpec& spec, double x, double y) {
  if (!in_domain(spec, x, y))
    throw DomainError("query (" + std::to_string(x) + ", " + std::to_string(y) + ") outside mapped region");
}

}  // namespace

double sample_bilinear(const ScalarGrid2D& grid, double x, double y) {
  require_domain(grid.spec(), x, y);
  return blend(grid.values(), locate(grid.spec(), x, y));
}

double sample_trilinear(const PsfStack& stack, const Vec3& q) {
  const GridSpec& spec = stack.spec;
  require_domain(spec, q.x(), q.y());
  if (!std::isfinite(q.z())) throw DomainError("orientation is not finite");
  const Bilinear b = locate(spec, q.x(), q.y());

  const double two_pi = 2.0 * std::numbers::pi;
  double th = std::fmod(q.z(), two_pi);
  if (th < 0.0) th += two_pi;
  const double gt = snap(th / spec.theta_step());
  int k = static_cast<int>(std::floor(gt));
  double wt = gt - k;
  if (k >= spec.n_theta) {  // th rounded up to 2*pi
    k = 0;
    wt = 0.0;
  }
  const double v0 = blend(stack.layers[static_cast<std::size_t>(k)].values(), b);
  if (wt == 0.0 || spec.n_theta == 1) return v0;
  const double v1 = blend(stack.layers[static_cast<std::size_t>(spec.wrap_layer(k + 1))].values(), b);
  return v0 + wt * (v1 - v0);
}

FieldGradient gradient_xy(const PsfStack& stack, const Vec3& q) {
  const GridSpec& spec = stack.spec;
  require_domain(spec, q.x(), q.y());
  FieldGradient g;
  const double h = spec.resolution;
  const double center = sample_trilinear(stack, q);

  auto axis = [&](int dim, double lo_bound, double hi_bound) {
    Vec3 qp = q, qm = q;
    qp[dim] += h;
    qm[dim] -= h;
    const bool has_p = qp[dim] <= hi_bound;
    const bool has_m = qm[dim] >= lo_bound;
    if (has_p && has_m) return (sample_trilinear(stack, qp) - sample_trilinear(stack, qm)) / (2.0 * h);
    g.one_sided = true;
    if (has_p) return (sample_trilinear(stack, qp) - center) / h;
    if (has_m) return (center - sample_trilinear(stack, qm)) / h;
    return 0.0;
  };
  g.d.x() = axis(0, spec.origin.x(), spec.x_max());
  g.d.y() = axis(1, spec.origin.y(), spec.y_max());
  if (spec.n_theta > 1) {
    const double dt = spec.theta_step();
    Vec3 qp = q, qm = q;
    qp.z() += dt;
    qm.z() -= dt;
    g.d.z() = (sample_trilinear(stack, qp) - sample_trilinear(stack, qm)) / (2.0 * dt);
  }
  return g;
}

namespace geom {

Polygon inflate_convex(std::span<const Vec2> poly, double pad) {
  const std::size_t n = poly.size();
  Polygon out;
  out.reserve(n);
  if (pad == 0.0) return Polygon(poly.begin(), poly.end());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = poly[(i + n - 1) % n];
    const Vec2& cur = poly[i];
    const Vec2& next = poly[(i + 1) % n];
    const Vec2 e0 = (cur - prev).normalized();
    const Vec2 e1 = (next - cur).normalized();
    const Vec2 n0{e0.y(), -e0.x()};  // outward normal for CCW order
    const Vec2 n1{e1.y(), -e1.x()};
    const Vec2 bis = n0 + n1;
    const double denom = 1.0 + n0.dot(n1);
    out.push_back(cur + bis * (pad / denom));
  }
  return out;
}

double ray_segment(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b) {
  const Vec2 s = b - a;
  const double denom = cross(dir, s);
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  const Vec2 ao = a - origin;
  const double t = cross(ao, s) / denom;
  const double u = cross(ao, dir) / denom;
  if (t >= 0.0 && u >= 0.0 && u <= 1.0) return t;
  return std::numeric_limits<double>::infinity();
}

double ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center, double radius) {
  const Vec2 oc = origin - center;
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  const double t0 = -b - sq;
  if (t0 >= 0.0) return t0;
  const double t1 = -b + sq;
  // origin inside the circle counts as an immediate hit
  return t1 >= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace geom

}  // namespace lsf
