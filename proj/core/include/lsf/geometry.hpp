#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lsf/types.hpp"

namespace lsf::geom {

using Polygon = std::vector<Vec2>;

inline Vec2 rotate(const Vec2& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Even-odd rule; points on the boundary may land on either side.
inline bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const Vec2 r = p2 - p1;
  const Vec2 s = q2 - q1;
  const double denom = cross(r, s);
  const Vec2 qp = q1 - p1;
  if (denom == 0.0) {
    if (cross(qp, r) != 0.0) return false;
    // collinear: overlap of projections
    const double rr = r.squaredNorm();
    if (rr == 0.0) return (p1 - q1).norm() == 0.0;
    const double t0 = qp.dot(r) / rr;
    const double t1 = t0 + s.dot(r) / rr;
    return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
  }
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

/// Minimum distance from p to the polygon outline.
inline double distance_to_outline(const Vec2& p, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  }
  return best;
}

inline bool polygon_intersects_disc(std::span<const Vec2> poly, const Vec2& center, double radius) {
  return point_in_polygon(center, poly) || distance_to_outline(center, poly) < radius;
}

inline bool polygons_intersect(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0, j = a.size() - 1; i < a.size(); j = i++) {
    for (std::size_t k = 0, l = b.size() - 1; k < b.size(); l = k++) {
      if (segments_intersect(a[j], a[i], b[l], b[k])) return true;
    }
  }
  return point_in_polygon(a.front(), b) || point_in_polygon(b.front(), a);
}

/// Polygon placed at pose (x, y, theta).
inline Polygon transform(std::span<const Vec2> body, const RomState& pose) {
  Polygon out;
  out.reserve(body.size());
  for (const Vec2& p : body) out.push_back(rotate(p, pose.theta) + Vec2{pose.x, pose.y});
  return out;
}

/// Outward offset of a convex, counter-clockwise polygon by `pad` (mitered corners).
Polygon inflate_convex(std::span<const Vec2> poly, double pad);

/// Ray/segment hit distance along unit direction `dir` from `origin`, or +inf.
double ray_segment(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b);

/// Ray/circle hit distance (first intersection with t >= 0), or +inf.
double ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center, double radius);

}  // namespace lsf::geom
