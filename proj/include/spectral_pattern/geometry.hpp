#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spectral_pattern/errors.hpp"

namespace spectral_pattern {

/// Planar point in projected meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  bool operator==(const Point2&) const = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
inline double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

inline Point2 rotate(Point2 p, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

namespace detail {

inline double signed_area(std::span<const Point2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point2& a = ring[i];
    const Point2& b = ring[(i + 1) % ring.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

inline bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Closed-segment intersection test, touching counts.
inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int d1 = sign(orient(q1, q2, p1));
  const int d2 = sign(orient(q1, q2, p2));
  const int d3 = sign(orient(p1, p2, q1));
  const int d4 = sign(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline double wrap_degrees_180(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) a += 180.0;
  if (a >= 180.0 - 1e-10) a = 0.0;
  return a;
}

}  // namespace detail

/// Simple polygon footprint, stored counter-clockwise without a repeated
/// closing vertex.
///
/// Construction normalizes tolerant input (a duplicated closing point,
/// repeated consecutive vertices, clockwise order) and rejects rings that
/// are too short, non-finite, of near-zero area or self-intersecting.
class Polygon {
 public:
  static constexpr double kMinArea = 1e-9;

  explicit Polygon(std::vector<Point2> ring) : ring_(std::move(ring)) {
    for (const Point2& p : ring_)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DegeneratePolygon("non-finite vertex");
    if (ring_.size() > 1 && ring_.front() == ring_.back()) ring_.pop_back();
    ring_.erase(std::unique(ring_.begin(), ring_.end()), ring_.end());
    if (ring_.size() > 1 && ring_.front() == ring_.back()) ring_.pop_back();
    if (ring_.size() < 3)
      throw DegeneratePolygon("polygon needs at least 3 distinct vertices, got " + std::to_string(ring_.size()));
    const double area = detail::signed_area(ring_);
    if (std::abs(area) < kMinArea) throw DegeneratePolygon("polygon area below 1e-9 m^2");
    if (area < 0.0) std::reverse(ring_.begin(), ring_.end());
    check_simple();
  }

  const std::vector<Point2>& ring() const noexcept { return ring_; }
  std::size_t size() const noexcept { return ring_.size(); }
  const Point2& operator[](std::size_t i) const { return ring_[i]; }
  bool operator==(const Polygon&) const = default;

 private:
  // O(n^2) pairwise edge test. Adjacent edges may only share their common
  // vertex; anything more is a spike folding back on itself.
  void check_simple() const {
    const std::size_t n = ring_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a1 = ring_[i];
      const Point2 a2 = ring_[(i + 1) % n];
      for (std::size_t j = i + 1; j < n; ++j) {
        const Point2 b1 = ring_[j];
        const Point2 b2 = ring_[(j + 1) % n];
        const bool next = j == i + 1;
        const bool wrap = i == 0 && j == n - 1;
        if (next || wrap) {
          // shared vertex: a2 == b1 (next) or b2 == a1 (wrap)
          const Point2 shared = next ? a2 : a1;
          const Point2 p = next ? a1 : a2;
          const Point2 q = next ? b2 : b1;
          if (orient(shared, p, q) == 0.0 && dot(p - shared, q - shared) > 0.0)
            throw SelfIntersectingPolygon("polygon ring folds back on itself at vertex " +
                                          std::to_string(next ? j : i));
          continue;
        }
        if (detail::segments_intersect(a1, a2, b1, b2))
          throw SelfIntersectingPolygon("polygon edges " + std::to_string(i) + " and " + std::to_string(j) +
                                        " intersect");
      }
    }
  }

  std::vector<Point2> ring_;
};

/// Oriented rectangle; angle is the direction of the long side in degrees [0, 180).
struct OrientedRect {
  Point2 center;
  double length = 0.0;
  double width = 0.0;
  double angle = 0.0;

  double area() const { return length * width; }
};

/// The five per-building indices used as vertex features, in this order.
struct BuildingFeatures {
  static constexpr std::size_t kCount = 5;

  double area = 0.0;
  double main_direction = 0.0;
  double length_width_ratio = 1.0;
  double area_ratio = 1.0;
  double compactness = 1.0;

  std::vector<double> as_vector() const {
    return {area, main_direction, length_width_ratio, area_ratio, compactness};
  }
};

/// Feature column names, indexed like BuildingFeatures::as_vector().
inline constexpr const char* kFeatureNames[BuildingFeatures::kCount] = {"area", "main_direction", "R_lw", "R_A",
                                                                        "C"};

inline double polygon_area(const Polygon& p) {
  const double a = detail::signed_area(p.ring());
  if (std::abs(a) < Polygon::kMinArea) throw DegeneratePolygon("polygon area below 1e-9 m^2");
  return std::abs(a);
}

inline double polygon_perimeter(const Polygon& p) {
  double total = 0.0;
  const auto& r = p.ring();
  for (std::size_t i = 0; i < r.size(); ++i) total += distance(r[i], r[(i + 1) % r.size()]);
  return total;
}

/// Area centroid of the ring.
inline Point2 polygon_centroid(const Polygon& p) {
  const auto& r = p.ring();
  // shift to the first vertex to keep the cross products small
  const Point2 o = r.front();
  double twice = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point2 a = r[i] - o;
    const Point2 b = r[(i + 1) % r.size()] - o;
    const double w = cross(a, b);
    twice += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  return {o.x + cx / (3.0 * twice), o.y + cy / (3.0 * twice)};
}

/// Even-odd point in polygon; boundary points count as inside.
inline bool contains(const Polygon& poly, Point2 p) {
  const auto& r = poly.ring();
  bool inside = false;
  for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
    if (orient(r[j], r[i], p) == 0.0 && detail::on_segment(r[j], r[i], p)) return true;
    if ((r[i].y > p.y) != (r[j].y > p.y)) {
      const double x = r[j].x + (p.y - r[j].y) * (r[i].x - r[j].x) / (r[i].y - r[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

/// Minimum boundary-to-boundary distance; 0 when the polygons touch or overlap.
inline double polygon_distance(const Polygon& a, const Polygon& b) {
  const auto& ra = a.ring();
  const auto& rb = b.ring();
  for (std::size_t i = 0; i < ra.size(); ++i)
    for (std::size_t j = 0; j < rb.size(); ++j)
      if (detail::segments_intersect(ra[i], ra[(i + 1) % ra.size()], rb[j], rb[(j + 1) % rb.size()])) return 0.0;
  if (contains(a, rb.front()) || contains(b, ra.front())) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ra.size(); ++i)
    for (std::size_t j = 0; j < rb.size(); ++j) {
      best = std::min(best, detail::point_segment_distance(ra[i], rb[j], rb[(j + 1) % rb.size()]));
      best = std::min(best, detail::point_segment_distance(rb[j], ra[i], ra[(i + 1) % ra.size()]));
    }
  return best;
}

/// Convex hull by monotone chain. Counter-clockwise, collinear points
/// dropped; fully collinear input yields its two extreme points.
inline std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point2& p = pts[i];
    while (k >= lower && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

/// Smallest-area enclosing rectangle via rotating calipers over hull edges.
/// Among equal-area candidates the one with the smaller angle wins; a square
/// reports the smaller of its two side directions.
inline OrientedRect min_bounding_rect(const Polygon& p) {
  polygon_area(p);  // propagates DegeneratePolygon
  const std::vector<Point2> hull = convex_hull(p.ring());
  constexpr double kRelTie = 1e-12;

  OrientedRect best;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = std::hypot(edge.x, edge.y);
    if (len == 0.0) continue;
    const Point2 u{edge.x / len, edge.y / len};
    const Point2 v{-u.y, u.x};
    double min_u = std::numeric_limits<double>::infinity(), max_u = -min_u;
    double min_v = min_u, max_v = -min_u;
    for (const Point2& q : hull) {
      const double pu = dot(q, u);
      const double pv = dot(q, v);
      min_u = std::min(min_u, pu);
      max_u = std::max(max_u, pu);
      min_v = std::min(min_v, pv);
      max_v = std::max(max_v, pv);
    }
    const double ext_u = max_u - min_u;
    const double ext_v = max_v - min_v;
    const double area = ext_u * ext_v;

    const double angle_u = detail::wrap_degrees_180(std::atan2(u.y, u.x) * 180.0 / std::numbers::pi);
    const double angle_v = detail::wrap_degrees_180(std::atan2(v.y, v.x) * 180.0 / std::numbers::pi);
    double angle;
    if (std::abs(ext_u - ext_v) <= 1e-9 * std::max(ext_u, ext_v))
      angle = std::min(angle_u, angle_v);
    else
      angle = ext_u > ext_v ? angle_u : angle_v;

    const bool smaller = area < best_area * (1.0 - kRelTie);
    const bool tie = !smaller && area <= best_area * (1.0 + kRelTie);
    if (smaller || (tie && angle < best.angle)) {
      best_area = area;
      best.center = (0.5 * (min_u + max_u)) * u + (0.5 * (min_v + max_v)) * v;
      best.length = std::max(ext_u, ext_v);
      best.width = std::min(ext_u, ext_v);
      best.angle = angle;
    }
  }
  return best;
}

inline BuildingFeatures extract_features(const Polygon& p) {
  const double area = polygon_area(p);
  const double perimeter = polygon_perimeter(p);
  const OrientedRect rect = min_bounding_rect(p);
  BuildingFeatures f;
  f.area = area;
  f.main_direction = rect.angle;
  f.length_width_ratio = rect.length / rect.width;
  f.area_ratio = std::min(1.0, area / rect.area());
  f.compactness = std::min(1.0, 4.0 * std::numbers::pi * area / (perimeter * perimeter));
  return f;
}

}  // namespace spectral_pattern
