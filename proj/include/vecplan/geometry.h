#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vecplan {

// Ego-centric BEV frame: +x lateral (right), +y longitudinal (forward).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

using Vec2 = Point2;
using Polyline = std::vector<Point2>;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Throws if the polyline has fewer than two points, non-finite coordinates,
// or repeated consecutive points in a two-point polyline.
void validate_polyline(std::span<const Point2> polyline);

Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b);
double point_segment_distance(Point2 p, Point2 a, Point2 b);

struct SegmentHit {
  double distance = 0.0;
  std::size_t segment = 0;
};

// Nearest non-degenerate segment; lowest index wins ties. Throws when every
// segment is degenerate.
SegmentHit point_polyline_distance(Point2 p, std::span<const Point2> polyline);

// Unsigned angle in [0, pi]. Throws on a zero-length argument.
double angular_difference(Vec2 v1, Vec2 v2);

struct PolylineHit {
  std::size_t index = 0;
  double distance = 0.0;
  std::size_t segment = 0;
};

std::optional<PolylineHit> closest_polyline_within(
    Point2 p, std::span<const Polyline> polylines, double range);

// Heading is measured counter-clockwise from +x; length lies along the heading.
struct OrientedBox {
  Point2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
};

std::array<Point2, 4> box_corners(const OrientedBox& box);

// Separating-axis test; touching boxes count as overlapping.
bool oriented_rect_overlap(const OrientedBox& a, const OrientedBox& b);

// A rigid 2-D frame expressed in its parent. Local coordinates follow the
// ego convention: +y along `heading`, +x to its right.
struct Frame {
  Point2 origin;
  double heading = M_PI / 2.0;

  Point2 to_local(Point2 parent) const;
  Point2 to_parent(Point2 local) const;
  double heading_to_local(double parent_heading) const;
  double heading_to_parent(double local_heading) const;
};

double wrap_angle(double angle);

}  // namespace vecplan
