#include "vecplan/geometry.h"

#include <algorithm>
#include <limits>
#include <string>

#include "vecplan/error.h"

namespace vecplan {

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid_argument";
    case ErrorCategory::kShape: return "shape";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kSchema: return "schema";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kMissingFile: return "missing_file";
    case ErrorCategory::kCheckpointMismatch: return "checkpoint_mismatch";
    case ErrorCategory::kDivergence: return "divergence";
    case ErrorCategory::kHorizon: return "horizon";
    case ErrorCategory::kDrift: return "drift";
  }
  return "unknown";
}

void validate_polyline(std::span<const Point2> polyline) {
  if (polyline.size() < 2) {
    throw Error(ErrorCategory::kInvalidArgument,
                "polyline needs at least 2 points, got " + std::to_string(polyline.size()));
  }
  for (const Point2& p : polyline) {
    if (!is_finite(p)) throw Error(ErrorCategory::kInvalidArgument, "polyline has non-finite point");
  }
  if (polyline.size() == 2 && polyline[0] == polyline[1]) {
    throw Error(ErrorCategory::kInvalidArgument, "two-point polyline with coincident points");
  }
}

Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  return norm(p - closest_point_on_segment(p, a, b));
}

SegmentHit point_polyline_distance(Point2 p, std::span<const Point2> polyline) {
  SegmentHit best{std::numeric_limits<double>::infinity(), 0};
  bool found = false;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    if (polyline[i] == polyline[i + 1]) continue;
    const double d = point_segment_distance(p, polyline[i], polyline[i + 1]);
    if (!found || d < best.distance) {
      best = {d, i};
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCategory::kInvalidArgument, "polyline has no non-degenerate segment");
  }
  return best;
}

double angular_difference(Vec2 v1, Vec2 v2) {
  const double n1 = norm(v1);
  const double n2 = norm(v2);
  if (n1 == 0.0 || n2 == 0.0) {
    throw Error(ErrorCategory::kInvalidArgument, "angular_difference of zero-length vector");
  }
  const double c = std::clamp(dot(v1, v2) / (n1 * n2), -1.0, 1.0);
  return std::acos(c);
}

std::optional<PolylineHit> closest_polyline_within(Point2 p, std::span<const Polyline> polylines,
                                                   double range) {
  std::optional<PolylineHit> best;
  for (std::size_t i = 0; i < polylines.size(); ++i) {
    const SegmentHit hit = point_polyline_distance(p, polylines[i]);
    if (hit.distance > range) continue;
    if (!best || hit.distance < best->distance) best = PolylineHit{i, hit.distance, hit.segment};
  }
  return best;
}

std::array<Point2, 4> box_corners(const OrientedBox& box) {
  const Vec2 f{std::cos(box.heading), std::sin(box.heading)};
  const Vec2 l{-f.y, f.x};
  const Vec2 hf = 0.5 * box.length * f;
  const Vec2 hl = 0.5 * box.width * l;
  return {box.center + hf + hl, box.center - hf + hl, box.center - hf - hl,
          box.center + hf - hl};
}

namespace {

// Half-extent of `box` projected on unit `axis`.
double projected_radius(const OrientedBox& box, Vec2 axis) {
  const Vec2 f{std::cos(box.heading), std::sin(box.heading)};
  const Vec2 l{-f.y, f.x};
  return 0.5 * box.length * std::abs(dot(f, axis)) + 0.5 * box.width * std::abs(dot(l, axis));
}

}  // namespace

bool oriented_rect_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 delta = b.center - a.center;
  const std::array<double, 2> headings{a.heading, b.heading};
  for (double h : headings) {
    const Vec2 f{std::cos(h), std::sin(h)};
    const Vec2 l{-f.y, f.x};
    for (Vec2 axis : {f, l}) {
      if (std::abs(dot(delta, axis)) > projected_radius(a, axis) + projected_radius(b, axis)) {
        return false;
      }
    }
  }
  return true;
}

Point2 Frame::to_local(Point2 parent) const {
  const Vec2 f{std::cos(heading), std::sin(heading)};
  const Vec2 r{f.y, -f.x};
  const Vec2 d = parent - origin;
  return {dot(d, r), dot(d, f)};
}

Point2 Frame::to_parent(Point2 local) const {
  const Vec2 f{std::cos(heading), std::sin(heading)};
  const Vec2 r{f.y, -f.x};
  return origin + local.x * r + local.y * f;
}

double Frame::heading_to_local(double parent_heading) const {
  return wrap_angle(parent_heading - heading + M_PI / 2.0);
}

double Frame::heading_to_parent(double local_heading) const {
  return wrap_angle(local_heading + heading - M_PI / 2.0);
}

double wrap_angle(double angle) {
  return std::remainder(angle, 2.0 * M_PI);
}

}  // namespace vecplan
