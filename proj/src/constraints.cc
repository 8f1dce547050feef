#include "vecplan/constraints.h"

#include <cmath>
#include <limits>
#include <optional>

#include "vecplan/error.h"

namespace vecplan {

std::vector<std::string> ConstraintParams::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCategory::kConfig, "constraints: " + what);
  };
  if (!(agent_confidence >= 0.0 && agent_confidence <= 1.0)) fail("agent_confidence outside [0,1]");
  if (!(map_confidence >= 0.0 && map_confidence <= 1.0)) fail("map_confidence outside [0,1]");
  if (!(agent_range > 0.0)) fail("agent_range must be > 0");
  if (!(boundary_margin > 0.0)) fail("boundary_margin must be > 0");
  if (!(direction_range > 0.0)) fail("direction_range must be > 0");
  if (!(safe_lateral > 0.0)) fail("safe_lateral must be > 0");
  if (!(safe_longitudinal > 0.0)) fail("safe_longitudinal must be > 0");
  std::vector<std::string> warnings;
  if (agent_range < std::max(safe_lateral, safe_longitudinal)) {
    warnings.push_back("agent_range is smaller than a per-axis safety threshold; that hinge can"
                       " only activate for agents inside the range");
  }
  return warnings;
}

void LossWeights::validate() const {
  for (double w : {map, motion, collision, boundary, direction, imitation}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCategory::kConfig, "weights: every weight must be finite and >= 0");
    }
  }
}

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

// Axis projection s = (w - a) . axis(e) together with its partials with
// respect to the current waypoint w and the previous waypoint, through the
// step vector e = w - prev when the axis follows the planned heading.
struct Projection {
  double value = 0.0;
  Vec2 d_current;
  Vec2 d_previous;
};

struct StepFrame {
  Vec2 forward{0.0, 1.0};
  Vec2 right{1.0, 0.0};
  bool moving = false;  // axes depend on the step vector
  double step_norm = 0.0;

  Projection lateral(Vec2 delta) const {
    Projection p{dot(delta, right), right, {}};
    if (moving) {
      // d(right)/de^T delta = J_f (R^T delta), with J_f = (I - f f^T) / |e|.
      const Vec2 rt{-delta.y, delta.x};
      const Vec2 j = (1.0 / step_norm) * (rt - dot(forward, rt) * forward);
      p.d_current = p.d_current + j;
      p.d_previous = -1.0 * j;
    }
    return p;
  }

  Projection longitudinal(Vec2 delta) const {
    Projection p{dot(delta, forward), forward, {}};
    if (moving) {
      const Vec2 j = (1.0 / step_norm) * (delta - dot(forward, delta) * forward);
      p.d_current = p.d_current + j;
      p.d_previous = -1.0 * j;
    }
    return p;
  }
};

}  // namespace

LossResult collision_loss(std::span<const Point2> plan, std::span<const AgentPrediction> agents,
                          const ConstraintParams& params) {
  const std::size_t tf = plan.size();
  LossResult out{0.0, std::vector<Vec2>(tf)};
  if (tf == 0) return out;

  std::vector<const Trajectory*> tracks;
  tracks.reserve(agents.size());
  for (const AgentPrediction& a : agents) {
    const Trajectory& mode = best_mode(a);
    if (mode.size() != tf) {
      throw Error(ErrorCategory::kShape, "collision_loss: agent mode length != plan length");
    }
    tracks.push_back(&mode);
  }

  const double inv_t = 1.0 / static_cast<double>(tf);
  for (std::size_t t = 0; t < tf; ++t) {
    const Point2 w = plan[t];
    StepFrame frame;
    if (params.per_step_heading_frame) {
      const Vec2 e = w - (t == 0 ? Point2{} : plan[t - 1]);
      const double n = norm(e);
      if (n > 0.0) {
        frame.forward = (1.0 / n) * e;
        frame.right = {frame.forward.y, -frame.forward.x};
        frame.moving = true;
        frame.step_norm = n;
      }
    }

    std::optional<std::size_t> lat_pick, lon_pick, nearest;
    double best_lat = std::numeric_limits<double>::infinity();
    double best_lon = best_lat;
    double best_dist = best_lat;
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      const Vec2 delta = w - (*tracks[j])[t];
      const double dist = norm(delta);
      if (dist > params.agent_range) continue;
      const double lat = std::abs(dot(delta, frame.right));
      const double lon = std::abs(dot(delta, frame.forward));
      if (lat < best_lat) { best_lat = lat; lat_pick = j; }
      if (lon < best_lon) { best_lon = lon; lon_pick = j; }
      if (dist < best_dist) { best_dist = dist; nearest = j; }
    }
    if (!nearest) continue;
    if (params.single_nearest_agent) {
      lat_pick = nearest;
      lon_pick = nearest;
    }

    auto apply = [&](const Projection& p, double threshold) {
      const double d = std::abs(p.value);
      if (d >= threshold) return;
      out.value += (threshold - d) * inv_t;
      const double s = -sign(p.value) * inv_t;
      out.grad[t] = out.grad[t] + s * p.d_current;
      if (t > 0) out.grad[t - 1] = out.grad[t - 1] + s * p.d_previous;
    };
    apply(frame.lateral(w - (*tracks[*lat_pick])[t]), params.safe_lateral);
    apply(frame.longitudinal(w - (*tracks[*lon_pick])[t]), params.safe_longitudinal);
  }
  return out;
}

LossResult boundary_loss(std::span<const Point2> plan, std::span<const MapVector> boundaries,
                         const ConstraintParams& params) {
  const std::size_t tf = plan.size();
  LossResult out{0.0, std::vector<Vec2>(tf)};
  if (tf == 0 || boundaries.empty()) return out;
  const double inv_t = 1.0 / static_cast<double>(tf);
  for (std::size_t t = 0; t < tf; ++t) {
    const Point2 w = plan[t];
    double best = std::numeric_limits<double>::infinity();
    Point2 foot;
    for (const MapVector& b : boundaries) {
      const SegmentHit hit = point_polyline_distance(w, b.points);
      if (hit.distance < best) {
        best = hit.distance;
        foot = closest_point_on_segment(w, b.points[hit.segment], b.points[hit.segment + 1]);
      }
    }
    if (best >= params.boundary_margin) continue;
    out.value += (params.boundary_margin - best) * inv_t;
    // d(dist)/dw is the unit vector from the foot point; undefined on the line.
    if (best > 0.0) out.grad[t] = out.grad[t] - (inv_t / best) * (w - foot);
  }
  return out;
}

LossResult direction_loss(std::span<const Point2> plan, std::span<const MapVector> dividers,
                          const ConstraintParams& params, Point2 origin) {
  const std::size_t tf = plan.size();
  LossResult out{0.0, std::vector<Vec2>(tf)};
  if (tf == 0 || dividers.empty()) return out;
  const std::vector<Polyline> lines = polylines_of(dividers);
  const std::vector<Vec2> ego = ego_vectors(plan, origin);
  const double inv_t = 1.0 / static_cast<double>(tf);
  for (std::size_t t = 0; t < tf; ++t) {
    const auto hit = closest_polyline_within(plan[t], lines, params.direction_range);
    if (!hit) continue;
    const Vec2 b = ego[t];
    if (norm(b) == 0.0) continue;
    const Polyline& line = lines[hit->index];
    const Vec2 a = line[hit->segment + 1] - line[hit->segment];
    out.value += angular_difference(a, b) * inv_t;

    // theta = |atan2(cross(a,b), dot(a,b))|; the kink at cross == 0 takes 0.
    const double c = cross(a, b);
    if (c == 0.0) continue;
    const double d = dot(a, b);
    const Vec2 dc{-a.y, a.x};
    const Vec2 g = (sign(c) * inv_t / (c * c + d * d)) * (d * dc - c * a);
    out.grad[t] = out.grad[t] + g;
    if (t > 0) out.grad[t - 1] = out.grad[t - 1] - g;
  }
  return out;
}

LossResult imitation_loss(std::span<const Point2> plan, std::span<const Point2> expert) {
  if (plan.size() != expert.size()) {
    throw Error(ErrorCategory::kShape, "imitation_loss: plan has " + std::to_string(plan.size()) +
                                           " waypoints, expert has " +
                                           std::to_string(expert.size()));
  }
  const std::size_t tf = plan.size();
  LossResult out{0.0, std::vector<Vec2>(tf)};
  if (tf == 0) return out;
  const double inv_t = 1.0 / static_cast<double>(tf);
  for (std::size_t t = 0; t < tf; ++t) {
    const Vec2 r = plan[t] - expert[t];
    out.value += (std::abs(r.x) + std::abs(r.y)) * inv_t;
    out.grad[t] = {sign(r.x) * inv_t, sign(r.y) * inv_t};
  }
  return out;
}

LossResult smoothness_loss(std::span<const Point2> plan, Point2 origin) {
  const std::size_t tf = plan.size();
  LossResult out{0.0, std::vector<Vec2>(tf)};
  if (tf < 2) return out;
  const double inv_t = 1.0 / static_cast<double>(tf);
  // Second differences over the sequence (origin, plan[0], ..., plan[tf-1]).
  auto at = [&](std::size_t i) { return i == 0 ? origin : plan[i - 1]; };
  for (std::size_t i = 1; i + 1 <= tf; ++i) {
    const Vec2 dd = at(i + 1) - 2.0 * at(i) + at(i - 1);
    out.value += dot(dd, dd) * inv_t;
    const Vec2 g = (2.0 * inv_t) * dd;
    out.grad[i] = out.grad[i] + g;  // plan index i corresponds to at(i + 1)
    out.grad[i - 1] = out.grad[i - 1] - 2.0 * g;
    if (i >= 2) out.grad[i - 2] = out.grad[i - 2] + g;
  }
  return out;
}

PlanningLoss total_planning_loss(std::span<const Point2> plan, const Scenario& scenario,
                                 const ConstraintParams& params, const LossWeights& weights) {
  const auto agents = filter_agents(scenario.agents, params.agent_confidence);
  const auto boundaries =
      filter_map(scenario.map, params.map_confidence, MapClass::kRoadBoundary);
  const auto dividers = filter_map(scenario.map, params.map_confidence, MapClass::kLaneDivider);

  const LossResult col = collision_loss(plan, agents, params);
  const LossResult bd = boundary_loss(plan, boundaries, params);
  const LossResult dir = direction_loss(plan, dividers, params);
  const LossResult imi = imitation_loss(plan, scenario.expert);

  PlanningLoss out;
  out.collision = col.value;
  out.boundary = bd.value;
  out.direction = dir.value;
  out.imitation = imi.value;
  out.total.value = weights.collision * col.value + weights.boundary * bd.value +
                    weights.direction * dir.value + weights.imitation * imi.value;
  out.total.grad.resize(plan.size());
  for (std::size_t t = 0; t < plan.size(); ++t) {
    out.total.grad[t] = weights.collision * col.grad[t] + weights.boundary * bd.grad[t] +
                        weights.direction * dir.grad[t] + weights.imitation * imi.grad[t];
  }
  return out;
}

}  // namespace vecplan
