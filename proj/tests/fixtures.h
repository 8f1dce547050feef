#pragma once

// Random non-degenerate configurations for gradient checks. Every sampled
// configuration keeps all distances at least kMargin away from hinge
// thresholds, kinks and assignment ties so central differences stay on one
// smooth piece.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "test_util.h"
#include "vecplan/constraints.h"

namespace vecplan::testing {

inline constexpr double kMargin = 1e-3;

struct CollisionCase {
  std::vector<Point2> plan;
  std::vector<AgentPrediction> agents;
  ConstraintParams params;
};

struct MapCase {
  std::vector<Point2> plan;
  std::vector<MapVector> map;
  ConstraintParams params;
};

inline std::vector<Point2> random_plan(std::mt19937_64& rng, std::size_t tf) {
  std::uniform_real_distribution<double> lat(-0.4, 0.4), step(1.0, 3.0);
  std::vector<Point2> plan;
  Point2 p{};
  for (std::size_t t = 0; t < tf; ++t) {
    p = p + Point2{lat(rng), step(rng)};
    plan.push_back(p);
  }
  return plan;
}

inline bool collision_case_ok(const CollisionCase& c) {
  const ConstraintParams& q = c.params;
  int active = 0;
  for (std::size_t t = 0; t < c.plan.size(); ++t) {
    const Point2 w = c.plan[t];
    Vec2 fwd{0, 1};
    if (q.per_step_heading_frame) {
      const Vec2 e = w - (t == 0 ? Point2{} : c.plan[t - 1]);
      if (norm(e) < 0.1) return false;
      fwd = (1.0 / norm(e)) * e;
    }
    const Vec2 right{fwd.y, -fwd.x};
    std::vector<double> lats, lons;
    for (const AgentPrediction& a : c.agents) {
      const Vec2 d = w - best_mode(a)[t];
      const double dist = norm(d);
      if (std::abs(dist - q.agent_range) < kMargin) return false;
      if (dist > q.agent_range) continue;
      lats.push_back(std::abs(dot(d, right)));
      lons.push_back(std::abs(dot(d, fwd)));
    }
    for (auto* v : {&lats, &lons}) {
      std::sort(v->begin(), v->end());
      if (!v->empty() && v->front() < kMargin) return false;
      if (v->size() > 1 && (*v)[1] - (*v)[0] < kMargin) return false;
    }
    if (!lats.empty()) {
      if (std::abs(lats[0] - q.safe_lateral) < kMargin) return false;
      if (std::abs(lons[0] - q.safe_longitudinal) < kMargin) return false;
      active += (lats[0] < q.safe_lateral) + (lons[0] < q.safe_longitudinal);
    }
  }
  return active > 0;
}

inline CollisionCase random_collision_case(std::mt19937_64& rng, bool per_step_frame = false) {
  std::uniform_real_distribution<double> off(-2.8, 2.8), unit(0, 1);
  std::uniform_int_distribution<int> count(1, 4);
  for (;;) {
    CollisionCase c;
    c.params.per_step_heading_frame = per_step_frame;
    c.plan = random_plan(rng, 6);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      AgentPrediction a;
      a.modes.resize(2);
      a.mode_scores = {0.9, 0.3};
      for (auto& mode : a.modes) {
        for (const Point2& w : c.plan) {
          mode.push_back(unit(rng) < 0.6 ? w + Point2{off(rng), off(rng)}
                                         : w + Point2{8.0 + off(rng), off(rng)});
        }
      }
      a.position = a.modes[0][0];
      c.agents.push_back(a);
    }
    if (collision_case_ok(c)) return c;
  }
}

// Segment-level nearest distances to a point over a set of polylines,
// sorted ascending; each entry carries the foot point and segment direction.
struct SegmentDistance {
  double distance;
  Point2 foot;
  Vec2 direction;
  std::size_t polyline;
};

inline std::vector<SegmentDistance> segment_distances(Point2 p, const std::vector<Polyline>& pls) {
  std::vector<SegmentDistance> out;
  for (std::size_t i = 0; i < pls.size(); ++i) {
    for (std::size_t k = 0; k + 1 < pls[i].size(); ++k) {
      const Point2 a = pls[i][k], b = pls[i][k + 1];
      if (a == b) continue;
      const Point2 f = closest_point_on_segment(p, a, b);
      out.push_back({norm(p - f), f, b - a, i});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const SegmentDistance& x, const SegmentDistance& y) { return x.distance < y.distance; });
  return out;
}

inline Polyline random_polyline(std::mt19937_64& rng, double x0) {
  std::uniform_real_distribution<double> jitter(-0.6, 0.6), gap(2.0, 5.0);
  Polyline pl;
  double y = -2.0;
  for (int k = 0; k < 8; ++k) {
    pl.push_back({x0 + jitter(rng), y});
    y += gap(rng);
  }
  return pl;
}

inline MapCase random_boundary_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x(-3.0, 3.0);
  for (;;) {
    MapCase c;
    c.plan = random_plan(rng, 6);
    std::vector<Polyline> pls;
    for (int i = 0; i < 2; ++i) {
      pls.push_back(random_polyline(rng, x(rng)));
      c.map.push_back({MapClass::kRoadBoundary, pls.back(), 1.0, DrivableSide::kLeft});
    }
    bool ok = true;
    int active = 0;
    for (const Point2& w : c.plan) {
      const auto d = segment_distances(w, pls);
      if (d[0].distance < kMargin || std::abs(d[0].distance - c.params.boundary_margin) < kMargin) {
        ok = false;
      }
      if (d.size() > 1 && d[1].distance - d[0].distance < kMargin &&
          norm(d[1].foot - d[0].foot) > 1e-12) {
        ok = false;
      }
      active += d[0].distance < c.params.boundary_margin;
    }
    if (ok && active > 0) return c;
  }
}

inline MapCase random_direction_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> x(-1.5, 1.5);
  for (;;) {
    MapCase c;
    c.plan = random_plan(rng, 6);
    std::vector<Polyline> pls;
    for (int i = 0; i < 2; ++i) {
      pls.push_back(random_polyline(rng, x(rng)));
      c.map.push_back({MapClass::kLaneDivider, pls.back(), 1.0, DrivableSide::kNone});
    }
    const std::vector<Vec2> ego = ego_vectors(c.plan);
    bool ok = true;
    int active = 0;
    for (std::size_t t = 0; t < c.plan.size() && ok; ++t) {
      const auto d = segment_distances(c.plan[t], pls);
      if (std::abs(d[0].distance - c.params.direction_range) < kMargin) ok = false;
      if (d[0].distance > c.params.direction_range) continue;
      if (d.size() > 1 && d[1].distance - d[0].distance < kMargin) ok = false;
      const double angle = angular_difference(d[0].direction, ego[t]);
      if (angle < 0.05 || angle > M_PI - 0.05) ok = false;
      ++active;
    }
    if (ok && active > 0) return c;
  }
}

inline std::vector<Point2> random_expert(std::mt19937_64& rng, const std::vector<Point2>& plan) {
  std::uniform_real_distribution<double> off(-2.0, 2.0);
  std::vector<Point2> e;
  for (const Point2& w : plan) {
    Point2 r{off(rng), off(rng)};
    if (std::abs(r.x) < kMargin) r.x = 0.5;
    if (std::abs(r.y) < kMargin) r.y = -0.5;
    e.push_back(w + r);
  }
  return e;
}

// Max relative error between analytic and central-difference gradients over
// `count` seeded configurations of each loss.
struct GradientCheck {
  double collision = 0.0;
  double boundary = 0.0;
  double direction = 0.0;
  double imitation = 0.0;
};

inline GradientCheck check_constraint_gradients(std::uint64_t seed, int count,
                                                bool per_step_frame = false) {
  std::mt19937_64 rng(seed);
  GradientCheck out;
  for (int i = 0; i < count; ++i) {
    const CollisionCase col = random_collision_case(rng, per_step_frame);
    out.collision = std::max(
        out.collision,
        rel_error(flat(collision_loss(col.plan, col.agents, col.params).grad),
                  fd_plan_gradient(
                      [&](const std::vector<Point2>& p) {
                        return collision_loss(p, col.agents, col.params).value;
                      },
                      col.plan)));

    const MapCase bd = random_boundary_case(rng);
    out.boundary = std::max(
        out.boundary,
        rel_error(flat(boundary_loss(bd.plan, bd.map, bd.params).grad),
                  fd_plan_gradient(
                      [&](const std::vector<Point2>& p) {
                        return boundary_loss(p, bd.map, bd.params).value;
                      },
                      bd.plan)));

    const MapCase dir = random_direction_case(rng);
    out.direction = std::max(
        out.direction,
        rel_error(flat(direction_loss(dir.plan, dir.map, dir.params).grad),
                  fd_plan_gradient(
                      [&](const std::vector<Point2>& p) {
                        return direction_loss(p, dir.map, dir.params).value;
                      },
                      dir.plan)));

    const std::vector<Point2> plan = random_plan(rng, 6);
    const std::vector<Point2> expert = random_expert(rng, plan);
    out.imitation = std::max(
        out.imitation,
        rel_error(flat(imitation_loss(plan, expert).grad),
                  fd_plan_gradient(
                      [&](const std::vector<Point2>& p) { return imitation_loss(p, expert).value; },
                      plan)));
  }
  return out;
}

// Rigid motion of a scene, applied to plan, agent modes and map points.
template <typename F>
void move_case(std::vector<Point2>& plan, std::vector<AgentPrediction>& agents,
               std::vector<MapVector>& map, const F& f) {
  for (Point2& w : plan) w = f(w);
  for (AgentPrediction& a : agents) {
    a.position = f(a.position);
    for (Trajectory& m : a.modes) {
      for (Point2& p : m) p = f(p);
    }
  }
  for (MapVector& m : map) {
    for (Point2& p : m.points) p = f(p);
  }
}

}  // namespace vecplan::testing
