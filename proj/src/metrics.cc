#include "vecplan/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "vecplan/error.h"

namespace vecplan {

std::size_t horizon_tick(double seconds, double dt) {
  return static_cast<std::size_t>(std::lround(seconds / dt));
}

namespace {

std::array<std::size_t, 3> metric_ticks(std::size_t length, double dt) {
  std::array<std::size_t, 3> ticks{};
  for (std::size_t h = 0; h < 3; ++h) {
    ticks[h] = horizon_tick(kMetricHorizons[h], dt);
    if (ticks[h] < 1 || ticks[h] > length) {
      throw Error(ErrorCategory::kHorizon,
                  "metric horizon " + std::to_string(kMetricHorizons[h]) +
                      " s needs tick " + std::to_string(ticks[h]) + " but plan has " +
                      std::to_string(length) + " waypoints");
    }
  }
  return ticks;
}

double mean3(const std::array<double, 3>& v) { return (v[0] + v[1] + v[2]) / 3.0; }

}  // namespace

HorizonMetric displacement_error(std::span<const Point2> plan, std::span<const Point2> expert,
                                 double horizon_dt) {
  if (plan.size() != expert.size()) {
    throw Error(ErrorCategory::kShape, "displacement_error: plan/expert length mismatch");
  }
  const auto ticks = metric_ticks(plan.size(), horizon_dt);
  HorizonMetric out;
  for (std::size_t h = 0; h < 3; ++h) out.at[h] = norm(plan[ticks[h] - 1] - expert[ticks[h] - 1]);
  out.average = mean3(out.at);
  return out;
}

std::vector<double> plan_headings(std::span<const Point2> plan, double initial_heading) {
  std::vector<double> out;
  out.reserve(plan.size());
  double heading = initial_heading;
  Point2 prev{};
  for (const Point2& p : plan) {
    const Vec2 d = p - prev;
    if (norm(d) > 1e-9) heading = std::atan2(d.y, d.x);
    out.push_back(heading);
    prev = p;
  }
  return out;
}

std::vector<OrientedBox> agent_boxes_at(const Scenario& s, std::size_t waypoint) {
  std::vector<OrientedBox> out;
  out.reserve(s.agents.size());
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentPrediction& a = s.agents[i];
    const Trajectory& gt = s.agent_gt_futures[i];
    double heading = a.heading;
    Point2 prev = a.position;
    for (std::size_t t = 0; t <= waypoint; ++t) {
      const Vec2 d = gt[t] - prev;
      if (norm(d) > 1e-9) heading = std::atan2(d.y, d.x);
      prev = gt[t];
    }
    out.push_back({gt[waypoint], heading, a.length, a.width});
  }
  return out;
}

std::optional<std::size_t> first_collision_tick(const Scenario& s, std::span<const Point2> plan,
                                                const Footprint& fp, std::size_t max_tick) {
  const std::vector<double> headings = plan_headings(plan, s.ego.heading);
  max_tick = std::min(max_tick, plan.size());
  for (std::size_t t = 0; t < max_tick; ++t) {
    const OrientedBox ego{plan[t], headings[t], fp.length, fp.width};
    for (const OrientedBox& a : agent_boxes_at(s, t)) {
      if (oriented_rect_overlap(ego, a)) return t + 1;
    }
  }
  return std::nullopt;
}

HorizonMetric collision_rate(std::span<const Scenario> scenarios,
                             std::span<const PlanTrajectory> plans, const Footprint& fp) {
  if (scenarios.size() != plans.size()) {
    throw Error(ErrorCategory::kShape, "collision_rate: scenario/plan count mismatch");
  }
  HorizonMetric out;
  if (scenarios.empty()) return out;
  std::array<std::size_t, 3> hits{};
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto ticks = metric_ticks(plans[i].size(), scenarios[i].horizon_dt);
    const auto first = first_collision_tick(scenarios[i], plans[i], fp, ticks[2]);
    if (!first) continue;
    for (std::size_t h = 0; h < 3; ++h) {
      if (*first <= ticks[h]) ++hits[h];
    }
  }
  for (std::size_t h = 0; h < 3; ++h) {
    out.at[h] = 100.0 * static_cast<double>(hits[h]) / static_cast<double>(scenarios.size());
  }
  out.average = mean3(out.at);
  return out;
}

bool box_oversteps_boundary(const OrientedBox& box, std::span<const MapVector> map) {
  for (const Point2& corner : box_corners(box)) {
    double best = std::numeric_limits<double>::infinity();
    const MapVector* nearest = nullptr;
    std::size_t segment = 0;
    for (const MapVector& m : map) {
      if (m.map_class != MapClass::kRoadBoundary || m.drivable_side == DrivableSide::kNone) continue;
      const SegmentHit hit = point_polyline_distance(corner, m.points);
      if (hit.distance < best) {
        best = hit.distance;
        nearest = &m;
        segment = hit.segment;
      }
    }
    if (!nearest) return false;
    const Point2 a = nearest->points[segment];
    const Point2 b = nearest->points[segment + 1];
    const double side = cross(b - a, corner - a);  // > 0: left of the boundary direction
    if (nearest->drivable_side == DrivableSide::kLeft && side < 0.0) return true;
    if (nearest->drivable_side == DrivableSide::kRight && side > 0.0) return true;
  }
  return false;
}

PlanMetrics evaluate_plans(std::span<const Scenario> scenarios,
                           std::span<const PlanTrajectory> plans, const Footprint& fp) {
  if (scenarios.size() != plans.size()) {
    throw Error(ErrorCategory::kShape, "evaluate_plans: scenario/plan count mismatch");
  }
  PlanMetrics out;
  if (scenarios.empty()) return out;
  std::size_t oversteps = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const HorizonMetric de =
        displacement_error(plans[i], scenarios[i].expert, scenarios[i].horizon_dt);
    for (std::size_t h = 0; h < 3; ++h) out.l2.at[h] += de.at[h];
    const std::size_t last = horizon_tick(kMetricHorizons[2], scenarios[i].horizon_dt);
    const std::vector<double> headings = plan_headings(plans[i], scenarios[i].ego.heading);
    for (std::size_t t = 0; t < last; ++t) {
      if (box_oversteps_boundary({plans[i][t], headings[t], fp.length, fp.width},
                                 scenarios[i].map)) {
        ++oversteps;
        break;
      }
    }
  }
  const double n = static_cast<double>(scenarios.size());
  for (double& v : out.l2.at) v /= n;
  out.l2.average = mean3(out.l2.at);
  out.collision = collision_rate(scenarios, plans, fp);
  out.overstep_rate = 100.0 * static_cast<double>(oversteps) / n;
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

const std::array<const char*, 8> kMetricHeaders{"l2_1s", "l2_2s", "l2_3s", "l2_avg",
                                                "col_1s", "col_2s", "col_3s", "col_avg"};

std::vector<double> metric_cells(const PlanMetrics& m) {
  return {m.l2.at[0], m.l2.at[1], m.l2.at[2], m.l2.average,
          m.collision.at[0], m.collision.at[1], m.collision.at[2], m.collision.average};
}

}  // namespace

std::string report_csv(std::span<const std::string> tag_headers,
                       std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "name";
  for (const auto& h : tag_headers) out << ',' << h;
  for (const char* h : kMetricHeaders) out << ',' << h;
  out << ",overstep\n";
  for (const ReportRow& r : rows) {
    out << r.name;
    for (const auto& t : r.tags) out << ',' << t;
    for (double v : metric_cells(r.metrics)) out << ',' << fixed(v, 6);
    out << ',' << fixed(r.metrics.overstep_rate, 6) << '\n';
  }
  return out.str();
}

std::string report_table(std::span<const std::string> tag_headers,
                         std::span<const ReportRow> rows) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"name"};
  header.insert(header.end(), tag_headers.begin(), tag_headers.end());
  for (const char* h : {"L2 1s", "L2 2s", "L2 3s", "L2 Avg", "Col% 1s", "Col% 2s", "Col% 3s",
                        "Col% Avg", "Overstep%"}) {
    header.emplace_back(h);
  }
  cells.push_back(header);
  for (const ReportRow& r : rows) {
    std::vector<std::string> line{r.name};
    line.insert(line.end(), r.tags.begin(), r.tags.end());
    for (double v : metric_cells(r.metrics)) line.push_back(fixed(v, 2));
    line.push_back(fixed(r.metrics.overstep_rate, 2));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], line[c].size());
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c > 0) out << " | ";
      const std::string& s = cells[r][c];
      out << s << std::string(width[c] - s.size(), ' ');
    }
    out << '\n';
    if (r == 0) {
      for (std::size_t c = 0; c < width.size(); ++c) {
        if (c > 0) out << "-+-";
        out << std::string(width[c], '-');
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace vecplan
