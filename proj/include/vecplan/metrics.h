#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecplan/geometry.h"
#include "vecplan/scene.h"

namespace vecplan {

// Ego footprint used for collision and overstep checks, meters.
struct Footprint {
  double length = 4.0;
  double width = 1.85;
};

inline constexpr std::array<double, 3> kMetricHorizons{1.0, 2.0, 3.0};

// Number of waypoints covering `seconds`, rounded to the nearest tick.
std::size_t horizon_tick(double seconds, double dt);

struct HorizonMetric {
  std::array<double, 3> at{};  // 1 s, 2 s, 3 s
  double average = 0.0;
};

// L2 between planned and expert waypoints at the 1/2/3 s ticks.
HorizonMetric displacement_error(std::span<const Point2> plan, std::span<const Point2> expert,
                                 double horizon_dt);

// Heading of the ego box at each planned waypoint: direction of the step
// vector, falling back to the previous heading when the step is zero.
std::vector<double> plan_headings(std::span<const Point2> plan, double initial_heading);

// Ground-truth agent boxes at tick t (1-based waypoint index t-1).
std::vector<OrientedBox> agent_boxes_at(const Scenario& scenario, std::size_t waypoint);

// 1-based tick of the first overlap between the ego box on `plan` and any
// agent box on its ground-truth future, considering ticks <= max_tick.
std::optional<std::size_t> first_collision_tick(const Scenario& scenario,
                                                std::span<const Point2> plan,
                                                const Footprint& footprint,
                                                std::size_t max_tick);

// Open-loop cumulative collision rate in percent at 1/2/3 s.
HorizonMetric collision_rate(std::span<const Scenario> scenarios,
                             std::span<const PlanTrajectory> plans, const Footprint& footprint);

// True if any corner of `box` lies beyond its nearest labelled road
// boundary on the non-drivable side.
bool box_oversteps_boundary(const OrientedBox& box, std::span<const MapVector> map);

struct PlanMetrics {
  HorizonMetric l2;
  HorizonMetric collision;
  double overstep_rate = 0.0;  // percent of samples, any tick within 3 s
};

PlanMetrics evaluate_plans(std::span<const Scenario> scenarios,
                           std::span<const PlanTrajectory> plans, const Footprint& footprint);

struct ReportRow {
  std::string name;
  std::vector<std::string> tags;  // leading descriptive columns
  PlanMetrics metrics;
};

// Table with L2 1s/2s/3s/Avg and Collision 1s/2s/3s/Avg columns.
std::string report_csv(std::span<const std::string> tag_headers, std::span<const ReportRow> rows);
std::string report_table(std::span<const std::string> tag_headers,
                         std::span<const ReportRow> rows);

}  // namespace vecplan
