#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecplan/geometry.h"

namespace vecplan {

enum class MapClass { kLaneDivider, kRoadBoundary, kPedestrianCrossing };

// Side of a road boundary, relative to its point order, on which the drivable
// area lies. Only meaningful for kRoadBoundary.
enum class DrivableSide { kNone, kLeft, kRight };

enum class Command { kTurnLeft, kTurnRight, kGoStraight };

const char* to_string(MapClass c);
const char* to_string(DrivableSide s);
const char* to_string(Command c);
MapClass map_class_from_string(const std::string& s);
DrivableSide drivable_side_from_string(const std::string& s);
Command command_from_string(const std::string& s);

using Trajectory = std::vector<Point2>;
// T_f ego waypoints in the current ego frame.
using PlanTrajectory = Trajectory;

struct MapVector {
  MapClass map_class = MapClass::kLaneDivider;
  Polyline points;
  double confidence = 1.0;
  DrivableSide drivable_side = DrivableSide::kNone;

  friend bool operator==(const MapVector&, const MapVector&) = default;
};

// Modes are absolute ego-frame positions, not offsets from `position`.
struct AgentPrediction {
  Point2 position;
  double heading = 0.0;
  double length = 4.5;
  double width = 1.9;
  double confidence = 1.0;
  std::vector<Trajectory> modes;
  std::vector<double> mode_scores;

  friend bool operator==(const AgentPrediction&, const AgentPrediction&) = default;
};

struct EgoState {
  Point2 position;
  double heading = M_PI / 2.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double steering_angle = 0.0;
  Command command = Command::kGoStraight;

  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct PerceptionRange {
  double longitudinal = 60.0;
  double lateral = 30.0;

  bool contains(Point2 p) const {
    return std::abs(p.y) <= 0.5 * longitudinal && std::abs(p.x) <= 0.5 * lateral;
  }
  friend bool operator==(const PerceptionRange&, const PerceptionRange&) = default;
};

struct Scenario {
  std::vector<MapVector> map;
  std::vector<AgentPrediction> agents;
  // Ground truth for agents[i]; drives the simulator and the metrics.
  std::vector<Trajectory> agent_gt_futures;
  EgoState ego;
  Trajectory expert;
  double horizon_dt = 0.5;
  PerceptionRange perception_range;

  std::size_t horizon() const { return expert.size(); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Throws Error(kInvalidArgument) naming the first violated invariant.
void validate_scenario(const Scenario& scenario);

// Keeps elements with confidence >= threshold, in order.
std::vector<MapVector> filter_map(std::span<const MapVector> map, double threshold,
                                  std::optional<MapClass> class_filter = std::nullopt);
std::vector<AgentPrediction> filter_agents(std::span<const AgentPrediction> agents,
                                           double threshold);

std::size_t best_mode_index(const AgentPrediction& agent);
const Trajectory& best_mode(const AgentPrediction& agent);

// v[0] = plan[0] - origin, v[t] = plan[t] - plan[t-1].
std::vector<Vec2> ego_vectors(std::span<const Point2> plan, Point2 origin = {});

std::vector<Polyline> polylines_of(std::span<const MapVector> map);

}  // namespace vecplan
