#include "vecplan/scene.h"

#include <cmath>

#include "vecplan/error.h"

namespace vecplan {

const char* to_string(MapClass c) {
  switch (c) {
    case MapClass::kLaneDivider: return "lane_divider";
    case MapClass::kRoadBoundary: return "road_boundary";
    case MapClass::kPedestrianCrossing: return "ped_crossing";
  }
  return "?";
}

const char* to_string(DrivableSide s) {
  switch (s) {
    case DrivableSide::kNone: return "none";
    case DrivableSide::kLeft: return "left";
    case DrivableSide::kRight: return "right";
  }
  return "?";
}

const char* to_string(Command c) {
  switch (c) {
    case Command::kTurnLeft: return "turn_left";
    case Command::kTurnRight: return "turn_right";
    case Command::kGoStraight: return "go_straight";
  }
  return "?";
}

MapClass map_class_from_string(const std::string& s) {
  for (MapClass c : {MapClass::kLaneDivider, MapClass::kRoadBoundary,
                     MapClass::kPedestrianCrossing}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCategory::kSchema, "unknown map class '" + s + "'");
}

DrivableSide drivable_side_from_string(const std::string& s) {
  for (DrivableSide d : {DrivableSide::kNone, DrivableSide::kLeft, DrivableSide::kRight}) {
    if (s == to_string(d)) return d;
  }
  throw Error(ErrorCategory::kSchema, "unknown drivable side '" + s + "'");
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::kTurnLeft, Command::kTurnRight, Command::kGoStraight}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCategory::kSchema, "unknown command '" + s + "'");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::kInvalidArgument, "invalid scenario: " + what);
}

bool finite_all(std::span<const Point2> pts) {
  for (const Point2& p : pts) {
    if (!is_finite(p)) return false;
  }
  return true;
}

}  // namespace

void validate_scenario(const Scenario& s) {
  require(std::isfinite(s.horizon_dt) && s.horizon_dt > 0.0, "horizon_dt must be > 0");
  require(s.horizon() >= 1, "expert must have at least one waypoint");
  require(finite_all(s.expert), "expert has non-finite waypoint");
  require(s.perception_range.longitudinal > 0.0 && s.perception_range.lateral > 0.0,
          "perception range must be positive");
  const std::size_t tf = s.horizon();
  for (std::size_t i = 0; i < s.map.size(); ++i) {
    const MapVector& m = s.map[i];
    validate_polyline(m.points);
    require(m.confidence >= 0.0 && m.confidence <= 1.0,
            "map[" + std::to_string(i) + "] confidence outside [0,1]");
    if (i > 0) {
      require(m.points.size() == s.map[0].points.size(),
              "map[" + std::to_string(i) + "] point count differs from map[0]");
    }
  }
  require(s.agent_gt_futures.size() == s.agents.size(), "one ground-truth future per agent");
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentPrediction& a = s.agents[i];
    const std::string tag = "agents[" + std::to_string(i) + "]";
    require(is_finite(a.position) && std::isfinite(a.heading), tag + " pose non-finite");
    require(a.length > 0.0 && a.width > 0.0, tag + " size must be positive");
    require(a.confidence >= 0.0 && a.confidence <= 1.0, tag + " confidence outside [0,1]");
    require(!a.modes.empty(), tag + " needs at least one mode");
    require(a.modes.size() == a.mode_scores.size(), tag + " mode/score count mismatch");
    for (std::size_t k = 0; k < a.modes.size(); ++k) {
      require(a.modes[k].size() == tf, tag + " mode length != T_f");
      require(finite_all(a.modes[k]), tag + " mode has non-finite waypoint");
      require(a.mode_scores[k] >= 0.0 && a.mode_scores[k] <= 1.0,
              tag + " mode score outside [0,1]");
    }
    require(s.agent_gt_futures[i].size() == tf, tag + " ground-truth future length != T_f");
    require(finite_all(s.agent_gt_futures[i]), tag + " ground truth non-finite");
  }
  require(is_finite(s.ego.position) && std::isfinite(s.ego.heading) &&
              std::isfinite(s.ego.velocity) && std::isfinite(s.ego.acceleration) &&
              std::isfinite(s.ego.steering_angle),
          "ego state non-finite");
}

std::vector<MapVector> filter_map(std::span<const MapVector> map, double threshold,
                                  std::optional<MapClass> class_filter) {
  std::vector<MapVector> out;
  for (const MapVector& m : map) {
    if (m.confidence < threshold) continue;
    if (class_filter && m.map_class != *class_filter) continue;
    out.push_back(m);
  }
  return out;
}

std::vector<AgentPrediction> filter_agents(std::span<const AgentPrediction> agents,
                                           double threshold) {
  std::vector<AgentPrediction> out;
  for (const AgentPrediction& a : agents) {
    if (a.confidence >= threshold) out.push_back(a);
  }
  return out;
}

std::size_t best_mode_index(const AgentPrediction& agent) {
  if (agent.modes.empty()) throw Error(ErrorCategory::kInvalidArgument, "agent has no modes");
  std::size_t best = 0;
  for (std::size_t k = 1; k < agent.mode_scores.size(); ++k) {
    if (agent.mode_scores[k] > agent.mode_scores[best]) best = k;
  }
  return best;
}

const Trajectory& best_mode(const AgentPrediction& agent) {
  return agent.modes[best_mode_index(agent)];
}

std::vector<Vec2> ego_vectors(std::span<const Point2> plan, Point2 origin) {
  std::vector<Vec2> out;
  out.reserve(plan.size());
  Point2 prev = origin;
  for (const Point2& p : plan) {
    out.push_back(p - prev);
    prev = p;
  }
  return out;
}

std::vector<Polyline> polylines_of(std::span<const MapVector> map) {
  std::vector<Polyline> out;
  out.reserve(map.size());
  for (const MapVector& m : map) out.push_back(m.points);
  return out;
}

}  // namespace vecplan
