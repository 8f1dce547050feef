#pragma once

#include <string>
#include <vector>

#include "vecplan/constraints.h"
#include "vecplan/geometry.h"
#include "vecplan/metrics.h"
#include "vecplan/planner.h"
#include "vecplan/scene.h"

namespace vecplan {

struct Pose {
  Point2 position;
  double heading = M_PI / 2.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct SimState {
  std::size_t tick = 0;
  // Scene re-expressed in the current ego frame. Agent positions are the
  // ground truth at `tick`.
  Scenario scenario;
  // Ego pose in the initial ego frame.
  Pose ego_world{};
  Footprint ego_box;
  // Ground-truth ticks left before the horizon is exhausted.
  std::size_t remaining = 0;

  // Current ego frame expressed in the initial frame.
  Frame frame() const { return {ego_world.position, ego_world.heading}; }
};

SimState initial_state(const Scenario& scenario, const Footprint& ego_box = {});

// Ego box at the origin of the current frame.
OrientedBox ego_box(const SimState& state);
std::vector<OrientedBox> agent_boxes(const SimState& state);

// Re-expresses every element of `scenario` in `frame` (given in the
// scenario's frame). Ego state is left untouched.
Scenario reexpress(const Scenario& scenario, const Frame& frame);
// Inverse of reexpress.
Scenario express_in_parent(const Scenario& scenario, const Frame& frame);

// Teleports the ego to the plan's first waypoint and advances agents one tick
// along their ground truth. Throws Error(kHorizon) when no tick is left.
SimState step(const SimState& state, std::span<const Point2> executed_plan);

struct TickRecord {
  std::size_t tick = 0;  // 1-based, after the step
  PlanTrajectory plan;   // in the ego frame it was planned in
  Pose ego;              // executed pose, initial frame
  std::vector<Pose> agents;  // initial frame
  bool collision = false;
  bool overstep = false;
  double loss_collision = 0.0;
  double loss_boundary = 0.0;
  double loss_direction = 0.0;
  double loss_imitation = 0.0;
  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct RolloutLog {
  std::vector<TickRecord> ticks;

  // Columns: tick, ego_x, ego_y, ego_heading, collision, overstep,
  // loss_collision, loss_boundary, loss_direction, loss_imitation, then
  // plan_x1, plan_y1, ... plan_xT, plan_yT.
  std::string to_csv() const;
  friend bool operator==(const RolloutLog&, const RolloutLog&) = default;
};

struct RolloutOptions {
  Footprint ego_box;
  ConstraintParams constraints;
};

RolloutLog run_closed_loop(const Scenario& scenario, const Planner& planner, std::size_t ticks,
                           const RolloutOptions& options = {});

// Per-entity records in the initial ego frame for external plotting:
// tick,entity,id,index,x,y,heading. Entities: map_<class>, agent, ego, plan.
std::string trace_csv(const Scenario& scenario, const RolloutLog& log);

}  // namespace vecplan
