#include "vecplan/simulator.h"

#include <cmath>
#include <sstream>

#include "vecplan/autodiff.h"
#include "vecplan/error.h"

namespace vecplan {
namespace {

// Drops the first waypoint and extends the tail at constant velocity.
Trajectory shift(const Trajectory& traj) {
  if (traj.empty()) return traj;
  Trajectory out(traj.begin() + 1, traj.end());
  const Point2 last = traj.back();
  const Vec2 vel = traj.size() >= 2 ? last - traj[traj.size() - 2] : Vec2{};
  out.push_back(last + vel);
  return out;
}

Trajectory map_points(const Trajectory& traj, const auto& fn) {
  Trajectory out;
  out.reserve(traj.size());
  for (const Point2& p : traj) out.push_back(fn(p));
  return out;
}

template <typename PointFn, typename HeadingFn>
Scenario transform(const Scenario& s, const PointFn& pt, const HeadingFn& hd) {
  Scenario out = s;
  for (MapVector& m : out.map) m.points = map_points(m.points, pt);
  for (AgentPrediction& a : out.agents) {
    a.position = pt(a.position);
    a.heading = hd(a.heading);
    for (Trajectory& mode : a.modes) mode = map_points(mode, pt);
  }
  for (Trajectory& gt : out.agent_gt_futures) gt = map_points(gt, pt);
  out.expert = map_points(out.expert, pt);
  return out;
}

OrientedBox box_at(const Pose& p, double length, double width) {
  return {p.position, p.heading, length, width};
}

}  // namespace

SimState initial_state(const Scenario& scenario, const Footprint& box) {
  validate_scenario(scenario);
  SimState s;
  s.scenario = scenario;
  s.ego_box = box;
  s.ego_world = {scenario.ego.position, scenario.ego.heading};
  s.remaining = scenario.horizon();
  return s;
}

OrientedBox ego_box(const SimState& state) {
  return box_at({{0.0, 0.0}, M_PI / 2.0}, state.ego_box.length, state.ego_box.width);
}

std::vector<OrientedBox> agent_boxes(const SimState& state) {
  std::vector<OrientedBox> out;
  for (const AgentPrediction& a : state.scenario.agents) {
    out.push_back({a.position, a.heading, a.length, a.width});
  }
  return out;
}

Scenario reexpress(const Scenario& s, const Frame& f) {
  return transform(
      s, [&](Point2 p) { return f.to_local(p); },
      [&](double h) { return f.heading_to_local(h); });
}

Scenario express_in_parent(const Scenario& s, const Frame& f) {
  return transform(
      s, [&](Point2 p) { return f.to_parent(p); },
      [&](double h) { return f.heading_to_parent(h); });
}

SimState step(const SimState& state, std::span<const Point2> plan) {
  if (state.remaining == 0) {
    throw Error(ErrorCategory::kHorizon,
                "simulator: ground-truth horizon exhausted at tick " + std::to_string(state.tick));
  }
  if (plan.empty() || !is_finite(plan[0])) {
    throw Error(ErrorCategory::kInvalidArgument, "simulator: executed plan has no finite first waypoint");
  }
  const Point2 w = plan[0];
  const double heading = norm(w) > 0.0 ? std::atan2(w.y, w.x) : M_PI / 2.0;
  const Frame local{w, heading};

  Scenario next = state.scenario;
  for (std::size_t i = 0; i < next.agents.size(); ++i) {
    AgentPrediction& a = next.agents[i];
    const Trajectory& gt = next.agent_gt_futures[i];
    if (!gt.empty()) {
      const Vec2 d = gt[0] - a.position;
      if (norm(d) > 0.0) a.heading = std::atan2(d.y, d.x);
      a.position = gt[0];
    }
    for (Trajectory& mode : a.modes) mode = shift(mode);
    next.agent_gt_futures[i] = shift(gt);
  }
  next.expert = shift(next.expert);
  next = reexpress(next, local);

  const double dt = state.scenario.horizon_dt;
  const double speed = norm(w) / dt;
  next.ego.acceleration = (speed - state.scenario.ego.velocity) / dt;
  next.ego.velocity = speed;
  next.ego.steering_angle = wrap_angle(heading - M_PI / 2.0);

  SimState out = state;
  out.scenario = std::move(next);
  const Frame world = state.frame();
  out.ego_world = {world.to_parent(w), world.heading_to_parent(heading)};
  out.tick = state.tick + 1;
  out.remaining = state.remaining - 1;
  return out;
}

std::string RolloutLog::to_csv() const {
  std::ostringstream out;
  out << "tick,ego_x,ego_y,ego_heading,collision,overstep,loss_collision,loss_boundary,"
         "loss_direction,loss_imitation";
  const std::size_t tf = ticks.empty() ? 0 : ticks.front().plan.size();
  for (std::size_t t = 1; t <= tf; ++t) out << ",plan_x" << t << ",plan_y" << t;
  out << '\n';
  for (const TickRecord& r : ticks) {
    out << r.tick << ',' << format_double(r.ego.position.x) << ','
        << format_double(r.ego.position.y) << ',' << format_double(r.ego.heading) << ','
        << (r.collision ? 1 : 0) << ',' << (r.overstep ? 1 : 0) << ','
        << format_double(r.loss_collision) << ',' << format_double(r.loss_boundary) << ','
        << format_double(r.loss_direction) << ',' << format_double(r.loss_imitation);
    for (const Point2& p : r.plan) out << ',' << format_double(p.x) << ',' << format_double(p.y);
    out << '\n';
  }
  return out.str();
}

RolloutLog run_closed_loop(const Scenario& scenario, const Planner& planner, std::size_t ticks,
                           const RolloutOptions& options) {
  if (ticks > scenario.horizon()) {
    throw Error(ErrorCategory::kHorizon, "simulator: " + std::to_string(ticks) +
                                             " ticks requested, ground truth covers " +
                                             std::to_string(scenario.horizon()));
  }
  RolloutLog log;
  SimState state = initial_state(scenario, options.ego_box);
  for (std::size_t k = 0; k < ticks; ++k) {
    TickRecord r;
    r.plan = plan_once(state.scenario, planner);
    const PlanningLoss losses =
        total_planning_loss(r.plan, state.scenario, options.constraints, LossWeights{});
    r.loss_collision = losses.collision;
    r.loss_boundary = losses.boundary;
    r.loss_direction = losses.direction;
    r.loss_imitation = losses.imitation;

    state = step(state, r.plan);
    r.tick = state.tick;
    r.ego = state.ego_world;
    const Frame world = state.frame();
    const OrientedBox ego = ego_box(state);
    for (const OrientedBox& box : agent_boxes(state)) {
      r.agents.push_back({world.to_parent(box.center), world.heading_to_parent(box.heading)});
      if (oriented_rect_overlap(ego, box)) r.collision = true;
    }
    r.overstep = box_oversteps_boundary(ego, state.scenario.map);
    log.ticks.push_back(std::move(r));
  }
  return log;
}

std::string trace_csv(const Scenario& scenario, const RolloutLog& log) {
  std::ostringstream out;
  out << "tick,entity,id,index,x,y,heading\n";
  auto row = [&](std::size_t tick, const std::string& entity, std::size_t id, std::size_t index,
                 Point2 p, double heading) {
    out << tick << ',' << entity << ',' << id << ',' << index << ',' << format_double(p.x) << ','
        << format_double(p.y) << ',' << format_double(heading) << '\n';
  };
  for (std::size_t i = 0; i < scenario.map.size(); ++i) {
    const MapVector& m = scenario.map[i];
    const std::string tag = std::string("map_") + to_string(m.map_class);
    for (std::size_t k = 0; k < m.points.size(); ++k) row(0, tag, i, k, m.points[k], 0.0);
  }
  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    row(0, "agent", i, 0, scenario.agents[i].position, scenario.agents[i].heading);
  }
  row(0, "ego", 0, 0, scenario.ego.position, scenario.ego.heading);
  Frame planned_in{scenario.ego.position, scenario.ego.heading};
  for (const TickRecord& r : log.ticks) {
    for (std::size_t k = 0; k < r.plan.size(); ++k) {
      row(r.tick, "plan", 0, k, planned_in.to_parent(r.plan[k]), 0.0);
    }
    row(r.tick, "ego", 0, 0, r.ego.position, r.ego.heading);
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
      row(r.tick, "agent", i, 0, r.agents[i].position, r.agents[i].heading);
    }
    planned_in = {r.ego.position, r.ego.heading};
  }
  return out.str();
}

}  // namespace vecplan
