#include "vecplan/planner.h"

#include <algorithm>
#include <cmath>

#include "vecplan/error.h"

namespace vecplan {

PlanTrajectory ConstantVelocityPlanner::plan(const Scenario& s) const {
  PlanTrajectory out(s.horizon());
  const double step = s.ego.velocity * s.horizon_dt;
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = {0.0, step * static_cast<double>(t + 1)};
  }
  return out;
}

PlanTrajectory ExpertPlanner::plan(const Scenario& s) const { return s.expert; }

PlanTrajectory ModelPlanner::plan(const Scenario& s) const {
  return forward_plan(s, params_).plan;
}

LossResult refine_objective(std::span<const Point2> plan, const Scenario& s,
                            const ConstraintParams& params, const LossWeights& weights,
                            bool use_expert) {
  LossWeights w = weights;
  if (!use_expert) w.imitation = 0.0;
  LossResult out = total_planning_loss(plan, s, params, w).total;
  if (!use_expert && weights.imitation != 0.0) {
    const LossResult smooth = smoothness_loss(plan);
    out.value += weights.imitation * smooth.value;
    for (std::size_t t = 0; t < plan.size(); ++t) {
      out.grad[t] = out.grad[t] + weights.imitation * smooth.grad[t];
    }
  }
  return out;
}

PlanTrajectory refine_trajectory(std::span<const Point2> seed_plan, const Scenario& s,
                                 const ConstraintParams& params, const LossWeights& weights,
                                 int steps, double step_size, bool use_expert,
                                 std::vector<double>* best_losses) {
  if (steps < 0) throw Error(ErrorCategory::kInvalidArgument, "refine: steps must be >= 0");
  if (!(step_size > 0.0)) throw Error(ErrorCategory::kInvalidArgument, "refine: step_size must be > 0");
  PlanTrajectory current(seed_plan.begin(), seed_plan.end());
  PlanTrajectory best = current;
  if (steps == 0) return best;

  const double hx = 0.5 * s.perception_range.lateral;
  const double hy = 0.5 * s.perception_range.longitudinal;
  LossResult r = refine_objective(current, s, params, weights, use_expert);
  double best_value = r.value;
  if (best_losses) best_losses->assign(1, best_value);
  for (int k = 0; k < steps; ++k) {
    for (std::size_t t = 0; t < current.size(); ++t) {
      current[t] = current[t] - step_size * r.grad[t];
      current[t].x = std::clamp(current[t].x, -hx, hx);
      current[t].y = std::clamp(current[t].y, -hy, hy);
    }
    r = refine_objective(current, s, params, weights, use_expert);
    if (r.value < best_value) {
      best_value = r.value;
      best = current;
    }
    if (best_losses) best_losses->push_back(best_value);
  }
  return best;
}

PlanTrajectory RefinePlanner::plan(const Scenario& s) const {
  const PlanTrajectory seed = ConstantVelocityPlanner().plan(s);
  return refine_trajectory(seed, s, params_, weights_, options_.steps, options_.step_size,
                           options_.use_expert);
}

PlanTrajectory plan_once(const Scenario& s, const Planner& planner) {
  PlanTrajectory out = planner.plan(s);
  if (out.size() != s.horizon()) {
    throw Error(ErrorCategory::kShape, planner.name() + " planner returned " +
                                           std::to_string(out.size()) + " waypoints, expected " +
                                           std::to_string(s.horizon()));
  }
  return out;
}

}  // namespace vecplan
