#pragma once

#include <memory>
#include <string>

#include "vecplan/constraints.h"
#include "vecplan/interact.h"
#include "vecplan/scene.h"

namespace vecplan {

class Planner {
 public:
  virtual ~Planner() = default;
  // T_f waypoints in the scenario's current ego frame.
  virtual PlanTrajectory plan(const Scenario& scenario) const = 0;
  virtual std::string name() const = 0;
};

// Straight ahead at the current ego speed.
class ConstantVelocityPlanner : public Planner {
 public:
  PlanTrajectory plan(const Scenario& scenario) const override;
  std::string name() const override { return "constant_velocity"; }
};

// Replays the scenario's expert trajectory.
class ExpertPlanner : public Planner {
 public:
  PlanTrajectory plan(const Scenario& scenario) const override;
  std::string name() const override { return "expert"; }
};

class ModelPlanner : public Planner {
 public:
  explicit ModelPlanner(InteractionParams params) : params_(std::move(params)) {}
  PlanTrajectory plan(const Scenario& scenario) const override;
  std::string name() const override { return "model"; }
  const InteractionParams& params() const { return params_; }

 private:
  InteractionParams params_;
};

struct RefineOptions {
  int steps = 60;
  double step_size = 0.05;
  // Use the scenario expert for the imitation term. Off by default: the
  // imitation weight then scales a second-difference smoothness prior.
  bool use_expert = false;
};

// Objective minimized by refine_trajectory.
LossResult refine_objective(std::span<const Point2> plan, const Scenario& scenario,
                            const ConstraintParams& params, const LossWeights& weights,
                            bool use_expert = false);

// Projected gradient descent on the waypoints, clamped to the perception
// range. Returns the iterate with the lowest observed objective.
PlanTrajectory refine_trajectory(std::span<const Point2> seed_plan, const Scenario& scenario,
                                 const ConstraintParams& params, const LossWeights& weights,
                                 int steps, double step_size, bool use_expert = false,
                                 std::vector<double>* best_losses = nullptr);

// Refines the constant-velocity plan.
class RefinePlanner : public Planner {
 public:
  RefinePlanner(ConstraintParams params, LossWeights weights, RefineOptions options = {})
      : params_(params), weights_(weights), options_(options) {}
  PlanTrajectory plan(const Scenario& scenario) const override;
  std::string name() const override { return "refine"; }

 private:
  ConstraintParams params_;
  LossWeights weights_;
  RefineOptions options_;
};

PlanTrajectory plan_once(const Scenario& scenario, const Planner& planner);

}  // namespace vecplan
