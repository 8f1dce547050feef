#pragma once

#include <span>
#include <string>
#include <vector>

#include "vecplan/geometry.h"
#include "vecplan/scene.h"

namespace vecplan {

// Confidence filters and distance thresholds for the planning constraints.
// Distances in meters.
struct ConstraintParams {
  double agent_confidence = 0.5;   // epsilon_a
  double map_confidence = 0.5;     // epsilon_m
  double agent_range = 3.0;        // delta_a
  double boundary_margin = 1.0;    // delta_bd
  double direction_range = 2.0;    // delta_dir
  double safe_lateral = 1.5;       // delta_X
  double safe_longitudinal = 3.0;  // delta_Y
  // Measure per-axis agent distances in a frame aligned with the planned
  // heading at each step instead of the fixed planning-time ego frame.
  bool per_step_heading_frame = false;
  // Take both axis distances from the single Euclidean-nearest candidate
  // instead of independent per-axis minima.
  bool single_nearest_agent = false;

  // Throws on non-positive distances or thresholds outside [0,1]. Returns
  // human-readable warnings for legal but suspicious settings.
  std::vector<std::string> validate() const;
};

// Weights of the overall objective: map, motion, collision, boundary,
// direction, imitation.
struct LossWeights {
  double map = 1.0;
  double motion = 1.0;
  double collision = 1.0;
  double boundary = 1.0;
  double direction = 1.0;
  double imitation = 1.0;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  std::vector<Vec2> grad;  // d value / d waypoint, one entry per plan waypoint
};

// Agents must already be confidence-filtered; each contributes its best mode.
LossResult collision_loss(std::span<const Point2> plan, std::span<const AgentPrediction> agents,
                          const ConstraintParams& params);

// `boundaries` must already be filtered to confident road boundaries.
LossResult boundary_loss(std::span<const Point2> plan, std::span<const MapVector> boundaries,
                         const ConstraintParams& params);

// `dividers` must already be filtered to confident lane dividers.
LossResult direction_loss(std::span<const Point2> plan, std::span<const MapVector> dividers,
                          const ConstraintParams& params, Point2 origin = {});

LossResult imitation_loss(std::span<const Point2> plan, std::span<const Point2> expert);

// Mean squared second difference over (origin, plan...).
LossResult smoothness_loss(std::span<const Point2> plan, Point2 origin = {});

struct PlanningLoss {
  LossResult total;
  double collision = 0.0;
  double boundary = 0.0;
  double direction = 0.0;
  double imitation = 0.0;
};

// Weighted collision + boundary + direction + imitation on `plan`; applies
// the confidence and class filters to the scenario's map and agents.
PlanningLoss total_planning_loss(std::span<const Point2> plan, const Scenario& scenario,
                                 const ConstraintParams& params, const LossWeights& weights);

}  // namespace vecplan
