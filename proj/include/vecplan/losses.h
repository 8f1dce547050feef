#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecplan/geometry.h"
#include "vecplan/scene.h"

namespace vecplan {

// Mode whose final waypoint is nearest the ground-truth final waypoint;
// lowest index on ties.
std::size_t minfde_select(std::span<const Trajectory> modes, std::span<const Point2> gt);

struct MotionLoss {
  double value = 0.0;
  std::size_t selected = 0;
  std::vector<std::vector<Vec2>> grad;  // [mode][waypoint]; zero except the selected mode
};

// Winner-take-all L1 regression: mean over T_f of the per-step L1 norm between
// the minFDE mode and the ground truth.
MotionLoss motion_regression_loss(std::span<const Trajectory> modes,
                                  std::span<const double> scores, std::span<const Point2> gt);

struct PointsLoss {
  double value = 0.0;
  std::vector<Vec2> grad;
};

// Mean Manhattan distance over corresponding points.
PointsLoss map_regression_loss(std::span<const Point2> pred, std::span<const Point2> gt);

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;  // d value / d probability
};

// Binary focal loss on a probability clamped to [1e-7, 1 - 1e-7].
ScalarLoss focal_loss(double probability, bool positive, double gamma = 2.0,
                      double alpha = 0.25);

}  // namespace vecplan
