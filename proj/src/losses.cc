#include "vecplan/losses.h"

#include <algorithm>
#include <cmath>

#include "vecplan/error.h"

namespace vecplan {

namespace {
double sign(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace

std::size_t minfde_select(std::span<const Trajectory> modes, std::span<const Point2> gt) {
  if (modes.empty()) throw Error(ErrorCategory::kInvalidArgument, "minfde_select: no modes");
  if (gt.empty()) throw Error(ErrorCategory::kInvalidArgument, "minfde_select: empty truth");
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k].size() != gt.size()) {
      throw Error(ErrorCategory::kShape, "minfde_select: mode length != truth length");
    }
    const double d = norm(modes[k].back() - gt.back());
    if (k == 0 || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

MotionLoss motion_regression_loss(std::span<const Trajectory> modes,
                                  std::span<const double> scores, std::span<const Point2> gt) {
  if (!scores.empty() && scores.size() != modes.size()) {
    throw Error(ErrorCategory::kShape, "motion_regression_loss: score count != mode count");
  }
  MotionLoss out;
  out.selected = minfde_select(modes, gt);
  out.grad.assign(modes.size(), std::vector<Vec2>(gt.size()));
  const Trajectory& m = modes[out.selected];
  const double inv_t = 1.0 / static_cast<double>(gt.size());
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const Vec2 r = m[t] - gt[t];
    out.value += (std::abs(r.x) + std::abs(r.y)) * inv_t;
    out.grad[out.selected][t] = {sign(r.x) * inv_t, sign(r.y) * inv_t};
  }
  return out;
}

PointsLoss map_regression_loss(std::span<const Point2> pred, std::span<const Point2> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw Error(ErrorCategory::kShape, "map_regression_loss: " + std::to_string(pred.size()) +
                                           " predicted vs " + std::to_string(gt.size()) +
                                           " ground-truth points");
  }
  PointsLoss out;
  out.grad.resize(pred.size());
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec2 r = pred[i] - gt[i];
    out.value += (std::abs(r.x) + std::abs(r.y)) * inv_n;
    out.grad[i] = {sign(r.x) * inv_n, sign(r.y) * inv_n};
  }
  return out;
}

ScalarLoss focal_loss(double probability, bool positive, double gamma, double alpha) {
  constexpr double kEps = 1e-7;
  const double p = std::clamp(probability, kEps, 1.0 - kEps);
  const bool clamped = p != probability;
  ScalarLoss out;
  if (positive) {
    const double q = 1.0 - p;
    out.value = -alpha * std::pow(q, gamma) * std::log(p);
    if (!clamped) {
      const double dq = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0);
      out.grad = alpha * (dq * std::log(p) - std::pow(q, gamma) / p);
    }
  } else {
    const double q = 1.0 - p;
    out.value = -(1.0 - alpha) * std::pow(p, gamma) * std::log(q);
    if (!clamped) {
      const double dp = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0);
      out.grad = -(1.0 - alpha) * (dp * std::log(q) - std::pow(p, gamma) / q);
    }
  }
  return out;
}

}  // namespace vecplan
