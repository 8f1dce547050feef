#include "vecplan/generator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <array>
#include <random>

#include "vecplan/error.h"

namespace vecplan {

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCategory::kConfig, "generator: " + what);
  };
  if (min_lanes < 1 || max_lanes < min_lanes) fail("need 1 <= min_lanes <= max_lanes");
  if (!(lane_width > 0.0)) fail("lane_width must be > 0");
  if (!std::isfinite(max_curvature) || max_curvature < 0.0) fail("max_curvature must be finite and >= 0");
  if (points_per_element < 2) fail("points_per_element must be >= 2");
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(horizon_dt > 0.0)) fail("horizon_dt must be > 0");
  if (num_modes < 1) fail("num_modes must be >= 1");
  if (!(mode_noise >= 0.0)) fail("mode_noise must be >= 0");
  if (min_agents < 0 || max_agents < min_agents) fail("need 0 <= min_agents <= max_agents");
  if (!(ego_speed_min >= 0.0 && ego_speed_max >= ego_speed_min)) fail("bad ego speed range");
  if (!(agent_speed_min >= 0.0 && agent_speed_max >= agent_speed_min)) fail("bad agent speed range");
  for (double p : {straight_probability, lead_probability, cut_in_probability,
                   lane_change_probability, crossing_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0,1]");
  }
  if (!(ego_length > 0.0 && ego_width > 0.0)) fail("ego dims must be > 0");
  if (!(perception_range.longitudinal > 0.0 && perception_range.lateral > 0.0)) {
    fail("perception range must be > 0");
  }
  // The ego may sit in an outermost lane, so the far boundary lies
  // (max_lanes - 0.5) lane widths to one side.
  if ((max_lanes - 0.5) * lane_width >= 0.5 * perception_range.lateral) {
    fail("a " + std::to_string(max_lanes) + "-lane road does not fit the lateral perception range");
  }
  const double max_travel = ego_speed_max * horizon * horizon_dt;
  if (max_travel >= 0.5 * perception_range.longitudinal) {
    fail("ego_speed_max carries the expert beyond the longitudinal perception range");
  }
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

// Constant-curvature road through the origin heading +y. `s` is arc length of
// the ego-lane center, `o` the lateral offset to the right of it.
struct Road {
  double curvature = 0.0;

  Point2 at(double s, double o) const {
    if (curvature == 0.0) return {o, s};
    const double ks = curvature * s;
    const Point2 c{(1.0 - std::cos(ks)) / curvature, std::sin(ks) / curvature};
    return c + o * Vec2{std::cos(ks), -std::sin(ks)};
  }

  double heading(double s) const { return std::atan2(std::cos(curvature * s), std::sin(curvature * s)); }
};

// Frenet samples at ticks 0..T.
struct Track {
  std::vector<double> s;
  std::vector<double> o;
};

double travelled(double v, double a, double tau) {
  if (a < 0.0) {
    const double stop = -v / a;
    if (tau > stop) tau = stop;
  }
  return std::max(0.0, v * tau + 0.5 * a * tau * tau);
}

struct Actor {
  Track track;
  double length = 4.5;
  double width = 1.9;
};

Trajectory positions(const Road& road, const Track& tr, std::size_t first) {
  Trajectory out;
  for (std::size_t t = first; t < tr.s.size(); ++t) out.push_back(road.at(tr.s[t], tr.o[t]));
  return out;
}

double track_heading(const Road& road, const Track& tr, std::size_t t) {
  const std::size_t a = t == 0 ? 0 : t - 1;
  const std::size_t b = t == 0 ? 1 : t;
  const Vec2 d = road.at(tr.s[b], tr.o[b]) - road.at(tr.s[a], tr.o[a]);
  if (norm(d) < 1e-6) return road.heading(tr.s[t]);
  return std::atan2(d.y, d.x);
}

bool tracks_collide(const Road& road, const Actor& a, const Actor& b, double margin) {
  for (std::size_t t = 0; t < a.track.s.size(); ++t) {
    const OrientedBox ba{road.at(a.track.s[t], a.track.o[t]), track_heading(road, a.track, t),
                         a.length + margin, a.width + margin};
    const OrientedBox bb{road.at(b.track.s[t], b.track.o[t]), track_heading(road, b.track, t),
                         b.length + margin, b.width + margin};
    if (oriented_rect_overlap(ba, bb)) return true;
  }
  return false;
}

class Builder {
 public:
  Builder(std::uint64_t seed, const GeneratorConfig& cfg) : rng_(seed), cfg_(cfg) {}

  Scenario build();

 private:
  bool inside(Point2 p) const {
    const double inset = 0.05;
    return std::abs(p.x) <= 0.5 * cfg_.perception_range.lateral - inset &&
           std::abs(p.y) <= 0.5 * cfg_.perception_range.longitudinal - inset;
  }
  double lane_offset(int lane) const { return (lane - ego_lane_) * cfg_.lane_width; }
  Polyline lane_line(double offset) const;
  std::optional<Polyline> crossing(double s0) const;
  Track lane_keep(double s0, double offset, double v, double a) const;
  Track lane_change(double s0, double from, double to, double v, double a, double duration) const;
  AgentPrediction predict(const Actor& actor);

  Rng rng_;
  const GeneratorConfig& cfg_;
  Road road_;
  int lanes_ = 1;
  int ego_lane_ = 0;
  std::size_t steps_ = 0;
};

Polyline Builder::lane_line(double offset) const {
  const double step = 0.1;
  const double limit = cfg_.perception_range.longitudinal;
  double hi = 0.0;
  while (hi + step <= limit && inside(road_.at(hi + step, offset))) hi += step;
  double lo = 0.0;
  while (lo - step >= -limit && inside(road_.at(lo - step, offset))) lo -= step;
  const int n = cfg_.points_per_element;
  Polyline pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back(road_.at(lo + (hi - lo) * i / (n - 1), offset));
  }
  return pts;
}

std::optional<Polyline> Builder::crossing(double s0) const {
  const double depth = 4.0;
  const double left = lane_offset(0) - 0.5 * cfg_.lane_width;
  const double right = lane_offset(lanes_ - 1) + 0.5 * cfg_.lane_width;
  // Closed rectangle walked by arc length in Frenet coordinates.
  const std::array<std::pair<double, double>, 5> corners{
      {{s0, left}, {s0, right}, {s0 + depth, right}, {s0 + depth, left}, {s0, left}}};
  const double perimeter = 2.0 * (depth + (right - left));
  const int n = cfg_.points_per_element;
  Polyline pts;
  for (int i = 0; i < n; ++i) {
    double d = perimeter * i / (n - 1);
    std::size_t k = 0;
    while (k < 3) {
      const double len = std::abs(corners[k + 1].first - corners[k].first) +
                         std::abs(corners[k + 1].second - corners[k].second);
      if (d <= len) break;
      d -= len;
      ++k;
    }
    const auto [sa, oa] = corners[k];
    const auto [sb, ob] = corners[k + 1];
    const double len = std::abs(sb - sa) + std::abs(ob - oa);
    const double u = len > 0.0 ? std::min(d / len, 1.0) : 0.0;
    const Point2 p = road_.at(sa + u * (sb - sa), oa + u * (ob - oa));
    if (!inside(p)) return std::nullopt;
    pts.push_back(p);
  }
  return pts;
}

Track Builder::lane_keep(double s0, double offset, double v, double a) const {
  Track tr;
  for (std::size_t t = 0; t <= steps_; ++t) {
    tr.s.push_back(s0 + travelled(v, a, t * cfg_.horizon_dt));
    tr.o.push_back(offset);
  }
  return tr;
}

Track Builder::lane_change(double s0, double from, double to, double v, double a,
                           double duration) const {
  Track tr = lane_keep(s0, from, v, a);
  for (std::size_t t = 0; t <= steps_; ++t) {
    tr.o[t] = from + (to - from) * smoothstep(t * cfg_.horizon_dt / duration);
  }
  return tr;
}

AgentPrediction Builder::predict(const Actor& actor) {
  AgentPrediction p;
  p.position = road_.at(actor.track.s[0], actor.track.o[0]);
  p.heading = track_heading(road_, actor.track, 0);
  p.length = actor.length;
  p.width = actor.width;
  p.confidence = 1.0;
  const int k_truth = rng_.uniform_int(0, cfg_.num_modes - 1);
  for (int k = 0; k < cfg_.num_modes; ++k) {
    if (k == k_truth) {
      p.modes.push_back(positions(road_, actor.track, 1));
      p.mode_scores.push_back(1.0);
      continue;
    }
    const double speed_scale = rng_.uniform(0.5, 1.5);
    const double shift = cfg_.lane_width * rng_.uniform_int(-1, 1);
    const double jitter = cfg_.mode_noise > 0.0 ? rng_.normal(0.0, cfg_.mode_noise) : 0.0;
    Track tr = actor.track;
    for (std::size_t t = 0; t <= steps_; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(steps_);
      tr.s[t] = actor.track.s[0] + speed_scale * (actor.track.s[t] - actor.track.s[0]);
      tr.o[t] = actor.track.o[t] + shift * smoothstep(u) + jitter * u;
    }
    p.modes.push_back(positions(road_, tr, 1));
    p.mode_scores.push_back(rng_.uniform(0.05, 0.8));
  }
  return p;
}

Scenario Builder::build() {
  steps_ = static_cast<std::size_t>(cfg_.horizon);
  const double dt = cfg_.horizon_dt;
  const double horizon_s = steps_ * dt;
  const double half_long = 0.5 * cfg_.perception_range.longitudinal;

  lanes_ = rng_.uniform_int(cfg_.min_lanes, cfg_.max_lanes);
  ego_lane_ = rng_.uniform_int(0, lanes_ - 1);
  if (!rng_.bernoulli(cfg_.straight_probability) && cfg_.max_curvature > 0.0) {
    const double k = rng_.uniform(0.25 * cfg_.max_curvature, cfg_.max_curvature);
    road_.curvature = rng_.bernoulli(0.5) ? k : -k;
  }

  Scenario sc;
  sc.horizon_dt = dt;
  sc.perception_range = cfg_.perception_range;

  // Map: boundaries flank the outermost lanes, dividers between lanes.
  const double left_edge = lane_offset(0) - 0.5 * cfg_.lane_width;
  const double right_edge = lane_offset(lanes_ - 1) + 0.5 * cfg_.lane_width;
  sc.map.push_back({MapClass::kRoadBoundary, lane_line(left_edge), 1.0, DrivableSide::kRight});
  for (int i = 0; i + 1 < lanes_; ++i) {
    sc.map.push_back({MapClass::kLaneDivider, lane_line(lane_offset(i) + 0.5 * cfg_.lane_width),
                      1.0, DrivableSide::kNone});
  }
  sc.map.push_back({MapClass::kRoadBoundary, lane_line(right_edge), 1.0, DrivableSide::kLeft});
  if (rng_.bernoulli(cfg_.crossing_probability)) {
    if (auto c = crossing(rng_.uniform(8.0, 22.0))) {
      sc.map.push_back({MapClass::kPedestrianCrossing, std::move(*c), 1.0, DrivableSide::kNone});
    }
  }

  // Ego and command.
  EgoState& ego = sc.ego;
  ego.velocity = rng_.uniform(cfg_.ego_speed_min, cfg_.ego_speed_max);
  ego.acceleration = rng_.uniform(-1.0, 1.0);
  const double max_reach = half_long - 2.0;
  if (travelled(ego.velocity, ego.acceleration, horizon_s) > max_reach) {
    ego.acceleration = 2.0 * (max_reach - ego.velocity * horizon_s) / (horizon_s * horizon_s);
  }
  ego.steering_angle = rng_.normal(0.0, 0.02);
  int target_lane = ego_lane_;
  if (rng_.bernoulli(cfg_.lane_change_probability)) {
    const bool can_left = ego_lane_ > 0;
    const bool can_right = ego_lane_ + 1 < lanes_;
    if (can_left && (!can_right || rng_.bernoulli(0.5))) {
      target_lane = ego_lane_ - 1;
      ego.command = Command::kTurnLeft;
    } else if (can_right) {
      target_lane = ego_lane_ + 1;
      ego.command = Command::kTurnRight;
    }
  }
  const double target_offset = lane_offset(target_lane);
  const double change_duration = rng_.uniform(2.5, horizon_s);

  // Agents.
  std::vector<Actor> actors;
  const int wanted = rng_.uniform_int(cfg_.min_agents, cfg_.max_agents);
  for (int n = 0; n < wanted; ++n) {
    for (int attempt = 0; attempt < 30; ++attempt) {
      Actor actor;
      actor.length = rng_.uniform(4.0, 5.2);
      actor.width = rng_.uniform(1.8, 2.1);
      const double accel = rng_.uniform(-1.0, 1.0);
      if (n == 0 && rng_.bernoulli(cfg_.lead_probability)) {
        const double v = rng_.uniform(0.0, 0.8 * ego.velocity);
        actor.track = lane_keep(rng_.uniform(9.0, 26.0), target_offset, v, accel);
      } else if (n == 1 && lanes_ > 1 && rng_.bernoulli(cfg_.cut_in_probability)) {
        int from = target_lane + (rng_.bernoulli(0.5) ? 1 : -1);
        if (from < 0 || from >= lanes_) from = 2 * target_lane - from;
        const double v = rng_.uniform(0.4, 1.0) * ego.velocity;
        actor.track = lane_change(rng_.uniform(6.0, 20.0), lane_offset(from), target_offset, v,
                                  accel, rng_.uniform(1.5, horizon_s));
      } else {
        const int lane = rng_.uniform_int(0, lanes_ - 1);
        const double v = rng_.uniform(cfg_.agent_speed_min, cfg_.agent_speed_max);
        actor.track = lane_keep(rng_.uniform(-25.0, 27.0), lane_offset(lane), v, accel);
      }
      if (!inside(road_.at(actor.track.s[0], actor.track.o[0]))) continue;
      bool clash = false;
      for (const Actor& other : actors) {
        if (tracks_collide(road_, actor, other, 1.0)) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      actors.push_back(std::move(actor));
      break;
    }
  }

  // Expert: follows the command laterally and keeps a gap to anything
  // sharing its lane ahead. Lateral progress is tied to distance travelled so
  // a slow expert does not slide sideways.
  Actor ego_actor;
  ego_actor.length = cfg_.ego_length;
  ego_actor.width = cfg_.ego_width;
  ego_actor.track = lane_keep(0.0, 0.0, ego.velocity, ego.acceleration);
  const double change_length = std::max(12.0, ego.velocity * change_duration);
  auto offset_at = [&](double s) {
    return target_offset * smoothstep(std::max(s, 0.0) / change_length);
  };
  for (std::size_t t = 1; t <= steps_; ++t) {
    double& s = ego_actor.track.s[t];
    const double lateral = offset_at(s);
    double bound = std::numeric_limits<double>::infinity();
    for (const Actor& a : actors) {
      if (a.track.s[0] <= 0.0) continue;
      if (std::abs(a.track.o[t] - lateral) >= 0.75 * cfg_.lane_width) continue;
      bound = std::min(bound, a.track.s[t] - 0.5 * (cfg_.ego_length + a.length) - 3.0);
    }
    s = std::max(ego_actor.track.s[t - 1], std::min(s, bound));
    ego_actor.track.o[t] = offset_at(s);
  }
  std::erase_if(actors, [&](const Actor& a) { return tracks_collide(road_, ego_actor, a, 0.6); });

  sc.expert = positions(road_, ego_actor.track, 1);
  for (const Actor& a : actors) {
    sc.agents.push_back(predict(a));
    sc.agent_gt_futures.push_back(positions(road_, a.track, 1));
  }
  return sc;
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const GeneratorConfig& config) {
  config.validate();
  Builder builder(seed, config);
  Scenario sc = builder.build();
  validate_scenario(sc);
  for (const Point2& p : sc.expert) {
    if (!sc.perception_range.contains(p)) {
      throw Error(ErrorCategory::kConfig, "generator: expert left the perception range");
    }
  }
  return sc;
}

std::uint64_t scenario_seed(std::uint64_t base_seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = base_seed * 0x9E3779B97F4A7C15ULL + index + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Scenario> generate_scenarios(std::uint64_t base_seed, std::size_t count,
                                         const GeneratorConfig& config) {
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_scenario(scenario_seed(base_seed, i), config));
  }
  return out;
}

}  // namespace vecplan
