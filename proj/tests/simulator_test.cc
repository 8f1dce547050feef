#include "vecplan/simulator.h"

#include <gtest/gtest.h>

#include <random>

#include "test_util.h"
#include "vecplan/error.h"
#include "vecplan/generator.h"

namespace vecplan {
namespace {

using testing::line;
using testing::parked_agent;

Scenario empty_scene(double velocity = 4.0, std::size_t horizon = 6) {
  Scenario s;
  s.ego.velocity = velocity;
  for (std::size_t t = 0; t < horizon; ++t) {
    s.expert.push_back({0.0, velocity * 0.5 * static_cast<double>(t + 1)});
  }
  return s;
}

void expect_near(Point2 a, Point2 b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

// Agent whose ground truth moves along `path`, one point per tick.
AgentPrediction moving_agent(const Trajectory& path, Point2 start) {
  AgentPrediction a;
  a.position = start;
  a.heading = std::atan2(path[0].y - start.y, path[0].x - start.x);
  a.modes = {path};
  a.mode_scores = {1.0};
  return a;
}

TEST(ConstantVelocity, StraightOnEmptyScene) {
  const Scenario s = empty_scene(4.0);
  const PlanTrajectory p = ConstantVelocityPlanner{}.plan(s);
  ASSERT_EQ(p.size(), 6u);
  for (std::size_t t = 0; t < p.size(); ++t) {
    EXPECT_EQ(p[t].x, 0.0);
    EXPECT_DOUBLE_EQ(p[t].y, 2.0 * static_cast<double>(t + 1));
  }
}

TEST(Refine, DescendsAndZeroStepsReturnsSeed) {
  const LossWeights w;
  const ConstraintParams cp;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = generate_scenario(seed, GeneratorConfig{});
    const PlanTrajectory init = ConstantVelocityPlanner{}.plan(s);
    EXPECT_EQ(refine_trajectory(init, s, cp, w, 0, 0.05), init);
    std::vector<double> best;
    const PlanTrajectory out = refine_trajectory(init, s, cp, w, 40, 0.05, false, &best);
    EXPECT_LE(refine_objective(out, s, cp, w).value, refine_objective(init, s, cp, w).value);
    ASSERT_EQ(best.size(), 41u);
    for (std::size_t i = 1; i < best.size(); ++i) EXPECT_LE(best[i], best[i - 1]);
    for (const Point2& p : out) EXPECT_TRUE(s.perception_range.contains(p));
  }
}

TEST(Refine, MovesAwayFromBoundary) {
  Scenario s = empty_scene(4.0);
  // Boundary half a meter inside the margin of the straight plan.
  MapVector b{MapClass::kRoadBoundary, line({0.5, -5}, {0.5, 30}, 8), 1.0, DrivableSide::kLeft};
  s.map.push_back(b);
  const LossWeights only_boundary{0, 0, 0, 1, 0, 0};
  const ConstraintParams cp;
  const PlanTrajectory init = ConstantVelocityPlanner{}.plan(s);
  const double before = refine_objective(init, s, cp, only_boundary).value;
  EXPECT_GT(before, 0.0);
  const PlanTrajectory out = refine_trajectory(init, s, cp, only_boundary, 30, 0.05);
  EXPECT_LT(refine_objective(out, s, cp, only_boundary).value, before);
  for (std::size_t t = 0; t < out.size(); ++t) EXPECT_LT(out[t].x, init[t].x);
}

TEST(Refine, RejectsBadOptions) {
  const Scenario s = empty_scene();
  const PlanTrajectory init = ConstantVelocityPlanner{}.plan(s);
  EXPECT_THROW(refine_trajectory(init, s, {}, {}, -1, 0.05), Error);
  EXPECT_THROW(refine_trajectory(init, s, {}, {}, 5, 0.0), Error);
}

TEST(Step, ZeroPlanKeepsEgoInPlace) {
  const Scenario s = generate_scenario(3, GeneratorConfig{});
  const SimState s0 = initial_state(s);
  const SimState s1 = step(s0, PlanTrajectory(s.horizon(), Point2{0, 0}));
  EXPECT_EQ(s1.ego_world.position, s0.ego_world.position);
  EXPECT_DOUBLE_EQ(s1.ego_world.heading, s0.ego_world.heading);
  EXPECT_EQ(s1.tick, 1u);
  EXPECT_EQ(s1.scenario.ego.velocity, 0.0);
}

TEST(Step, AgentsFollowGroundTruth) {
  const Scenario s = generate_scenario(9, GeneratorConfig{.min_agents = 3});
  ASSERT_GE(s.agents.size(), 3u);
  const SimState s0 = initial_state(s);
  const PlanTrajectory plan = ConstantVelocityPlanner{}.plan(s);
  const SimState s1 = step(s0, plan);
  const Frame f = s1.frame();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    expect_near(f.to_parent(s1.scenario.agents[i].position), s.agent_gt_futures[i][0], 1e-9);
  }
  expect_near(s1.ego_world.position, plan[0], 1e-12);
  // The ego sits at the origin facing +y in its own frame.
  EXPECT_EQ(ego_box(s1).center, (Point2{0, 0}));
}

TEST(Step, TurnsTowardFirstWaypoint) {
  const Scenario s = empty_scene();
  const SimState s1 = step(initial_state(s), PlanTrajectory(6, Point2{1, 1}));
  EXPECT_NEAR(s1.ego_world.heading, M_PI / 4, 1e-12);
  EXPECT_NEAR(s1.scenario.ego.steering_angle, -M_PI / 4, 1e-12);
  EXPECT_NEAR(s1.scenario.ego.velocity, std::sqrt(2.0) / 0.5, 1e-12);
}

TEST(Reexpress, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10), h(-M_PI, M_PI);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario s = generate_scenario(seed, GeneratorConfig{});
    const Frame f{{u(rng), u(rng)}, h(rng)};
    const Scenario back = express_in_parent(reexpress(s, f), f);
    for (std::size_t i = 0; i < s.map.size(); ++i) {
      for (std::size_t k = 0; k < s.map[i].points.size(); ++k) {
        expect_near(back.map[i].points[k], s.map[i].points[k], 1e-9);
      }
    }
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      expect_near(back.agents[i].position, s.agents[i].position, 1e-9);
      EXPECT_NEAR(wrap_angle(back.agents[i].heading - s.agents[i].heading), 0.0, 1e-9);
      for (std::size_t t = 0; t < s.horizon(); ++t) {
        expect_near(back.agent_gt_futures[i][t], s.agent_gt_futures[i][t], 1e-9);
      }
    }
    for (std::size_t t = 0; t < s.horizon(); ++t) expect_near(back.expert[t], s.expert[t], 1e-9);
  }
}

TEST(ClosedLoop, LogLengthAndDeterminism) {
  const Scenario s = generate_scenario(12, GeneratorConfig{});
  const RefinePlanner planner({}, {}, RefineOptions{.steps = 10});
  const RolloutLog a = run_closed_loop(s, planner, 4);
  const RolloutLog b = run_closed_loop(s, planner, 4);
  ASSERT_EQ(a.ticks.size(), 4u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(trace_csv(s, a), trace_csv(s, b));
  for (std::size_t k = 0; k < a.ticks.size(); ++k) EXPECT_EQ(a.ticks[k].tick, k + 1);
  EXPECT_EQ(run_closed_loop(s, planner, 0).ticks.size(), 0u);
}

TEST(ClosedLoop, ExpertReplayFollowsExpert) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = generate_scenario(seed, GeneratorConfig{});
    const RolloutLog log = run_closed_loop(s, ExpertPlanner{}, s.horizon());
    for (std::size_t k = 0; k < log.ticks.size(); ++k) {
      expect_near(log.ticks[k].ego.position, s.expert[k], 1e-9);
      EXPECT_FALSE(log.ticks[k].collision) << "seed " << seed << " tick " << k + 1;
    }
  }
}

TEST(ClosedLoop, ZeroWeightRefineIsPassThrough) {
  const Scenario s = generate_scenario(4, GeneratorConfig{});
  const LossWeights zero{0, 0, 0, 0, 0, 0};
  const RolloutLog refined = run_closed_loop(s, RefinePlanner({}, zero), 3);
  const RolloutLog plain = run_closed_loop(s, ConstantVelocityPlanner{}, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    expect_near(refined.ticks[k].ego.position, plain.ticks[k].ego.position, 1e-9);
  }
}

TEST(ClosedLoop, CrossingAgentCollides) {
  Scenario s = empty_scene(4.0);
  // Crosses the ego lane at y = 4, reaching it on the second tick.
  Trajectory gt;
  for (int t = 1; t <= 6; ++t) gt.push_back({-8.0 + 4.0 * t, 4.0});
  s.agents.push_back(moving_agent(gt, {-8.0, 4.0}));
  s.agent_gt_futures.push_back(gt);
  const LossWeights no_collision{1, 1, 0, 1, 1, 1};
  const RolloutLog log = run_closed_loop(s, RefinePlanner({}, no_collision), 6);
  bool any = false;
  for (const TickRecord& r : log.ticks) any = any || r.collision;
  EXPECT_TRUE(any);
}

TEST(ClosedLoop, ParkedAgentAheadIsFlagged) {
  Scenario s = empty_scene(4.0);
  s.agents.push_back(parked_agent({0, 2}, 6));
  s.agent_gt_futures.push_back(Trajectory(6, Point2{0, 2}));
  const RolloutLog log = run_closed_loop(s, ConstantVelocityPlanner{}, 1);
  EXPECT_TRUE(log.ticks[0].collision);
}

TEST(ClosedLoop, HorizonExhaustion) {
  const Scenario s = empty_scene(4.0, 6);
  try {
    run_closed_loop(s, ConstantVelocityPlanner{}, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kHorizon);
  }
  SimState st = initial_state(s);
  for (int k = 0; k < 6; ++k) st = step(st, PlanTrajectory(6, Point2{0, 1}));
  EXPECT_THROW(step(st, PlanTrajectory(6, Point2{0, 1})), Error);
}

TEST(ClosedLoop, CsvShape) {
  const Scenario s = empty_scene();
  const RolloutLog log = run_closed_loop(s, ConstantVelocityPlanner{}, 2);
  const std::string csv = log.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("plan_y6") != std::string::npos, true);
}

TEST(PlanOnce, RejectsWrongLength) {
  class Short : public Planner {
   public:
    PlanTrajectory plan(const Scenario&) const override { return {{0, 1}}; }
    std::string name() const override { return "short"; }
  };
  EXPECT_THROW(plan_once(empty_scene(), Short{}), Error);
}

}  // namespace
}  // namespace vecplan
