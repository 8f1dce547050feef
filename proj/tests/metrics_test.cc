#include "vecplan/metrics.h"

#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "test_util.h"
#include "vecplan/ablation.h"
#include "vecplan/error.h"
#include "vecplan/generator.h"
#include "vecplan/planner.h"

namespace vecplan {
namespace {

using testing::parked_agent;

Trajectory straight(double step, std::size_t n = 6) {
  Trajectory t;
  for (std::size_t i = 1; i <= n; ++i) t.push_back({0.0, step * static_cast<double>(i)});
  return t;
}

Scenario empty_scene() {
  Scenario s;
  s.ego.velocity = 4.0;
  s.expert = straight(2.0);
  return s;
}

TEST(Displacement, Examples) {
  const Trajectory expert = straight(2.0);
  Trajectory plan = expert;
  for (Point2& p : plan) p.x += 0.3;
  const HorizonMetric m = displacement_error(plan, expert, 0.5);
  for (double v : m.at) EXPECT_NEAR(v, 0.3, 1e-12);
  EXPECT_NEAR(m.average, 0.3, 1e-12);

  plan = expert;
  plan[1].y += 1.0;  // 1 s
  plan[3].x += 2.0;  // 2 s
  plan[5].y -= 4.0;  // 3 s
  const HorizonMetric n = displacement_error(plan, expert, 0.5);
  EXPECT_DOUBLE_EQ(n.at[0], 1.0);
  EXPECT_DOUBLE_EQ(n.at[1], 2.0);
  EXPECT_DOUBLE_EQ(n.at[2], 4.0);
  EXPECT_DOUBLE_EQ(n.average, 7.0 / 3.0);
}

TEST(Displacement, ShortHorizonIsAnError) {
  const Trajectory t = straight(2.0, 4);
  EXPECT_THROW(displacement_error(t, t, 0.5), Error);
  EXPECT_THROW(displacement_error(straight(1, 6), straight(1, 5), 0.5), Error);
}

TEST(Displacement, TranslationInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 100; ++i) {
    Trajectory a, b;
    for (int t = 0; t < 6; ++t) {
      a.push_back({u(rng), u(rng)});
      b.push_back({u(rng), u(rng)});
    }
    const Point2 d{u(rng), u(rng)};
    Trajectory a2 = a, b2 = b;
    for (auto& p : a2) p = p + d;
    for (auto& p : b2) p = p + d;
    EXPECT_NEAR(displacement_error(a, b, 0.5).average, displacement_error(a2, b2, 0.5).average,
                1e-9);
  }
}

TEST(CollisionRate, EmptyScenesNeverCollide) {
  const std::vector<Scenario> s(10, empty_scene());
  const std::vector<PlanTrajectory> p(10, straight(2.0));
  const HorizonMetric m = collision_rate(s, p, {});
  for (double v : m.at) EXPECT_EQ(v, 0.0);
}

TEST(CollisionRate, ParkedAgentOnFirstSecondWaypoint) {
  Scenario s = empty_scene();
  s.agents.push_back(parked_agent({0, 4}, 6));
  s.agent_gt_futures.push_back(Trajectory(6, Point2{0, 4}));
  const std::vector<Scenario> ss{s};
  const std::vector<PlanTrajectory> p{straight(2.0)};
  const HorizonMetric m = collision_rate(ss, p, {});
  EXPECT_EQ(m.at[0], 100.0);
  EXPECT_EQ(m.at[1], 100.0);
  EXPECT_EQ(m.at[2], 100.0);
  EXPECT_EQ(first_collision_tick(s, p[0], {}, 6), std::optional<std::size_t>(1));
}

TEST(CollisionRate, MatchesBruteForceOracle) {
  GeneratorConfig g;
  const std::vector<Scenario> scenes = generate_scenarios(31, 150, g);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> jitter(0.0, 1.5);
  std::vector<PlanTrajectory> plans;
  for (const Scenario& s : scenes) {
    PlanTrajectory p = ConstantVelocityPlanner{}.plan(s);
    for (Point2& w : p) w = w + Point2{jitter(rng), jitter(rng)};
    plans.push_back(p);
  }
  const Footprint fp;
  std::array<int, 3> hits{};
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::size_t first = testing::oracle_first_hit(scenes[i], plans[i], fp);
    const auto got = first_collision_tick(scenes[i], plans[i], fp, 6);
    EXPECT_EQ(got.value_or(0), first) << "scenario " << i;
    for (int h = 0; h < 3; ++h) {
      if (first != 0 && first <= static_cast<std::size_t>(2 * (h + 1))) ++hits[h];
    }
  }
  const HorizonMetric m = collision_rate(scenes, plans, fp);
  for (int h = 0; h < 3; ++h) EXPECT_DOUBLE_EQ(m.at[h], 100.0 * hits[h] / 150.0);
  EXPECT_GT(hits[2], 0);
  EXPECT_LE(m.at[0], m.at[1]);
  EXPECT_LE(m.at[1], m.at[2]);
}

TEST(PlanHeadings, FallBackOnZeroSteps) {
  const Trajectory p{{0, 0}, {1, 0}, {1, 0}};
  const std::vector<double> h = plan_headings(p, M_PI / 2);
  EXPECT_DOUBLE_EQ(h[0], M_PI / 2);
  EXPECT_DOUBLE_EQ(h[1], 0.0);
  EXPECT_DOUBLE_EQ(h[2], 0.0);
}

TEST(Overstep, BoxAcrossBoundary) {
  const std::vector<MapVector> map{
      {MapClass::kRoadBoundary, testing::line({2, -30}, {2, 30}, 4), 1.0, DrivableSide::kLeft}};
  EXPECT_FALSE(box_oversteps_boundary({{0, 0}, M_PI / 2, 4.0, 1.85}, map));
  EXPECT_TRUE(box_oversteps_boundary({{1.5, 0}, M_PI / 2, 4.0, 1.85}, map));
  EXPECT_TRUE(box_oversteps_boundary({{5, 0}, M_PI / 2, 4.0, 1.85}, map));
}

TEST(Report, CsvShape) {
  const std::vector<Scenario> s(4, empty_scene());
  const std::vector<PlanTrajectory> p(4, straight(2.0));
  const std::vector<ReportRow> rows{{"a", {"x"}, evaluate_plans(s, p, {})},
                                    {"b", {"-"}, evaluate_plans(s, p, {})}};
  const std::vector<std::string> headers{"flag"};
  const std::string csv = report_csv(headers, rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "name,flag,l2_1s,l2_2s,l2_3s,l2_avg,col_1s,col_2s,col_3s,col_avg,overstep");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\na,x,0.000000"), std::string::npos);
  EXPECT_FALSE(report_table(headers, rows).empty());
}

AblationConfig tiny_ablation() {
  AblationConfig c;
  c.train.epochs = 2;
  c.train.train_scenarios = 8;
  c.train.val_scenarios = 2;
  c.model.d_model = 8;
  c.model.ffn_hidden = 8;
  c.model.head_hidden = 8;
  c.eval_scenarios = 10;
  return c;
}

TEST(Ablation, DefaultArms) {
  const std::vector<ArmSpec> arms = default_arms();
  ASSERT_EQ(arms.size(), 7u);
  EXPECT_FALSE(arms[0].agent_interaction || arms[0].map_interaction);
  EXPECT_TRUE(arms[0].collision && arms[0].boundary && arms[0].direction);
  const ArmSpec& full = arms[6];
  EXPECT_TRUE(full.agent_interaction && full.map_interaction && full.boundary &&
              full.direction && full.collision);
  EXPECT_FALSE(arms[2].boundary || arms[2].direction || arms[2].collision);
  EXPECT_EQ(arm_train_config(arms[2], {}).weights.collision, 0.0);
  EXPECT_FALSE(arm_model_config(arms[1], {}).map_interaction);
}

TEST(Ablation, TwoArmsTwoRowsAndRepeatable) {
  const std::vector<ArmSpec> all = default_arms();
  const std::vector<ArmSpec> arms{all[2], all[6]};
  const AblationConfig c = tiny_ablation();
  const auto a = ablation_report(arms, c);
  const auto b = ablation_report(arms, c);
  const std::vector<ReportRow> ra = ablation_rows(a), rb = ablation_rows(b);
  ASSERT_EQ(ra.size(), 2u);
  const std::vector<std::string> headers = ablation_headers();
  EXPECT_EQ(report_csv(headers, ra), report_csv(headers, rb));
  EXPECT_EQ(ra[0].name, "3");
  EXPECT_EQ(ra[1].name, "7");
  EXPECT_EQ(ra[0].tags.size(), headers.size());
}

}  // namespace
}  // namespace vecplan
