#include <gtest/gtest.h>

#include <random>

#include "test_util.h"
#include "vecplan/error.h"
#include "vecplan/generator.h"
#include "vecplan/losses.h"
#include "vecplan/train.h"

namespace vecplan {
namespace {

Trajectory ending_at(Point2 end) { return {{0, 0}, end}; }

TEST(MinFde, Examples) {
  const Trajectory gt{{0, 0}, {0, 10}};
  std::vector<Trajectory> modes{ending_at({5, 10}), gt, ending_at({0, 12})};
  EXPECT_EQ(minfde_select(modes, gt), 1u);
  modes = {ending_at({2, 10}), ending_at({0, 10.5}), ending_at({-1, 10})};
  EXPECT_EQ(minfde_select(modes, gt), 1u);
  modes = {ending_at({1, 1}), ending_at({1, 1}), ending_at({1, 1})};
  EXPECT_EQ(minfde_select(modes, gt), 0u);
}

TEST(MinFde, MatchesExhaustiveScan) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> k(1, 8);
  for (int i = 0; i < 1000; ++i) {
    const Trajectory gt{{u(rng), u(rng)}, {u(rng), u(rng)}};
    std::vector<Trajectory> modes(static_cast<std::size_t>(k(rng)));
    for (auto& m : modes) m = {{u(rng), u(rng)}, {std::round(u(rng)), std::round(u(rng))}};
    std::size_t best = 0;
    for (std::size_t j = 1; j < modes.size(); ++j) {
      if (norm(modes[j][1] - gt[1]) < norm(modes[best][1] - gt[1])) best = j;
    }
    ASSERT_EQ(minfde_select(modes, gt), best);
  }
}

TEST(MotionRegression, Examples) {
  const Trajectory gt{{1, 1}};
  std::vector<Trajectory> modes{{{5, 5}}, {{1, 1}}};
  EXPECT_EQ(motion_regression_loss(modes, {}, gt).value, 0.0);
  modes = {{{2, 2}}, {{9, 9}}};
  const MotionLoss l = motion_regression_loss(modes, std::vector<double>{0.1, 0.9}, gt);
  EXPECT_EQ(l.selected, 0u);
  EXPECT_DOUBLE_EQ(l.value, 2.0);
  EXPECT_EQ(l.grad[1][0], (Vec2{0, 0}));
  EXPECT_EQ(l.grad[0][0], (Vec2{1, 1}));
}

TEST(MapRegression, Examples) {
  const std::vector<Point2> gt{{0, 0}, {1, 1}};
  EXPECT_EQ(map_regression_loss(gt, gt).value, 0.0);
  EXPECT_DOUBLE_EQ(map_regression_loss(std::vector<Point2>{{0.5, -0.5}},
                                       std::vector<Point2>{{0, 0}})
                       .value,
                   1.0);
  const std::vector<Point2> pred{{0.3, 0.1}, {1.4, 0.2}};
  std::vector<Point2> moved_pred = pred, moved_gt = gt;
  for (Point2& p : moved_pred) p = p + Point2{7, -3};
  for (Point2& p : moved_gt) p = p + Point2{7, -3};
  EXPECT_NEAR(map_regression_loss(pred, gt).value,
              map_regression_loss(moved_pred, moved_gt).value, 1e-12);
  EXPECT_THROW(map_regression_loss(pred, std::vector<Point2>{{0, 0}}), Error);
}

TEST(FocalLoss, Examples) {
  EXPECT_NEAR(focal_loss(1 - 1e-7, true).value, 0.0, 1e-7);
  EXPECT_NEAR(focal_loss(0.5, true).value, 0.25 * 0.25 * std::log(2.0), 1e-12);
  EXPECT_NEAR(focal_loss(0.5, true).value, 0.04332, 1e-5);
}

TEST(FocalLoss, ReducesToHalfCrossEntropy) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(1e-6, 1 - 1e-6);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng);
    const bool y = coin(rng);
    const double ce = y ? -std::log(p) : -std::log(1 - p);
    EXPECT_NEAR(focal_loss(p, y, 0.0, 0.5).value, 0.5 * ce, 1e-12);
  }
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
  for (double p : {0.1, 0.37, 0.5, 0.81}) {
    for (bool y : {true, false}) {
      const double h = 1e-6;
      const double fd = (focal_loss(p + h, y).value - focal_loss(p - h, y).value) / (2 * h);
      EXPECT_NEAR(focal_loss(p, y).grad, fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
  EXPECT_EQ(focal_loss(0.0, true).grad, 0.0);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 3;
  c.train_scenarios = 16;
  c.val_scenarios = 4;
  return c;
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  TrainConfig c = tiny_config();
  c.learning_rate = 0.0;
  const InteractionConfig m;
  const TrainResult r = train(c, m, GeneratorConfig{});
  EXPECT_EQ(r.params.tensors(), InteractionParams::init(m, c.seed).tensors());
}

TEST(Train, DeterministicLog) {
  const TrainConfig c = tiny_config();
  const TrainResult a = train(c, {}, GeneratorConfig{});
  const TrainResult b = train(c, {}, GeneratorConfig{});
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  EXPECT_EQ(a.params.tensors(), b.params.tensors());
  ASSERT_EQ(a.log.epochs.size(), 3u);
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
    EXPECT_EQ(a.log.epochs[i].epoch, static_cast<int>(i) + 1);
    EXPECT_TRUE(std::isfinite(a.log.epochs[i].train.total));
  }
}

TEST(Train, BatchesAndWeightsChangeTheRun) {
  TrainConfig c = tiny_config();
  const TrainResult base = train(c, {}, GeneratorConfig{});
  c.batch_size = 4;
  const TrainResult batched = train(c, {}, GeneratorConfig{});
  EXPECT_NE(base.params.tensors(), batched.params.tensors());
}

TEST(Train, DivergenceGuard) {
  TrainConfig c = tiny_config();
  c.learning_rate = 1e300;
  c.min_learning_rate = 1e300;
  try {
    train(c, {}, GeneratorConfig{});
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kDivergence);
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(AdamW, MatchesHandUpdate) {
  NamedTensors p{{"w", Tensor(1, 2, std::vector<double>{1.0, -2.0})}};
  AdamW opt(p, 0.9, 0.999, 1e-8, 0.01);
  const std::vector<Tensor> g{Tensor(1, 2, std::vector<double>{0.5, -0.25})};
  opt.step(p, g, 0.1);
  // First step: bias-corrected m/sqrt(v) = sign(g).
  EXPECT_NEAR(p[0].second[0], 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0), 1e-12);
  EXPECT_NEAR(p[0].second[1], -2.0 - 0.1 * (-0.25 / (0.25 + 1e-8) + 0.01 * -2.0), 1e-12);
}

TEST(CosineSchedule, EndpointsAndMidpoint) {
  TrainConfig c;
  c.learning_rate = 1.0;
  c.min_learning_rate = 0.2;
  EXPECT_DOUBLE_EQ(cosine_learning_rate(c, 0, 100), 1.0);
  EXPECT_NEAR(cosine_learning_rate(c, 50, 100), 0.6, 1e-12);
  EXPECT_NEAR(cosine_learning_rate(c, 100, 100), 0.2, 1e-12);
}

TEST(MovingAverage, FlagsRiseAfterWarmup) {
  TrainLog log;
  for (int e = 1; e <= 20; ++e) {
    EpochLog l;
    l.epoch = e;
    l.train.total = 10.0 / e;
    log.epochs.push_back(l);
  }
  EXPECT_FALSE(moving_average_rises(log, 5));
  log.epochs[15].train.total = 50.0;
  EXPECT_TRUE(moving_average_rises(log, 5));
  log.epochs[15].train.total = 10.0 / 16;
  log.epochs[2].train.total = 50.0;  // inside warmup
  EXPECT_FALSE(moving_average_rises(log, 5));
}

TEST(TrainingObjective, AuxHeadGradientsMatchFiniteDifferences) {
  InteractionConfig m;
  m.d_model = 8;
  m.ffn_hidden = 8;
  m.head_hidden = 8;
  m.aux_heads = true;
  GeneratorConfig g;
  g.min_agents = 2;
  const Scenario s = generate_scenario(4, g);
  ASSERT_FALSE(s.agents.empty());
  InteractionParams p = InteractionParams::init(m, 5);
  LossWeights w{1, 1, 0, 0, 0, 0};
  auto objective = [&](const InteractionParams& q) {
    ForwardPass fp = forward_plan(s, q);
    StepLosses l;
    training_objective(fp, s, ConstraintParams{}, w, &l);
    return l.total;
  };
  ForwardPass fp = forward_plan(s, p);
  StepLosses l;
  fp.tape.backward(training_objective(fp, s, ConstraintParams{}, w, &l));
  EXPECT_GT(l.map, 0.0);
  EXPECT_GT(l.motion, 0.0);
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    if (p.tensors()[i].first.rfind("aux.", 0) != 0) continue;
    Tensor& t = p.tensors()[i].second;
    std::vector<double> fd;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double saved = t[k];
      t[k] = saved + 1e-6;
      const double up = objective(p);
      t[k] = saved - 1e-6;
      const double down = objective(p);
      t[k] = saved;
      fd.push_back((up - down) / 2e-6);
    }
    EXPECT_LT(testing::rel_error(testing::flat(fp.tape.grad(fp.bound.vars[i])), fd), 1e-4)
        << p.tensors()[i].first;
  }
}

TEST(TrainingObjective, BreakdownMatchesPlanLosses) {
  const Scenario s = generate_scenario(6, GeneratorConfig{});
  const InteractionParams p = InteractionParams::init({}, 1);
  ForwardPass fp = forward_plan(s, p);
  StepLosses l;
  const LossWeights w;
  training_objective(fp, s, ConstraintParams{}, w, &l);
  const PlanningLoss ref = total_planning_loss(fp.plan, s, ConstraintParams{}, w);
  EXPECT_NEAR(l.imitation, ref.imitation, 1e-12);
  EXPECT_NEAR(l.collision, ref.collision, 1e-12);
  EXPECT_NEAR(l.boundary, ref.boundary, 1e-12);
  EXPECT_NEAR(l.direction, ref.direction, 1e-12);
  EXPECT_NEAR(l.total, ref.total.value, 1e-12);
}

}  // namespace
}  // namespace vecplan
