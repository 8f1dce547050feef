#include "vecplan/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "vecplan/error.h"
#include "vecplan/losses.h"

namespace vecplan {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCategory::kConfig, "train: " + what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (!(min_learning_rate >= 0.0 && min_learning_rate <= learning_rate)) {
    fail("min_learning_rate must lie in [0, learning_rate]");
  }
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0,1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
  if (train_scenarios < 1) fail("train_scenarios must be >= 1");
  if (val_scenarios < 1) fail("val_scenarios must be >= 1");
  if (warmup_epochs < 0) fail("warmup_epochs must be >= 0");
  weights.validate();
  constraints.validate();
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor plan_gradient(const LossResult& r) {
  Tensor g(1, 2 * r.grad.size());
  for (std::size_t t = 0; t < r.grad.size(); ++t) {
    g[2 * t] = r.grad[t].x;
    g[2 * t + 1] = r.grad[t].y;
  }
  return g;
}

// Aux map loss: per element Manhattan regression plus per-class focal terms,
// averaged over elements.
Var map_objective(ForwardPass& fp, const Scenario& s, double* value) {
  Tape& tape = fp.tape;
  const Tensor& pts = tape.value(*fp.map_points);
  const Tensor& logits = tape.value(*fp.map_logits);
  const std::size_t nm = pts.rows();
  Tensor gp(pts.rows(), pts.cols());
  Tensor gl(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < nm; ++i) {
    const std::size_t np = pts.cols() / 2;
    if (s.map[i].points.size() != np) {
      throw Error(ErrorCategory::kCheckpointMismatch,
                  "aux map head predicts " + std::to_string(np) + " points, scenario has " +
                      std::to_string(s.map[i].points.size()));
    }
    std::vector<Point2> pred(np);
    for (std::size_t k = 0; k < np; ++k) pred[k] = {pts(i, 2 * k), pts(i, 2 * k + 1)};
    const PointsLoss reg = map_regression_loss(pred, s.map[i].points);
    total += reg.value;
    for (std::size_t k = 0; k < np; ++k) {
      gp(i, 2 * k) = reg.grad[k].x / static_cast<double>(nm);
      gp(i, 2 * k + 1) = reg.grad[k].y / static_cast<double>(nm);
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = sigmoid(logits(i, c));
      const ScalarLoss f = focal_loss(p, static_cast<std::size_t>(s.map[i].map_class) == c);
      total += f.value;
      gl(i, c) = f.grad * p * (1.0 - p) / static_cast<double>(nm);
    }
  }
  *value = nm == 0 ? 0.0 : total / static_cast<double>(nm);
  return tape.add(tape.attach_loss(*fp.map_points, *value, std::move(gp)),
                  tape.attach_loss(*fp.map_logits, 0.0, std::move(gl)));
}

// Aux motion loss: minFDE winner-take-all regression plus focal mode
// classification, averaged over agents.
Var motion_objective(ForwardPass& fp, const Scenario& s, double* value) {
  Tape& tape = fp.tape;
  const Tensor& pts = tape.value(*fp.mode_points);
  const Tensor& logits = tape.value(*fp.mode_logits);
  const std::size_t na = pts.rows();
  const std::size_t nk = logits.cols();
  const std::size_t tf = s.horizon();
  Tensor gp(pts.rows(), pts.cols());
  Tensor gl(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    std::vector<Trajectory> modes(nk, Trajectory(tf));
    for (std::size_t k = 0; k < nk; ++k) {
      for (std::size_t t = 0; t < tf; ++t) {
        const std::size_t c = (k * tf + t) * 2;
        modes[k][t] = {pts(i, c), pts(i, c + 1)};
      }
    }
    const MotionLoss reg = motion_regression_loss(modes, {}, s.agent_gt_futures[i]);
    total += reg.value;
    for (std::size_t t = 0; t < tf; ++t) {
      const std::size_t c = (reg.selected * tf + t) * 2;
      gp(i, c) = reg.grad[reg.selected][t].x / static_cast<double>(na);
      gp(i, c + 1) = reg.grad[reg.selected][t].y / static_cast<double>(na);
    }
    for (std::size_t k = 0; k < nk; ++k) {
      const double p = sigmoid(logits(i, k));
      const ScalarLoss f = focal_loss(p, k == reg.selected);
      total += f.value;
      gl(i, k) = f.grad * p * (1.0 - p) / static_cast<double>(na);
    }
  }
  *value = na == 0 ? 0.0 : total / static_cast<double>(na);
  return tape.add(tape.attach_loss(*fp.mode_points, *value, std::move(gp)),
                  tape.attach_loss(*fp.mode_logits, 0.0, std::move(gl)));
}

}  // namespace

Var training_objective(ForwardPass& fp, const Scenario& s, const ConstraintParams& params,
                       const LossWeights& w, StepLosses* breakdown) {
  Tape& tape = fp.tape;
  const PlanTrajectory& plan = fp.plan;
  StepLosses b;
  const double inv_t = 1.0 / static_cast<double>(plan.size());

  Var total = tape.scalar_mul(tape.l1_to_target(fp.plan_var, flatten_points(s.expert)), inv_t);
  b.imitation = tape.value(total)[0];
  total = tape.scalar_mul(total, w.imitation);

  auto add_term = [&](double weight, const LossResult& r, double* slot) {
    *slot = r.value;
    if (weight == 0.0) return;
    total = tape.add(total, tape.scalar_mul(tape.attach_loss(fp.plan_var, r.value,
                                                             plan_gradient(r)), weight));
  };
  if (w.collision != 0.0) {
    add_term(w.collision,
             collision_loss(plan, filter_agents(s.agents, params.agent_confidence), params),
             &b.collision);
  }
  if (w.boundary != 0.0) {
    add_term(w.boundary,
             boundary_loss(plan, filter_map(s.map, params.map_confidence, MapClass::kRoadBoundary),
                           params),
             &b.boundary);
  }
  if (w.direction != 0.0) {
    add_term(w.direction,
             direction_loss(plan, filter_map(s.map, params.map_confidence, MapClass::kLaneDivider),
                            params),
             &b.direction);
  }
  if (fp.map_points && w.map != 0.0) {
    total = tape.add(total, tape.scalar_mul(map_objective(fp, s, &b.map), w.map));
  }
  if (fp.mode_points && w.motion != 0.0) {
    total = tape.add(total, tape.scalar_mul(motion_objective(fp, s, &b.motion), w.motion));
  }
  b.total = tape.value(total)[0];
  if (breakdown) *breakdown = b;
  return total;
}

AdamW::AdamW(const NamedTensors& like, double beta1, double beta2, double epsilon,
             double weight_decay)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), weight_decay_(weight_decay) {
  for (const auto& [name, t] : like) {
    m_.emplace_back(t.rows(), t.cols());
    v_.emplace_back(t.rows(), t.cols());
  }
}

void AdamW::step(NamedTensors& params, const std::vector<Tensor>& grads, double lr) {
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].second;
    const Tensor& g = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon_);
      p[k] -= lr * (update + weight_decay_ * p[k]);
    }
  }
}

double cosine_learning_rate(const TrainConfig& c, long step, long total_steps) {
  if (total_steps <= 0) return c.learning_rate;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return c.min_learning_rate +
         0.5 * (c.learning_rate - c.min_learning_rate) * (1.0 + std::cos(M_PI * progress));
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,imitation,collision,boundary,direction,map,motion,total,val_l2_avg,"
         "val_collision_avg,learning_rate\n";
  for (const EpochLog& e : epochs) {
    out << e.epoch;
    for (double v : {e.train.imitation, e.train.collision, e.train.boundary, e.train.direction,
                     e.train.map, e.train.motion, e.train.total, e.val_l2, e.val_collision,
                     e.learning_rate}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Scenario> training_set(const TrainConfig& c, const GeneratorConfig& g) {
  return generate_scenarios(scenario_seed(c.seed, 0x747261696eULL), c.train_scenarios, g);
}

std::vector<Scenario> validation_set(const TrainConfig& c, const GeneratorConfig& g) {
  return generate_scenarios(scenario_seed(c.seed, 0x76616cULL), c.val_scenarios, g);
}

bool moving_average_rises(const TrainLog& log, int warmup_epochs, int window) {
  const auto& e = log.epochs;
  std::vector<double> ma;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (static_cast<int>(i) + 1 < window) {
      ma.push_back(NAN);
      continue;
    }
    double s = 0.0;
    for (int k = 0; k < window; ++k) s += e[i - static_cast<std::size_t>(k)].train.total;
    ma.push_back(s / window);
  }
  for (std::size_t i = 1; i < ma.size(); ++i) {
    if (static_cast<int>(i) + 1 - window < warmup_epochs) continue;
    if (ma[i] > ma[i - 1]) return true;
  }
  return false;
}

TrainResult train(const TrainConfig& config, const InteractionConfig& model,
                  const GeneratorConfig& generator,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  const std::vector<Scenario> train_data = training_set(config, generator);
  const std::vector<Scenario> val_data = validation_set(config, generator);
  return train_on(config, model, train_data, val_data, on_epoch);
}

TrainResult train_on(const TrainConfig& config, const InteractionConfig& model,
                     std::span<const Scenario> train_data, std::span<const Scenario> val_data,
                     const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  TrainResult result{InteractionParams::init(model, config.seed), {}};
  InteractionParams& params = result.params;
  AdamW optimizer(params.tensors(), config.beta1, config.beta2, config.adam_epsilon,
                  config.weight_decay);

  const std::size_t n = train_data.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total_steps = steps_per_epoch * config.epochs;
  long step = 0;
  double lr = config.learning_rate;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffler(config.seed ^ 0x5348554646ULL);

  std::vector<Tensor> grads;
  for (const auto& [name, t] : params.tensors()) grads.emplace_back(t.rows(), t.cols());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    StepLosses sums;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      for (Tensor& g : grads) std::fill(g.values().begin(), g.values().end(), 0.0);
      for (std::size_t idx = begin; idx < end; ++idx) {
        const Scenario& s = train_data[order[idx]];
        ForwardPass fp = forward_plan(s, params);
        StepLosses losses;
        const Var objective =
            training_objective(fp, s, config.constraints, config.weights, &losses);
        if (!std::isfinite(losses.total)) {
          throw Error(ErrorCategory::kDivergence,
                      "training objective became non-finite at epoch " + std::to_string(epoch) +
                          ", step " + std::to_string(step));
        }
        fp.tape.backward(objective);
        for (std::size_t i = 0; i < grads.size(); ++i) {
          const Tensor& g = fp.tape.grad(fp.bound.vars[i]);
          for (std::size_t k = 0; k < g.size(); ++k) grads[i][k] += g[k];
        }
        sums.imitation += losses.imitation;
        sums.collision += losses.collision;
        sums.boundary += losses.boundary;
        sums.direction += losses.direction;
        sums.map += losses.map;
        sums.motion += losses.motion;
        sums.total += losses.total;
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (Tensor& g : grads) {
        for (double& v : g.values()) v *= inv;
        if (!all_finite(g)) {
          throw Error(ErrorCategory::kDivergence,
                      "non-finite gradient at epoch " + std::to_string(epoch));
        }
      }
      lr = cosine_learning_rate(config, step, total_steps);
      optimizer.step(params.tensors(), grads, lr);
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    const double inv_n = 1.0 / static_cast<double>(n);
    log.train = {sums.imitation * inv_n, sums.collision * inv_n, sums.boundary * inv_n,
                 sums.direction * inv_n, sums.map * inv_n,       sums.motion * inv_n,
                 sums.total * inv_n};
    std::vector<PlanTrajectory> plans;
    plans.reserve(val_data.size());
    for (const Scenario& s : val_data) plans.push_back(forward_plan(s, params).plan);
    const PlanMetrics m = evaluate_plans(val_data, plans, config.footprint);
    log.val_l2 = m.l2.average;
    log.val_collision = m.collision.average;
    log.learning_rate = lr;
    result.log.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.log.flagged = moving_average_rises(result.log, config.warmup_epochs);
  return result;
}

}  // namespace vecplan
