#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vecplan/constraints.h"
#include "vecplan/generator.h"
#include "vecplan/interact.h"
#include "vecplan/metrics.h"

namespace vecplan {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 1;
  double learning_rate = 2e-4;
  double min_learning_rate = 0.0;  // cosine annealing floor
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 7;
  std::size_t train_scenarios = 512;
  std::size_t val_scenarios = 64;
  // Epochs excluded from the moving-average progress check.
  int warmup_epochs = 5;
  LossWeights weights;
  ConstraintParams constraints;
  Footprint footprint;

  void validate() const;
};

struct StepLosses {
  double imitation = 0.0;
  double collision = 0.0;
  double boundary = 0.0;
  double direction = 0.0;
  double map = 0.0;
  double motion = 0.0;
  double total = 0.0;
};

// Records the weighted objective on the forward pass's tape. Constraint terms
// enter through their analytic plan gradients; terms with zero weight are
// skipped. Map and motion terms require aux heads.
Var training_objective(ForwardPass& fp, const Scenario& scenario, const ConstraintParams& params,
                       const LossWeights& weights, StepLosses* breakdown = nullptr);

// Decoupled-weight-decay Adam.
class AdamW {
 public:
  AdamW(const NamedTensors& like, double beta1, double beta2, double epsilon,
        double weight_decay);
  void step(NamedTensors& params, const std::vector<Tensor>& grads, double learning_rate);

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  long step_count_ = 0;
  std::vector<Tensor> m_, v_;
};

double cosine_learning_rate(const TrainConfig& config, long step, long total_steps);

struct EpochLog {
  int epoch = 0;
  StepLosses train;  // means over the epoch
  double val_l2 = 0.0;         // average L2, meters
  double val_collision = 0.0;  // average collision rate, percent
  double learning_rate = 0.0;  // at the end of the epoch
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  // Set when the 5-epoch moving average of the total objective rose after
  // warmup.
  bool flagged = false;

  std::string to_csv() const;
};

struct TrainResult {
  InteractionParams params;
  TrainLog log;
};

std::vector<Scenario> training_set(const TrainConfig& config, const GeneratorConfig& generator);
std::vector<Scenario> validation_set(const TrainConfig& config, const GeneratorConfig& generator);

// Fully deterministic given the configs. Throws Error(kDivergence) when the
// objective or a gradient becomes non-finite.
TrainResult train(const TrainConfig& config, const InteractionConfig& model,
                  const GeneratorConfig& generator,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Same loop over caller-provided data.
TrainResult train_on(const TrainConfig& config, const InteractionConfig& model,
                     std::span<const Scenario> train_data, std::span<const Scenario> val_data,
                     const std::function<void(const EpochLog&)>& on_epoch = {});

bool moving_average_rises(const TrainLog& log, int warmup_epochs, int window = 5);

}  // namespace vecplan
