#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vecplan/generator.h"
#include "vecplan/interact.h"
#include "vecplan/metrics.h"
#include "vecplan/train.h"

namespace vecplan {

struct ArmSpec {
  std::string name;
  bool agent_interaction = true;
  bool map_interaction = true;
  bool boundary = true;
  bool direction = true;
  bool collision = true;
};

// The seven rows of the design-choice ablation, IDs "1".."7".
std::vector<ArmSpec> default_arms();

struct AblationConfig {
  TrainConfig train;
  InteractionConfig model;
  GeneratorConfig generator;
  std::size_t eval_scenarios = 200;
  std::uint64_t eval_seed = 2023;
};

std::vector<Scenario> evaluation_set(const AblationConfig& config);

// Copies of the base configs with the arm's toggles applied. Disabled
// constraints get weight 0.
TrainConfig arm_train_config(const ArmSpec& arm, const TrainConfig& base);
InteractionConfig arm_model_config(const ArmSpec& arm, const InteractionConfig& base);

struct ArmResult {
  ArmSpec arm;
  TrainResult trained;
  ReportRow row;
  std::vector<PlanTrajectory> plans;  // on the evaluation set
};

ArmResult run_arm(const ArmSpec& arm, const AblationConfig& config,
                  std::span<const Scenario> train_data, std::span<const Scenario> val_data,
                  std::span<const Scenario> eval_data);

// Trains every arm on the same data and seed and evaluates on the same
// evaluation set.
std::vector<ArmResult> ablation_report(std::span<const ArmSpec> arms, const AblationConfig& config,
                                       const std::function<void(const ArmResult&)>& on_arm = {});

// Tag columns after the arm name: Agent Inter., Map Inter., Overstep. Const., Dir. Const., Col. Const.
std::vector<std::string> ablation_headers();
std::vector<ReportRow> ablation_rows(std::span<const ArmResult> results);

}  // namespace vecplan
