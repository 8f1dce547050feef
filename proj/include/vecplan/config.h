#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vecplan/ablation.h"
#include "vecplan/constraints.h"
#include "vecplan/generator.h"
#include "vecplan/interact.h"
#include "vecplan/planner.h"
#include "vecplan/train.h"

namespace vecplan {

struct SimulatorSettings {
  // One of: model, refine, constant_velocity, expert.
  std::string planner = "refine";
  std::string checkpoint;  // required by the model planner
  int ticks = 6;
  RefineOptions refine;
};

struct MetricsSettings {
  std::size_t eval_scenarios = 200;
};

// Everything a command needs. The model's horizon, point count and mode
// count, and the ego footprint, follow the generator section.
struct RunConfig {
  std::uint64_t seed = 7;
  GeneratorConfig generator;
  InteractionConfig interact;
  TrainConfig train;
  ConstraintParams constraints;
  LossWeights weights;
  SimulatorSettings simulator;
  MetricsSettings metrics;
  std::string output = "out";

  // Throws Error(kConfig).
  void validate() const;

  InteractionConfig model_config() const;
  TrainConfig train_config() const;
  Footprint footprint() const;
  AblationConfig ablation_config() const;
};

// Missing keys keep their defaults; unknown keys throw Error(kConfig).
RunConfig parse_run_config(const std::string& text, const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved config, every key present.
std::string run_config_to_string(const RunConfig& config);

// Applies "section.key=value" (or "seed=..."/"output=..."). The value is read
// as JSON when it parses, else as a string.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace vecplan
