#pragma once

#include <cstdint>
#include <vector>

#include "vecplan/scene.h"

namespace vecplan {

// Synthetic multi-lane road scenes. Lengths in meters, speeds in m/s.
struct GeneratorConfig {
  int min_lanes = 2;
  int max_lanes = 4;
  double lane_width = 3.5;
  double max_curvature = 0.02;  // 1/m, sign sampled
  double straight_probability = 0.35;
  int points_per_element = 20;
  int horizon = 6;
  double horizon_dt = 0.5;
  int num_modes = 6;
  double mode_noise = 1.0;  // std of the lateral jitter on non-truth modes at the last step
  int min_agents = 0;
  int max_agents = 8;
  double ego_speed_min = 2.0;
  double ego_speed_max = 9.0;
  double agent_speed_min = 0.0;
  double agent_speed_max = 12.0;
  double lead_probability = 0.6;
  double cut_in_probability = 0.25;
  double lane_change_probability = 0.4;
  double crossing_probability = 0.3;
  double ego_length = 4.0;
  double ego_width = 1.85;
  PerceptionRange perception_range;

  // Throws Error(kConfig) when the settings are inconsistent or the widest
  // road cannot fit the lateral perception extent.
  void validate() const;
};

Scenario generate_scenario(std::uint64_t seed, const GeneratorConfig& config);

// Seed for the index-th scenario of a set drawn from `base_seed`.
std::uint64_t scenario_seed(std::uint64_t base_seed, std::uint64_t index);

std::vector<Scenario> generate_scenarios(std::uint64_t base_seed, std::size_t count,
                                         const GeneratorConfig& config);

}  // namespace vecplan
