#pragma once

#include <filesystem>
#include <string>

#include "vecplan/scene.h"

namespace vecplan {

inline constexpr int kScenarioSchemaVersion = 1;

// JSON document:
//   version, T_f, horizon_dt, perception_range {longitudinal, lateral},
//   map[]    {class, confidence, drivable_side, points [[x, y], ...]},
//   agents[] {position, heading, length, width, confidence,
//             mode_scores [N_k], modes [N_k][T_f][2], gt_future [T_f][2]},
//   ego      {position, heading, velocity, acceleration, steering_angle, command},
//   expert   [T_f][2]
// Meters, radians, seconds. Doubles are written in shortest round-trip form.
std::string scenario_to_string(const Scenario& scenario);
Scenario scenario_from_string(const std::string& text, const std::string& origin = "<string>");

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace vecplan
