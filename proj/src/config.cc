#include "vecplan/config.h"

#include <set>

#include "json.hpp"

#include "vecplan/error.h"
#include "vecplan/scenario_io.h"

namespace vecplan {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  template <typename T>
  void field(const char* key, T& value) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      value = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(key, std::string("wrong type: ") + e.what());
    }
  }

  void allow(const char* key) { known_.insert(key); }

  void finish() const {
    for (const auto& [key, v] : j_.items()) {
      if (!known_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCategory::kConfig,
                "config: " + section_ + (key.empty() ? "" : "." + key) + ": " + what);
  }

  const json& j_;
  std::string section_;
  std::set<std::string> known_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }
  template <typename T>
  void field(const char* key, T& value) {
    j_[key] = value;
  }
  void finish() const {}

 private:
  json& j_;
};

template <typename B>
void bind(B& b, GeneratorConfig& c) {
  b.field("min_lanes", c.min_lanes);
  b.field("max_lanes", c.max_lanes);
  b.field("lane_width", c.lane_width);
  b.field("max_curvature", c.max_curvature);
  b.field("straight_probability", c.straight_probability);
  b.field("points_per_element", c.points_per_element);
  b.field("horizon", c.horizon);
  b.field("horizon_dt", c.horizon_dt);
  b.field("num_modes", c.num_modes);
  b.field("mode_noise", c.mode_noise);
  b.field("min_agents", c.min_agents);
  b.field("max_agents", c.max_agents);
  b.field("ego_speed_min", c.ego_speed_min);
  b.field("ego_speed_max", c.ego_speed_max);
  b.field("agent_speed_min", c.agent_speed_min);
  b.field("agent_speed_max", c.agent_speed_max);
  b.field("lead_probability", c.lead_probability);
  b.field("cut_in_probability", c.cut_in_probability);
  b.field("lane_change_probability", c.lane_change_probability);
  b.field("crossing_probability", c.crossing_probability);
  b.field("ego_length", c.ego_length);
  b.field("ego_width", c.ego_width);
  b.field("perception_longitudinal", c.perception_range.longitudinal);
  b.field("perception_lateral", c.perception_range.lateral);
  b.finish();
}

template <typename B>
void bind(B& b, InteractionConfig& c) {
  b.field("d_model", c.d_model);
  b.field("n_heads", c.n_heads);
  b.field("command_dim", c.command_dim);
  b.field("ffn_hidden", c.ffn_hidden);
  b.field("head_hidden", c.head_hidden);
  b.field("agent_interaction", c.agent_interaction);
  b.field("map_interaction", c.map_interaction);
  b.field("aux_heads", c.aux_heads);
  b.field("output_scale", c.output_scale);
  b.finish();
}

template <typename B>
void bind(B& b, TrainConfig& c) {
  b.field("epochs", c.epochs);
  b.field("batch_size", c.batch_size);
  b.field("learning_rate", c.learning_rate);
  b.field("min_learning_rate", c.min_learning_rate);
  b.field("weight_decay", c.weight_decay);
  b.field("beta1", c.beta1);
  b.field("beta2", c.beta2);
  b.field("adam_epsilon", c.adam_epsilon);
  b.field("train_scenarios", c.train_scenarios);
  b.field("val_scenarios", c.val_scenarios);
  b.field("warmup_epochs", c.warmup_epochs);
  b.finish();
}

template <typename B>
void bind(B& b, ConstraintParams& c) {
  b.field("agent_confidence", c.agent_confidence);
  b.field("map_confidence", c.map_confidence);
  b.field("agent_range", c.agent_range);
  b.field("boundary_margin", c.boundary_margin);
  b.field("direction_range", c.direction_range);
  b.field("safe_lateral", c.safe_lateral);
  b.field("safe_longitudinal", c.safe_longitudinal);
  b.field("per_step_heading_frame", c.per_step_heading_frame);
  b.field("single_nearest_agent", c.single_nearest_agent);
  b.finish();
}

template <typename B>
void bind(B& b, LossWeights& c) {
  b.field("map", c.map);
  b.field("motion", c.motion);
  b.field("collision", c.collision);
  b.field("boundary", c.boundary);
  b.field("direction", c.direction);
  b.field("imitation", c.imitation);
  b.finish();
}

template <typename B>
void bind(B& b, SimulatorSettings& c) {
  b.field("planner", c.planner);
  b.field("checkpoint", c.checkpoint);
  b.field("ticks", c.ticks);
  b.field("refine_steps", c.refine.steps);
  b.field("refine_step_size", c.refine.step_size);
  b.field("refine_use_expert", c.refine.use_expert);
  b.finish();
}

template <typename B>
void bind(B& b, MetricsSettings& c) {
  b.field("eval_scenarios", c.eval_scenarios);
  b.finish();
}

json to_json(const RunConfig& in) {
  RunConfig c = in;
  json j = json::object();
  j["seed"] = c.seed;
  j["output"] = c.output;
  auto section = [&](const char* name, auto& value) {
    Writer w(j[name]);
    bind(w, value);
  };
  section("generator", c.generator);
  section("interact", c.interact);
  section("train", c.train);
  section("constraints", c.constraints);
  section("weights", c.weights);
  section("simulator", c.simulator);
  section("metrics", c.metrics);
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  Reader top(j, "<root>");
  top.field("seed", c.seed);
  top.field("output", c.output);
  auto read = [&](const char* name, auto& value) {
    top.allow(name);
    if (!j.contains(name)) return;
    Reader r(j.at(name), name);
    bind(r, value);
  };
  read("generator", c.generator);
  read("interact", c.interact);
  read("train", c.train);
  read("constraints", c.constraints);
  read("weights", c.weights);
  read("simulator", c.simulator);
  read("metrics", c.metrics);
  top.finish();
  c.validate();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  generator.validate();
  model_config().validate();
  train_config().validate();
  constraints.validate();
  weights.validate();
  static const std::set<std::string> planners{"model", "refine", "constant_velocity", "expert"};
  if (!planners.count(simulator.planner)) {
    throw Error(ErrorCategory::kConfig, "config: simulator.planner: unknown planner '" +
                                            simulator.planner + "'");
  }
  if (simulator.ticks < 0 || simulator.ticks > generator.horizon) {
    throw Error(ErrorCategory::kConfig, "config: simulator.ticks must lie in [0, generator.horizon]");
  }
  if (simulator.refine.steps < 0 || !(simulator.refine.step_size > 0.0)) {
    throw Error(ErrorCategory::kConfig, "config: simulator.refine_*: steps >= 0, step_size > 0");
  }
  if (metrics.eval_scenarios < 1) {
    throw Error(ErrorCategory::kConfig, "config: metrics.eval_scenarios must be >= 1");
  }
}

InteractionConfig RunConfig::model_config() const {
  InteractionConfig m = interact;
  m.horizon = generator.horizon;
  m.points_per_element = generator.points_per_element;
  m.num_modes = generator.num_modes;
  return m;
}

Footprint RunConfig::footprint() const { return {generator.ego_length, generator.ego_width}; }

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  t.weights = weights;
  t.constraints = constraints;
  t.footprint = footprint();
  return t;
}

AblationConfig RunConfig::ablation_config() const {
  AblationConfig a;
  a.train = train_config();
  a.model = model_config();
  a.generator = generator;
  a.eval_scenarios = metrics.eval_scenarios;
  a.eval_seed = scenario_seed(seed, 0x6576616cULL);
  return a;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::kParse, origin + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const Error& e) {
    throw Error(e.category(), origin + ": " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

std::string run_config_to_string(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCategory::kConfig, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json j = to_json(c);
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    if (!j.contains(key) || j.at(key).is_object()) {
      throw Error(ErrorCategory::kConfig, "override: unknown key '" + key + "'");
    }
    j[key] = value;
  } else {
    const std::string section = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    if (!j.contains(section) || !j.at(section).is_object() || !j.at(section).contains(field)) {
      throw Error(ErrorCategory::kConfig, "override: unknown key '" + key + "'");
    }
    j[section][field] = value;
  }
  c = from_json(j);
}

}  // namespace vecplan
