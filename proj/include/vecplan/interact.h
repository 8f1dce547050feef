#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vecplan/autodiff.h"
#include "vecplan/scene.h"

namespace vecplan {

struct InteractionConfig {
  int d_model = 32;
  int n_heads = 1;
  int horizon = 6;  // T_f
  int command_dim = 8;
  int ffn_hidden = 64;
  int head_hidden = 64;
  bool agent_interaction = true;
  bool map_interaction = true;
  // Auxiliary map-point / agent-future heads for the map and motion losses.
  bool aux_heads = false;
  int points_per_element = 20;
  int num_modes = 6;
  // Meters per unit of head output.
  double output_scale = 10.0;

  void validate() const;
};

// Named parameter tensors; names and shapes are fixed by the config.
class InteractionParams {
 public:
  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from `seed`.
  static InteractionParams init(const InteractionConfig& config, std::uint64_t seed);

  const InteractionConfig& config() const { return config_; }
  NamedTensors& tensors() { return tensors_; }
  const NamedTensors& tensors() const { return tensors_; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  // Throws Error(kCheckpointMismatch) when names or shapes disagree with `config`.
  static InteractionParams load(const std::filesystem::path& path,
                                const InteractionConfig& config);

 private:
  InteractionConfig config_;
  NamedTensors tensors_;
};

// Ground-truth-derived inputs standing in for the perception queries.
// Agent row: x/30, y/30, cos(heading), sin(heading), speed/10, confidence.
// Map row: class one-hot (3), centroid/30 (2), first-segment unit direction (2).
struct QueryInputs {
  Tensor agent_features;   // N_a x 6
  Tensor map_features;     // N_m x 7
  Tensor agent_positions;  // N_a x 2, scaled by 1/30
  Tensor map_positions;    // N_m x 2, scaled by 1/30
  Tensor ego_position;     // 1 x 2
  Tensor ego_status;       // 1 x 3: velocity/10, acceleration/2, steering*10
  Tensor command;          // 1 x 3 one-hot
};

QueryInputs query_inputs(const Scenario& scenario);

// Parameters bound as tape leaves, indexed like InteractionParams::tensors().
struct BoundParams {
  std::vector<Var> vars;
  const InteractionParams* params = nullptr;
  Var operator()(const std::string& name) const;
};

BoundParams bind(Tape& tape, const InteractionParams& params);

struct QueryFeatures {
  Var agent_queries;  // N_a x d_model
  Var map_queries;    // N_m x d_model
  std::size_t num_agents = 0;
  std::size_t num_map = 0;
};

QueryFeatures encode_queries(Tape& tape, const BoundParams& p, const QueryInputs& inputs);

// Single-layer positional MLP: relu(p W1 + b1) W2 + b2.
Var positional_encoding(Tape& tape, const BoundParams& p, const std::string& prefix, Var pos);

// Cross-attention of `query` (1 x d) over keys/values, residual add, then a
// residual feed-forward. With zero keys only the feed-forward is applied.
// Attention weights per head are appended to `attention` when given.
Var decoder_block(Tape& tape, const BoundParams& p, const std::string& prefix, Var query,
                  Var keys, Var values, Var query_pos, Var key_pos,
                  std::vector<Tensor>* attention = nullptr);

// MLP over [Q'_ego, Q''_ego, ego status, command embedding] -> 1 x 2T_f
// (x0, y0, x1, y1, ...), scaled to meters.
Var plan_head(Tape& tape, const BoundParams& p, Var ego_after_agents, Var ego_after_map,
              const QueryInputs& inputs);

struct ForwardPass {
  Tape tape;
  BoundParams bound;
  QueryInputs inputs;
  QueryFeatures queries;
  Var plan_var;
  PlanTrajectory plan;
  std::vector<Tensor> agent_attention;
  std::vector<Tensor> map_attention;
  // Present with aux_heads.
  std::optional<Var> map_points;   // N_m x 2N_p, meters
  std::optional<Var> map_logits;   // N_m x 3
  std::optional<Var> mode_points;  // N_a x N_k*T_f*2, meters
  std::optional<Var> mode_logits;  // N_a x N_k
};

ForwardPass forward_plan(const Scenario& scenario, const InteractionParams& params);

PlanTrajectory unflatten_plan(const Tensor& flat);
Tensor flatten_points(std::span<const Point2> points);

}  // namespace vecplan
