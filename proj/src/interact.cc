#include "vecplan/interact.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "vecplan/error.h"

namespace vecplan {

namespace {

constexpr double kPositionScale = 1.0 / 30.0;
constexpr std::size_t kAgentFeatures = 6;
constexpr std::size_t kMapFeatures = 7;
constexpr std::size_t kStatusFeatures = 3;

struct ParamSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  double bound;
};

void linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
            std::size_t outs) {
  const double b = 1.0 / std::sqrt(static_cast<double>(in));
  out.push_back({prefix + ".w", in, outs, b});
  out.push_back({prefix + ".b", 1, outs, b});
}

std::vector<ParamSpec> param_specs(const InteractionConfig& c) {
  const auto d = static_cast<std::size_t>(c.d_model);
  const auto h = static_cast<std::size_t>(c.ffn_hidden);
  const auto hh = static_cast<std::size_t>(c.head_hidden);
  const auto cmd = static_cast<std::size_t>(c.command_dim);
  const auto tf = static_cast<std::size_t>(c.horizon);
  std::vector<ParamSpec> s;
  linear(s, "agent_enc.l1", kAgentFeatures, d);
  linear(s, "agent_enc.l2", d, d);
  linear(s, "map_enc.l1", kMapFeatures, d);
  linear(s, "map_enc.l2", d, d);
  for (const char* pe : {"pe1", "pe2"}) {
    linear(s, std::string(pe) + ".l1", 2, d);
    linear(s, std::string(pe) + ".l2", d, d);
  }
  s.push_back({"ego_query", 1, d, 1.0 / std::sqrt(static_cast<double>(d))});
  for (const char* block : {"agent_block", "map_block"}) {
    const std::string b(block);
    const double bd = 1.0 / std::sqrt(static_cast<double>(d));
    for (const char* proj : {".wq", ".wk", ".wv"}) s.push_back({b + proj, d, d, bd});
    linear(s, b + ".out", d, d);
    linear(s, b + ".ff1", d, h);
    linear(s, b + ".ff2", h, d);
  }
  s.push_back({"cmd_embed", 3, cmd, 1.0});
  linear(s, "head.l1", 2 * d + kStatusFeatures + cmd, hh);
  linear(s, "head.l2", hh, hh);
  linear(s, "head.l3", hh, 2 * tf);
  if (c.aux_heads) {
    const auto np = static_cast<std::size_t>(c.points_per_element);
    const auto nk = static_cast<std::size_t>(c.num_modes);
    linear(s, "aux.map_points", d, 2 * np);
    linear(s, "aux.map_cls", d, 3);
    linear(s, "aux.mode_points", d, nk * tf * 2);
    linear(s, "aux.mode_cls", d, nk);
  }
  return s;
}

Var dense(Tape& tape, const BoundParams& p, const std::string& prefix, Var x) {
  return tape.add_bias_row(tape.matmul(x, p(prefix + ".w")), p(prefix + ".b"));
}

Var mlp2(Tape& tape, const BoundParams& p, const std::string& prefix, Var x) {
  return dense(tape, p, prefix + ".l2", tape.relu(dense(tape, p, prefix + ".l1", x)));
}

Tensor points_tensor(std::span<const Point2> pts, double scale) {
  Tensor t(pts.size(), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t(i, 0) = pts[i].x * scale;
    t(i, 1) = pts[i].y * scale;
  }
  return t;
}

}  // namespace

void InteractionConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCategory::kConfig, "interact: " + what);
  };
  if (d_model < 1 || n_heads < 1) fail("d_model and n_heads must be >= 1");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (horizon < 1) fail("horizon must be >= 1");
  if (command_dim < 1 || ffn_hidden < 1 || head_hidden < 1) fail("widths must be >= 1");
  if (points_per_element < 2 || num_modes < 1) fail("bad aux head shape");
  if (!(output_scale > 0.0)) fail("output_scale must be > 0");
}

InteractionParams InteractionParams::init(const InteractionConfig& config, std::uint64_t seed) {
  config.validate();
  InteractionParams p;
  p.config_ = config;
  std::mt19937_64 rng(seed);
  for (const ParamSpec& spec : param_specs(config)) {
    Tensor t(spec.rows, spec.cols);
    std::uniform_real_distribution<double> dist(-spec.bound, spec.bound);
    for (double& v : t.values()) v = dist(rng);
    p.tensors_.emplace_back(spec.name, std::move(t));
  }
  return p;
}

Tensor& InteractionParams::at(const std::string& name) {
  for (auto& [n, t] : tensors_) {
    if (n == name) return t;
  }
  throw Error(ErrorCategory::kInvalidArgument, "no parameter named '" + name + "'");
}

const Tensor& InteractionParams::at(const std::string& name) const {
  return const_cast<InteractionParams*>(this)->at(name);
}

void InteractionParams::save(const std::filesystem::path& path) const {
  save_checkpoint(path, tensors_);
}

InteractionParams InteractionParams::load(const std::filesystem::path& path,
                                          const InteractionConfig& config) {
  config.validate();
  NamedTensors loaded = load_checkpoint(path);
  const std::vector<ParamSpec> specs = param_specs(config);
  if (loaded.size() != specs.size()) {
    throw Error(ErrorCategory::kCheckpointMismatch,
                path.string() + ": checkpoint has " + std::to_string(loaded.size()) +
                    " tensors, config expects " + std::to_string(specs.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, t] = loaded[i];
    if (name != specs[i].name || t.rows() != specs[i].rows || t.cols() != specs[i].cols) {
      throw Error(ErrorCategory::kCheckpointMismatch,
                  path.string() + ": tensor " + std::to_string(i) + " is '" + name + "' " +
                      t.shape_string() + ", config expects '" + specs[i].name + "' " +
                      std::to_string(specs[i].rows) + "x" + std::to_string(specs[i].cols));
    }
  }
  InteractionParams p;
  p.config_ = config;
  p.tensors_ = std::move(loaded);
  return p;
}

QueryInputs query_inputs(const Scenario& s) {
  QueryInputs in;
  const std::size_t na = s.agents.size();
  in.agent_features = Tensor(na, kAgentFeatures);
  in.agent_positions = Tensor(na, 2);
  for (std::size_t i = 0; i < na; ++i) {
    const AgentPrediction& a = s.agents[i];
    const Vec2 step = best_mode(a)[0] - a.position;
    const double speed = norm(step) / s.horizon_dt;
    const double row[kAgentFeatures] = {a.position.x * kPositionScale,
                                        a.position.y * kPositionScale,
                                        std::cos(a.heading),
                                        std::sin(a.heading),
                                        speed / 10.0,
                                        a.confidence};
    std::copy(std::begin(row), std::end(row), &in.agent_features(i, 0));
    in.agent_positions(i, 0) = a.position.x * kPositionScale;
    in.agent_positions(i, 1) = a.position.y * kPositionScale;
  }

  const std::size_t nm = s.map.size();
  in.map_features = Tensor(nm, kMapFeatures);
  in.map_positions = Tensor(nm, 2);
  for (std::size_t i = 0; i < nm; ++i) {
    const MapVector& m = s.map[i];
    Point2 centroid;
    for (const Point2& p : m.points) centroid = centroid + p;
    centroid = (1.0 / static_cast<double>(m.points.size())) * centroid;
    Vec2 dir;
    for (std::size_t k = 0; k + 1 < m.points.size(); ++k) {
      const Vec2 d = m.points[k + 1] - m.points[k];
      if (norm(d) > 0.0) {
        dir = (1.0 / norm(d)) * d;
        break;
      }
    }
    in.map_features(i, static_cast<std::size_t>(m.map_class)) = 1.0;
    in.map_features(i, 3) = centroid.x * kPositionScale;
    in.map_features(i, 4) = centroid.y * kPositionScale;
    in.map_features(i, 5) = dir.x;
    in.map_features(i, 6) = dir.y;
    in.map_positions(i, 0) = centroid.x * kPositionScale;
    in.map_positions(i, 1) = centroid.y * kPositionScale;
  }

  in.ego_position = points_tensor(std::span<const Point2>(&s.ego.position, 1), kPositionScale);
  in.ego_status = Tensor::row(
      {s.ego.velocity / 10.0, s.ego.acceleration / 2.0, s.ego.steering_angle * 10.0});
  in.command = Tensor(1, 3);
  in.command[static_cast<std::size_t>(s.ego.command)] = 1.0;
  return in;
}

Var BoundParams::operator()(const std::string& name) const {
  const NamedTensors& t = params->tensors();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].first == name) return vars[i];
  }
  throw Error(ErrorCategory::kInvalidArgument, "no parameter named '" + name + "'");
}

BoundParams bind(Tape& tape, const InteractionParams& params) {
  BoundParams b;
  b.params = &params;
  for (const auto& [name, t] : params.tensors()) b.vars.push_back(tape.leaf(t));
  return b;
}

QueryFeatures encode_queries(Tape& tape, const BoundParams& p, const QueryInputs& in) {
  QueryFeatures q;
  q.num_agents = in.agent_features.rows();
  q.num_map = in.map_features.rows();
  q.agent_queries = mlp2(tape, p, "agent_enc", tape.leaf(in.agent_features));
  q.map_queries = mlp2(tape, p, "map_enc", tape.leaf(in.map_features));
  return q;
}

Var positional_encoding(Tape& tape, const BoundParams& p, const std::string& prefix, Var pos) {
  return mlp2(tape, p, prefix, pos);
}

Var decoder_block(Tape& tape, const BoundParams& p, const std::string& prefix, Var query,
                  Var keys, Var values, Var query_pos, Var key_pos,
                  std::vector<Tensor>* attention) {
  const std::size_t d = tape.value(query).cols();
  if (tape.value(keys).cols() != d || tape.value(values).cols() != d) {
    throw Error(ErrorCategory::kShape, prefix + ": key/value width " +
                                           tape.value(keys).shape_string() + " vs query " +
                                           tape.value(query).shape_string());
  }
  Var x = query;
  if (tape.value(keys).rows() > 0) {
    const auto heads = static_cast<std::size_t>(p.params->config().n_heads);
    const std::size_t dk = d / heads;
    const Var qh = tape.matmul(tape.add(query, query_pos), p(prefix + ".wq"));
    const Var kh = tape.matmul(tape.add(keys, key_pos), p(prefix + ".wk"));
    const Var vh = tape.matmul(values, p(prefix + ".wv"));
    std::vector<Var> ctx;
    for (std::size_t h = 0; h < heads; ++h) {
      const Var qs = heads == 1 ? qh : tape.slice_cols(qh, h * dk, (h + 1) * dk);
      const Var ks = heads == 1 ? kh : tape.slice_cols(kh, h * dk, (h + 1) * dk);
      const Var vs = heads == 1 ? vh : tape.slice_cols(vh, h * dk, (h + 1) * dk);
      const Var scores = tape.scalar_mul(tape.matmul(qs, tape.transpose(ks)),
                                         1.0 / std::sqrt(static_cast<double>(dk)));
      const Var weights = tape.softmax_rows(scores);
      if (attention) attention->push_back(tape.value(weights));
      ctx.push_back(tape.matmul(weights, vs));
    }
    const Var merged = heads == 1 ? ctx[0] : tape.concat_cols(ctx);
    x = tape.add(query, dense(tape, p, prefix + ".out", merged));
  }
  const Var hidden = tape.relu(dense(tape, p, prefix + ".ff1", x));
  return tape.add(x, dense(tape, p, prefix + ".ff2", hidden));
}

Var plan_head(Tape& tape, const BoundParams& p, Var ego_after_agents, Var ego_after_map,
              const QueryInputs& in) {
  const Var status = tape.leaf(in.ego_status);
  const Var cmd = tape.matmul(tape.leaf(in.command), p("cmd_embed"));
  const std::vector<Var> parts{ego_after_agents, ego_after_map, status, cmd};
  Var h = tape.concat_cols(parts);
  h = tape.relu(dense(tape, p, "head.l1", h));
  h = tape.relu(dense(tape, p, "head.l2", h));
  return tape.scalar_mul(dense(tape, p, "head.l3", h), p.params->config().output_scale);
}

ForwardPass forward_plan(const Scenario& scenario, const InteractionParams& params) {
  const InteractionConfig& cfg = params.config();
  if (static_cast<std::size_t>(cfg.horizon) != scenario.horizon()) {
    throw Error(ErrorCategory::kCheckpointMismatch,
                "model horizon " + std::to_string(cfg.horizon) + " != scenario T_f " +
                    std::to_string(scenario.horizon()));
  }
  ForwardPass fp;
  Tape& tape = fp.tape;
  fp.inputs = query_inputs(scenario);
  fp.bound = bind(tape, params);
  const BoundParams& p = fp.bound;
  fp.queries = encode_queries(tape, p, fp.inputs);

  const Var ego_pos = tape.leaf(fp.inputs.ego_position);
  const Var ego_query = p("ego_query");

  Var after_agents = ego_query;
  if (cfg.agent_interaction) {
    const Var q_pos = positional_encoding(tape, p, "pe1", ego_pos);
    const Var k_pos = positional_encoding(tape, p, "pe1", tape.leaf(fp.inputs.agent_positions));
    after_agents = decoder_block(tape, p, "agent_block", ego_query, fp.queries.agent_queries,
                                 fp.queries.agent_queries, q_pos, k_pos, &fp.agent_attention);
  }
  Var after_map = after_agents;
  if (cfg.map_interaction) {
    const Var q_pos = positional_encoding(tape, p, "pe2", ego_pos);
    const Var k_pos = positional_encoding(tape, p, "pe2", tape.leaf(fp.inputs.map_positions));
    after_map = decoder_block(tape, p, "map_block", after_agents, fp.queries.map_queries,
                              fp.queries.map_queries, q_pos, k_pos, &fp.map_attention);
  }
  fp.plan_var = plan_head(tape, p, after_agents, after_map, fp.inputs);
  fp.plan = unflatten_plan(tape.value(fp.plan_var));

  if (cfg.aux_heads) {
    const double scale = cfg.output_scale;
    fp.map_points = tape.scalar_mul(dense(tape, p, "aux.map_points", fp.queries.map_queries), scale);
    fp.map_logits = dense(tape, p, "aux.map_cls", fp.queries.map_queries);
    // Mode offsets are predicted relative to each agent's current position.
    const std::size_t na = fp.queries.num_agents;
    const std::size_t width = static_cast<std::size_t>(cfg.num_modes * cfg.horizon * 2);
    Tensor origin(na, width);
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t c = 0; c < width; ++c) {
        origin(i, c) = scenario.agents[i].position.x * (c % 2 == 0) +
                       scenario.agents[i].position.y * (c % 2 == 1);
      }
    }
    fp.mode_points = tape.add(
        tape.scalar_mul(dense(tape, p, "aux.mode_points", fp.queries.agent_queries), scale),
        tape.leaf(std::move(origin)));
    fp.mode_logits = dense(tape, p, "aux.mode_cls", fp.queries.agent_queries);
  }
  return fp;
}

PlanTrajectory unflatten_plan(const Tensor& flat) {
  PlanTrajectory plan(flat.size() / 2);
  for (std::size_t t = 0; t < plan.size(); ++t) plan[t] = {flat[2 * t], flat[2 * t + 1]};
  return plan;
}

Tensor flatten_points(std::span<const Point2> points) {
  Tensor t(1, 2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    t[2 * i] = points[i].x;
    t[2 * i + 1] = points[i].y;
  }
  return t;
}

}  // namespace vecplan
