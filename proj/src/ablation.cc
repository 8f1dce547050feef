#include "vecplan/ablation.h"

namespace vecplan {

std::vector<ArmSpec> default_arms() {
  return {
      {"1", false, false, true, true, true},  {"2", true, false, true, true, true},
      {"3", true, true, false, false, false}, {"4", true, true, true, false, false},
      {"5", true, true, false, true, false},  {"6", true, true, false, false, true},
      {"7", true, true, true, true, true},
  };
}

std::vector<Scenario> evaluation_set(const AblationConfig& c) {
  return generate_scenarios(c.eval_seed, c.eval_scenarios, c.generator);
}

TrainConfig arm_train_config(const ArmSpec& arm, const TrainConfig& base) {
  TrainConfig out = base;
  if (!arm.boundary) out.weights.boundary = 0.0;
  if (!arm.direction) out.weights.direction = 0.0;
  if (!arm.collision) out.weights.collision = 0.0;
  return out;
}

InteractionConfig arm_model_config(const ArmSpec& arm, const InteractionConfig& base) {
  InteractionConfig out = base;
  out.agent_interaction = arm.agent_interaction;
  out.map_interaction = arm.map_interaction;
  return out;
}

ArmResult run_arm(const ArmSpec& arm, const AblationConfig& c,
                  std::span<const Scenario> train_data, std::span<const Scenario> val_data,
                  std::span<const Scenario> eval_data) {
  const TrainConfig tc = arm_train_config(arm, c.train);
  const InteractionConfig mc = arm_model_config(arm, c.model);
  ArmResult r{arm, train_on(tc, mc, train_data, val_data), {}, {}};
  for (const Scenario& s : eval_data) r.plans.push_back(forward_plan(s, r.trained.params).plan);
  auto mark = [](bool on) { return std::string(on ? "x" : "-"); };
  r.row.name = arm.name;
  r.row.tags = {mark(arm.agent_interaction), mark(arm.map_interaction), mark(arm.boundary),
                mark(arm.direction), mark(arm.collision)};
  r.row.metrics = evaluate_plans(eval_data, r.plans, c.train.footprint);
  return r;
}

std::vector<ArmResult> ablation_report(std::span<const ArmSpec> arms, const AblationConfig& c,
                                       const std::function<void(const ArmResult&)>& on_arm) {
  const std::vector<Scenario> train_data = training_set(c.train, c.generator);
  const std::vector<Scenario> val_data = validation_set(c.train, c.generator);
  const std::vector<Scenario> eval_data = evaluation_set(c);
  std::vector<ArmResult> out;
  for (const ArmSpec& arm : arms) {
    out.push_back(run_arm(arm, c, train_data, val_data, eval_data));
    if (on_arm) on_arm(out.back());
  }
  return out;
}

std::vector<std::string> ablation_headers() {
  return {"agent_inter", "map_inter", "overstep_const", "dir_const", "col_const"};
}

std::vector<ReportRow> ablation_rows(std::span<const ArmResult> results) {
  std::vector<ReportRow> rows;
  for (const ArmResult& r : results) rows.push_back(r.row);
  return rows;
}

}  // namespace vecplan
