// vecplan: generate scenes, plan, train, simulate, evaluate and ablate.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vecplan/ablation.h"
#include "vecplan/config.h"
#include "vecplan/error.h"
#include "vecplan/generator.h"
#include "vecplan/metrics.h"
#include "vecplan/planner.h"
#include "vecplan/scenario_io.h"
#include "vecplan/simulator.h"
#include "vecplan/train.h"

namespace fs = std::filesystem;

namespace {

using namespace vecplan;

// Writes outputs, or with --check compares them against what is on disk.
class Output {
 public:
  Output(fs::path root, bool check) : root_(std::move(root)), check_(check) {}

  void emit(const fs::path& relative, const std::string& content) {
    const fs::path path = root_ / relative;
    if (!check_) {
      write_text_file(path, content);
      return;
    }
    if (!fs::exists(path)) {
      throw Error(ErrorCategory::kDrift, "--check: " + path.string() + " does not exist");
    }
    if (read_text_file(path) != content) {
      throw Error(ErrorCategory::kDrift, "--check: " + path.string() + " differs");
    }
    ++verified_;
  }

  const fs::path& root() const { return root_; }
  bool check() const { return check_; }
  int verified() const { return verified_; }

 private:
  fs::path root_;
  bool check_;
  int verified_ = 0;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  bool check = false;
};

RunConfig resolve(const Common& common) {
  RunConfig c = common.config_path.empty() ? RunConfig{} : load_run_config(common.config_path);
  if (const char* root = std::getenv("VECPLAN_OUTPUT_ROOT"); root && *root) c.output = root;
  if (!common.output.empty()) c.output = common.output;
  for (const std::string& o : common.overrides) apply_override(c, o);
  c.validate();
  return c;
}

std::unique_ptr<Planner> make_planner(const RunConfig& c) {
  const std::string& kind = c.simulator.planner;
  if (kind == "model") {
    if (c.simulator.checkpoint.empty()) {
      throw Error(ErrorCategory::kConfig, "model planner needs simulator.checkpoint");
    }
    return std::make_unique<ModelPlanner>(
        InteractionParams::load(c.simulator.checkpoint, c.model_config()));
  }
  if (kind == "refine") {
    return std::make_unique<RefinePlanner>(c.constraints, c.weights, c.simulator.refine);
  }
  if (kind == "expert") return std::make_unique<ExpertPlanner>();
  return std::make_unique<ConstantVelocityPlanner>();
}

struct NamedScenario {
  std::string name;
  Scenario scenario;
};

// Explicit files, then every *.json under the directories; with neither, the
// seeded evaluation set.
std::vector<NamedScenario> input_scenarios(const RunConfig& c,
                                           const std::vector<std::string>& files,
                                           const std::vector<std::string>& dirs) {
  std::vector<NamedScenario> out;
  for (const std::string& f : files) out.push_back({fs::path(f).stem().string(), load_scenario(f)});
  for (const std::string& d : dirs) {
    if (!fs::is_directory(d)) throw Error(ErrorCategory::kMissingFile, "no directory " + d);
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.path().extension() == ".json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const fs::path& p : paths) out.push_back({p.stem().string(), load_scenario(p)});
  }
  if (files.empty() && dirs.empty()) {
    const AblationConfig a = c.ablation_config();
    const std::vector<Scenario> set = evaluation_set(a);
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::ostringstream name;
      name << "eval_" << std::setw(4) << std::setfill('0') << i;
      out.push_back({name.str(), set[i]});
    }
  }
  return out;
}

std::string plan_row(const std::string& name, const PlanTrajectory& plan, const PlanningLoss& l) {
  std::ostringstream out;
  out << name;
  for (const Point2& p : plan) out << ',' << format_double(p.x) << ',' << format_double(p.y);
  for (double v : {l.total.value, l.collision, l.boundary, l.direction, l.imitation}) {
    out << ',' << format_double(v);
  }
  return out.str();
}

std::string plan_header(std::size_t tf) {
  std::ostringstream out;
  out << "scenario";
  for (std::size_t t = 1; t <= tf; ++t) out << ",x" << t << ",y" << t;
  out << ",loss_total,loss_collision,loss_boundary,loss_direction,loss_imitation";
  return out.str();
}

void run_generate(const RunConfig& c, Output& out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream name;
    name << "scenarios/scenario_" << std::setw(4) << std::setfill('0') << i << ".json";
    out.emit(name.str(), scenario_to_string(generate_scenario(scenario_seed(c.seed, i), c.generator)));
  }
}

void run_plan(const RunConfig& c, Output& out, const std::vector<NamedScenario>& inputs) {
  const auto planner = make_planner(c);
  std::ostringstream csv;
  csv << plan_header(static_cast<std::size_t>(c.generator.horizon)) << '\n';
  for (const NamedScenario& n : inputs) {
    const PlanTrajectory plan = plan_once(n.scenario, *planner);
    csv << plan_row(n.name, plan, total_planning_loss(plan, n.scenario, c.constraints, c.weights))
        << '\n';
  }
  out.emit("plans.csv", csv.str());
}

void run_train(const RunConfig& c, Output& out) {
  const TrainResult r = train(c.train_config(), c.model_config(), c.generator,
                              [](const EpochLog& e) {
                                std::cerr << "epoch " << e.epoch << " total " << e.train.total
                                          << " val_l2 " << e.val_l2 << '\n';
                              });
  const fs::path ckpt = out.root() / "model.ckpt";
  if (out.check()) {
    const fs::path tmp = fs::temp_directory_path() / "vecplan_check_model.ckpt";
    r.params.save(tmp);
    const std::string text = read_text_file(tmp);
    fs::remove(tmp);
    out.emit("model.ckpt", text);
  } else {
    fs::create_directories(out.root());
    r.params.save(ckpt);
  }
  out.emit("train_log.csv", r.log.to_csv());
  if (r.log.flagged) std::cerr << "warning: training objective moving average rose after warmup\n";
}

void run_simulate(const RunConfig& c, Output& out, const std::vector<NamedScenario>& inputs) {
  const auto planner = make_planner(c);
  RolloutOptions options;
  options.ego_box = c.footprint();
  options.constraints = c.constraints;
  std::ostringstream summary;
  summary << "scenario,ticks,collision_ticks,overstep_ticks\n";
  for (const NamedScenario& n : inputs) {
    const RolloutLog log = run_closed_loop(n.scenario, *planner,
                                           static_cast<std::size_t>(c.simulator.ticks), options);
    out.emit("rollouts/" + n.name + ".csv", log.to_csv());
    out.emit("traces/" + n.name + ".trace.csv", trace_csv(n.scenario, log));
    const auto count = [&](bool TickRecord::*flag) {
      return std::count_if(log.ticks.begin(), log.ticks.end(),
                           [&](const TickRecord& r) { return r.*flag; });
    };
    summary << n.name << ',' << log.ticks.size() << ',' << count(&TickRecord::collision) << ','
            << count(&TickRecord::overstep) << '\n';
  }
  out.emit("rollout_summary.csv", summary.str());
}

void run_evaluate(const RunConfig& c, Output& out, const std::vector<NamedScenario>& inputs) {
  const auto planner = make_planner(c);
  std::vector<Scenario> scenarios;
  std::vector<PlanTrajectory> plans;
  for (const NamedScenario& n : inputs) {
    scenarios.push_back(n.scenario);
    plans.push_back(plan_once(n.scenario, *planner));
  }
  const std::vector<ReportRow> rows{{planner->name(), {}, evaluate_plans(scenarios, plans, c.footprint())}};
  out.emit("report.csv", report_csv({}, rows));
  const std::string table = report_table({}, rows);
  out.emit("report.txt", table);
  std::cout << table;
}

void run_ablate(const RunConfig& c, Output& out, const std::vector<std::string>& ids) {
  std::vector<ArmSpec> arms;
  for (const ArmSpec& a : default_arms()) {
    if (ids.empty() || std::find(ids.begin(), ids.end(), a.name) != ids.end()) arms.push_back(a);
  }
  if (arms.empty()) throw Error(ErrorCategory::kConfig, "ablate: no arm matches --arms");
  const auto results = ablation_report(arms, c.ablation_config(), [](const ArmResult& r) {
    std::cerr << "arm " << r.arm.name << " done\n";
  });
  const std::vector<ReportRow> rows = ablation_rows(results);
  const std::vector<std::string> headers = ablation_headers();
  out.emit("ablation.csv", report_csv(headers, rows));
  const std::string table = report_table(headers, rows);
  out.emit("ablation.txt", table);
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vectorized planning toolkit on synthetic driving scenes"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--set", common.overrides, "Override section.key=value (repeatable)");
  app.add_option("-o,--output", common.output, "Output directory");
  app.add_flag("--check", common.check, "Recompute and verify existing outputs byte for byte");

  std::size_t count = 10;
  std::vector<std::string> files, dirs, arm_ids;
  std::string planner_flag, checkpoint_flag;

  auto* generate = app.add_subcommand("generate", "Write seeded scenario files");
  generate->add_option("-n,--count", count, "Number of scenarios");

  auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--scenario", files, "Scenario file (repeatable)");
    sub->add_option("--scenarios", dirs, "Directory of scenario files (repeatable)");
    sub->add_option("--planner", planner_flag, "model, refine, constant_velocity or expert");
    sub->add_option("--checkpoint", checkpoint_flag, "Model checkpoint for the model planner");
  };
  auto* plan = app.add_subcommand("plan", "Plan each scenario and report the loss breakdown");
  add_inputs(plan);
  auto* train_cmd = app.add_subcommand("train", "Train the interaction planner");
  auto* simulate = app.add_subcommand("simulate", "Closed-loop rollouts with traces");
  add_inputs(simulate);
  auto* evaluate = app.add_subcommand("evaluate", "L2 and collision report over a scenario set");
  add_inputs(evaluate);
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the design-choice arms");
  ablate->add_option("--arms", arm_ids, "Arm IDs 1..7 (default all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!planner_flag.empty()) common.overrides.push_back("simulator.planner=\"" + planner_flag + "\"");
    if (!checkpoint_flag.empty()) {
      common.overrides.push_back("simulator.checkpoint=\"" + checkpoint_flag + "\"");
    }
    const RunConfig config = resolve(common);
    Output out(config.output, common.check);
    const std::string command = app.get_subcommands().front()->get_name();
    out.emit(command + ".config.json", run_config_to_string(config));

    if (generate->parsed()) run_generate(config, out, count);
    if (plan->parsed()) run_plan(config, out, input_scenarios(config, files, dirs));
    if (train_cmd->parsed()) run_train(config, out);
    if (simulate->parsed()) run_simulate(config, out, input_scenarios(config, files, dirs));
    if (evaluate->parsed()) run_evaluate(config, out, input_scenarios(config, files, dirs));
    if (ablate->parsed()) run_ablate(config, out, arm_ids);
    if (common.check) std::cerr << "check: " << out.verified() << " files identical\n";
  } catch (const vecplan::Error& e) {
    std::cerr << "error: " << vecplan::category_name(e.category()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
