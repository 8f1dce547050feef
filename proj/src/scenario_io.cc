#include "vecplan/scenario_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vecplan/error.h"

namespace vecplan {

using nlohmann::json;

namespace {

json point_json(Point2 p) { return json::array({p.x, p.y}); }

json points_json(std::span<const Point2> pts) {
  json out = json::array();
  for (const Point2& p : pts) out.push_back(point_json(p));
  return out;
}

// Field access with schema diagnostics naming the JSON path.
class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(ErrorCategory::kSchema, origin_ + ": " + path + ": " + what);
  }

  const json& field(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
  }

  double number(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
  }

  std::string text(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& obj, const std::string& path, const char* key) const {
    const json& v = field(obj, path, key);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
  }

  Point2 point(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(path, "expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Trajectory points(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of points");
    Trajectory out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(point(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  template <typename Fn>
  auto mapped(Fn&& fn) const {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::kSchema) throw;
      throw Error(ErrorCategory::kSchema, origin_ + ": " + e.what());
    }
  }

 private:
  std::string origin_;
};

}  // namespace

std::string scenario_to_string(const Scenario& s) {
  json doc;
  doc["version"] = kScenarioSchemaVersion;
  doc["T_f"] = s.horizon();
  doc["horizon_dt"] = s.horizon_dt;
  doc["perception_range"] = {{"longitudinal", s.perception_range.longitudinal},
                             {"lateral", s.perception_range.lateral}};
  json map = json::array();
  for (const MapVector& m : s.map) {
    map.push_back({{"class", to_string(m.map_class)},
                   {"confidence", m.confidence},
                   {"drivable_side", to_string(m.drivable_side)},
                   {"points", points_json(m.points)}});
  }
  doc["map"] = std::move(map);
  json agents = json::array();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentPrediction& a = s.agents[i];
    json modes = json::array();
    for (const Trajectory& m : a.modes) modes.push_back(points_json(m));
    agents.push_back({{"position", point_json(a.position)},
                      {"heading", a.heading},
                      {"length", a.length},
                      {"width", a.width},
                      {"confidence", a.confidence},
                      {"mode_scores", a.mode_scores},
                      {"modes", std::move(modes)},
                      {"gt_future", points_json(s.agent_gt_futures.at(i))}});
  }
  doc["agents"] = std::move(agents);
  doc["ego"] = {{"position", point_json(s.ego.position)},
                {"heading", s.ego.heading},
                {"velocity", s.ego.velocity},
                {"acceleration", s.ego.acceleration},
                {"steering_angle", s.ego.steering_angle},
                {"command", to_string(s.ego.command)}};
  doc["expert"] = points_json(s.expert);
  return doc.dump(1) + "\n";
}

Scenario scenario_from_string(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::kParse, origin + ": " + e.what());
  }
  const Reader r(origin);
  const json& version = r.field(doc, "scenario", "version");
  if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion) {
    r.fail("scenario.version", "unsupported schema version " + version.dump() + " (expected " +
                                   std::to_string(kScenarioSchemaVersion) + ")");
  }
  Scenario s;
  const double tf = r.number(doc, "scenario", "T_f");
  s.horizon_dt = r.number(doc, "scenario", "horizon_dt");
  const json& range = r.field(doc, "scenario", "perception_range");
  s.perception_range.longitudinal = r.number(range, "scenario.perception_range", "longitudinal");
  s.perception_range.lateral = r.number(range, "scenario.perception_range", "lateral");

  const json& map = r.array(doc, "scenario", "map");
  for (std::size_t i = 0; i < map.size(); ++i) {
    const std::string path = "scenario.map[" + std::to_string(i) + "]";
    MapVector m;
    const std::string cls = r.text(map[i], path, "class");
    m.map_class = r.mapped([&] { return map_class_from_string(cls); });
    m.confidence = r.number(map[i], path, "confidence");
    const std::string side = r.text(map[i], path, "drivable_side");
    m.drivable_side = r.mapped([&] { return drivable_side_from_string(side); });
    m.points = r.points(r.array(map[i], path, "points"), path + ".points");
    s.map.push_back(std::move(m));
  }

  const json& agents = r.array(doc, "scenario", "agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "scenario.agents[" + std::to_string(i) + "]";
    const json& aj = agents[i];
    AgentPrediction a;
    a.position = r.point(r.field(aj, path, "position"), path + ".position");
    a.heading = r.number(aj, path, "heading");
    a.length = r.number(aj, path, "length");
    a.width = r.number(aj, path, "width");
    a.confidence = r.number(aj, path, "confidence");
    const json& scores = r.array(aj, path, "mode_scores");
    for (const json& v : scores) {
      if (!v.is_number()) r.fail(path + ".mode_scores", "expected numbers");
      a.mode_scores.push_back(v.get<double>());
    }
    const json& modes = r.array(aj, path, "modes");
    for (std::size_t k = 0; k < modes.size(); ++k) {
      a.modes.push_back(r.points(modes[k], path + ".modes[" + std::to_string(k) + "]"));
    }
    s.agent_gt_futures.push_back(r.points(r.array(aj, path, "gt_future"), path + ".gt_future"));
    s.agents.push_back(std::move(a));
  }

  const json& ego = r.field(doc, "scenario", "ego");
  s.ego.position = r.point(r.field(ego, "scenario.ego", "position"), "scenario.ego.position");
  s.ego.heading = r.number(ego, "scenario.ego", "heading");
  s.ego.velocity = r.number(ego, "scenario.ego", "velocity");
  s.ego.acceleration = r.number(ego, "scenario.ego", "acceleration");
  s.ego.steering_angle = r.number(ego, "scenario.ego", "steering_angle");
  const std::string cmd = r.text(ego, "scenario.ego", "command");
  s.ego.command = r.mapped([&] { return command_from_string(cmd); });

  s.expert = r.points(r.array(doc, "scenario", "expert"), "scenario.expert");
  if (static_cast<double>(s.expert.size()) != tf) {
    r.fail("scenario.T_f", "T_f disagrees with the expert length " +
                               std::to_string(s.expert.size()));
  }
  r.mapped([&] {
    validate_scenario(s);
    return 0;
  });
  return s;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kMissingFile, "cannot write " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kMissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  write_text_file(path, scenario_to_string(scenario));
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_string(read_text_file(path), path.string());
}

}  // namespace vecplan
