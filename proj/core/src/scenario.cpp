#include "namo/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "namo/error.hpp"

namespace namo {
namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

GridPosition read_position(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("position must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ScenarioConfig from_json(const json& j, const std::string& base_dir) {
  check_keys(j, "scenario",
             {"name", "map", "bypass_model", "robot", "goal", "obstacles", "sensing", "population", "removal",
              "success_rate", "decision", "motion_noise", "timeout", "seed", "true_sr", "description"});
  ScenarioConfig c;
  read(j, "name", c.name);
  if (!j.contains("map")) throw ConfigError("scenario: missing \"map\"");
  c.map_path = resolve(base_dir, j.at("map").get<std::string>());
  if (j.contains("bypass_model")) c.bypass_model_path = resolve(base_dir, j.at("bypass_model").get<std::string>());

  if (!j.contains("robot")) throw ConfigError("scenario: missing \"robot\"");
  const json& r = j.at("robot");
  check_keys(r, "robot", {"radius", "start", "start_heading", "v_lin", "v_rot", "sensor_range", "fov", "pose_variance"});
  read(r, "radius", c.robot.radius);
  if (!r.contains("start")) throw ConfigError("robot: missing \"start\"");
  c.robot.start = read_position(r.at("start"));
  read(r, "start_heading", c.robot.start_heading);
  read(r, "v_lin", c.robot.v_lin);
  read(r, "v_rot", c.robot.v_rot);
  read(r, "sensor_range", c.robot.sensor_range);
  read(r, "fov", c.robot.fov);
  if (r.contains("pose_variance")) {
    const auto v = r.at("pose_variance").get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError("robot: pose_variance must have 3 entries");
    c.robot.pose_variance = Eigen::Vector3d(v[0], v[1], v[2]);
  }

  if (!j.contains("goal")) throw ConfigError("scenario: missing \"goal\"");
  c.goal = read_position(j.at("goal"));

  if (j.contains("obstacles")) {
    for (const json& o : j.at("obstacles")) {
      check_keys(o, "obstacle", {"id", "region", "class", "position", "jitter", "radius", "true_sr"});
      ObstacleSpec s;
      s.id = o.value("id", static_cast<int>(c.obstacles.size()) + 1);
      read(o, "region", s.region);
      read(o, "class", s.obstacle_class);
      if (!o.contains("position")) throw ConfigError("obstacle: missing \"position\"");
      s.position = read_position(o.at("position"));
      if (o.contains("jitter")) s.jitter = read_position(o.at("jitter"));
      read(o, "radius", s.radius);
      read(o, "true_sr", s.true_sr);
      c.obstacles.push_back(s);
    }
  }
  if (j.contains("true_sr")) {
    const double sr = j.at("true_sr").get<double>();
    for (auto& o : c.obstacles) o.true_sr = sr;
  }

  if (j.contains("sensing")) {
    const json& s = j.at("sensing");
    check_keys(s, "sensing", {"measurement_variance", "spacing", "observations_per_stop", "sense_time"});
    if (s.contains("measurement_variance")) {
      const auto v = s.at("measurement_variance").get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("sensing: measurement_variance must have 2 entries");
      c.measurement_variance = Eigen::Vector2d(v[0], v[1]);
    }
    read(s, "spacing", c.sense_spacing);
    read(s, "observations_per_stop", c.observations_per_stop);
    read(s, "sense_time", c.sense_time);
  }
  c.population.free_area = 0.0;
  if (j.contains("population")) {
    const json& p = j.at("population");
    check_keys(p, "population", {"mean_diameter", "std_diameter", "appearance", "free_area", "samples", "seed"});
    read(p, "mean_diameter", c.population.mean_diameter);
    read(p, "std_diameter", c.population.std_diameter);
    read(p, "appearance", c.population.appearance);
    read(p, "free_area", c.population.free_area);
    read(p, "samples", c.blockage_samples);
    read(p, "seed", c.blockage_seed);
  }
  if (j.contains("removal")) {
    const json& m = j.at("removal");
    check_keys(m, "removal", {"max_attempts", "load_overhead", "stock_search_radius", "nominal_removal_time"});
    read(m, "max_attempts", c.max_attempts);
    read(m, "load_overhead", c.load_overhead);
    read(m, "stock_search_radius", c.stock_search_radius);
    read(m, "nominal_removal_time", c.nominal_removal_time);
  }
  if (j.contains("success_rate")) {
    const json& s = j.at("success_rate");
    check_keys(s, "success_rate", {"estimated", "calibration_trials", "shared", "calibration_log"});
    read(s, "estimated", c.estimated_sr);
    read(s, "calibration_trials", c.calibration_trials);
    read(s, "shared", c.shared_sr);
    if (s.contains("calibration_log")) c.calibration_log = resolve(base_dir, s.at("calibration_log").get<std::string>());
  }
  if (j.contains("decision")) {
    const json& d = j.at("decision");
    check_keys(d, "decision", {"confidence", "decision_time", "replan_time"});
    read(d, "confidence", c.confidence);
    read(d, "decision_time", c.decision_time);
    read(d, "replan_time", c.replan_time);
  }
  read(j, "motion_noise", c.motion_noise);
  read(j, "timeout", c.timeout);
  read(j, "seed", c.seed);
  return c;
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ScenarioConfig parse_scenario(std::string_view json_text, const std::string& base_dir,
                              std::string_view overrides_json) {
  try {
    json j = json::parse(json_text);
    if (!overrides_json.empty()) j.merge_patch(json::parse(overrides_json));
    return from_json(j, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path, std::string_view overrides_json) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_scenario(ss.str(), dir, overrides_json);
}

void validate_scenario(const ScenarioConfig& c, const OccupancyGrid& grid) {
  if (!positive(c.timeout)) throw ConfigError("timeout must be > 0");
  if (!positive(c.robot.radius)) throw ConfigError("robot radius must be > 0");
  if (!positive(c.robot.v_lin) || !positive(c.robot.v_rot)) throw ConfigError("robot speeds must be > 0");
  if (!positive(c.robot.sensor_range) || !positive(c.robot.fov)) throw ConfigError("sensor range and fov must be > 0");
  if ((c.robot.pose_variance.array() < 0.0).any() || (c.measurement_variance.array() < 0.0).any())
    throw ConfigError("variances must be >= 0");
  if (!positive(c.sense_spacing) || c.observations_per_stop < 0 || c.sense_time < 0.0)
    throw ConfigError("invalid sensing parameters");
  if (c.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (!positive(c.load_overhead) || !positive(c.stock_search_radius) || !positive(c.nominal_removal_time))
    throw ConfigError("invalid removal parameters");
  if (!(c.estimated_sr >= 0.0 && c.estimated_sr <= 1.0) || c.calibration_trials < 0)
    throw ConfigError("invalid success-rate calibration");
  if (!(c.confidence > 0.0 && c.confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (!positive(c.decision_time) || !positive(c.replan_time)) throw ConfigError("decision and replan times must be > 0");
  if (!(c.motion_noise >= 0.0 && c.motion_noise < 0.5)) throw ConfigError("motion_noise must lie in [0, 0.5)");
  if (c.blockage_samples < 1000) throw ConfigError("population samples must be >= 1000");
  try {
    c.population.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("population: ") + e.what());
  }
  auto free_at = [&](const GridPosition& p) {
    return grid.contains(p) && grid.at(grid.cell_of(p)) == CellState::Free;
  };
  if (!free_at(c.robot.start)) throw ConfigError("robot start is not in a free cell");
  if (!free_at(c.goal)) throw ConfigError("goal is not in a free cell");
  std::set<int> ids;
  for (const auto& o : c.obstacles) {
    if (!ids.insert(o.id).second) throw ConfigError("duplicate obstacle id " + std::to_string(o.id));
    if (!(o.true_sr >= 0.0 && o.true_sr <= 1.0)) throw ConfigError("true SR must lie in [0, 1]");
    if (!positive(o.radius)) throw ConfigError("obstacle radius must be > 0");
    if (o.jitter.x < 0.0 || o.jitter.y < 0.0) throw ConfigError("obstacle jitter must be >= 0");
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0}) {
        const GridPosition corner{o.position.x + sx * o.jitter.x, o.position.y + sy * o.jitter.y};
        if (!free_at(corner))
          throw ConfigError("obstacle " + std::to_string(o.id) + " placement region leaves the free space");
      }
  }
}

}  // namespace namo
