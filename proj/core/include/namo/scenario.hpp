#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "namo/blockage_model.hpp"
#include "namo/grid.hpp"

namespace namo {

struct ObstacleSpec {
  int id = 0;
  std::string region;                      // layout label, e.g. "B"
  std::string obstacle_class = "default";  // key for per-class success rates
  GridPosition position;
  GridPosition jitter;                     // uniform half-extent of the placement region
  double radius = 0.3;
  double true_sr = 0.9;
};

struct RobotSpec {
  double radius = 0.3;
  GridPosition start;
  double start_heading = 0.0;
  double v_lin = 0.5;  // m/s
  double v_rot = 1.0;  // rad/s
  double sensor_range = kDefaultSensorRange;
  double fov = kDefaultFov;
  Eigen::Vector3d pose_variance{0.01, 0.01, 0.004};  // diag of the localization covariance
};

/// Everything an episode needs. Paths are resolved relative to the config file.
struct ScenarioConfig {
  std::string name;
  std::string map_path;
  std::string bypass_model_path;
  RobotSpec robot;
  GridPosition goal;
  std::vector<ObstacleSpec> obstacles;

  Eigen::Vector2d measurement_variance{0.01, 0.001};  // range m^2, bearing rad^2
  double sense_spacing = 1.0;                         // re-sense every this many meters
  int observations_per_stop = 3;
  double sense_time = 0.2;

  ObstaclePopulation population;  // free_area filled from the map when <= 0 in the file
  int blockage_samples = kDefaultBlockageSamples;
  std::uint64_t blockage_seed = kDefaultBlockageSeed;

  int max_attempts = 3;
  double load_overhead = 5.0;
  double stock_search_radius = 5.0;
  double nominal_removal_time = 15.0;  // T_MO assumed for unseen obstacles

  double estimated_sr = 0.9;
  int calibration_trials = 10;
  bool shared_sr = true;
  std::string calibration_log;  // optional CSV; overrides estimated_sr

  double confidence = 0.95;
  double decision_time = 1.0;
  double replan_time = 0.1;
  double motion_noise = 0.05;
  double timeout = 300.0;
  std::uint64_t seed = 1;
};

/// Parses a scenario document. `overrides_json` is an optional JSON merge
/// patch applied before parsing; the extra key "true_sr" sets every
/// obstacle's real success rate.
ScenarioConfig parse_scenario(std::string_view json_text, const std::string& base_dir,
                              std::string_view overrides_json = {});
ScenarioConfig load_scenario(const std::string& path, std::string_view overrides_json = {});

/// Checks config invariants against the map; throws namo::ConfigError.
void validate_scenario(const ScenarioConfig& config, const OccupancyGrid& grid);

}  // namespace namo
