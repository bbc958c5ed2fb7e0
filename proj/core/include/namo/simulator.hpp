#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "namo/bypass_predictor.hpp"
#include "namo/decision.hpp"
#include "namo/grid.hpp"
#include "namo/observation.hpp"
#include "namo/planner.hpp"
#include "namo/removal_model.hpp"
#include "namo/scenario.hpp"

namespace namo {

struct Pose2D {
  GridPosition position;
  double heading = 0.0;
};

/// F_l / v_lin + sum |heading change| / v_rot over the trajectory.
double motion_time(const Trajectory& trajectory, double v_lin, double v_rot);

/// Ground-truth state of one movable obstacle in the simulated world.
struct WorldObstacle {
  int id = 0;
  GridPosition position;
  double radius = 0.3;
  double true_sr = 0.9;
  bool carried = false;
};

struct SensorModel {
  double range = kDefaultSensorRange;
  double fov = kDefaultFov;
  Eigen::Matrix2d noise = Eigen::Matrix2d::Zero();  // range/bearing covariance
};

/// One noisy range/bearing measurement per obstacle inside range, field of
/// view and line of sight. Deterministic in (seed, tick).
std::vector<RangeBearingMeasurement> sense(const OccupancyGrid& grid, std::span<const WorldObstacle> obstacles,
                                           const Pose2D& robot, const SensorModel& sensor, std::uint64_t seed,
                                           std::uint64_t tick);

/// Bernoulli(true_sr) load attempt, deterministic in (seed, attempt_index).
/// Throws "not in range" unless the robot is within radius sum + 0.1 m.
bool attempt_load(const WorldObstacle& mo, const Pose2D& robot, double robot_radius, std::uint64_t seed,
                  std::uint64_t attempt_index);

enum class PolicyKind { NamoUnc, PriorityBypass, PriorityRemoval, RandomChoice };

struct Policy {
  PolicyKind kind = PolicyKind::NamoUnc;
  bool action_uncertainty = true;
  bool blockage_uncertainty = true;

  /// "namounc", "namounc-no-action", "namounc-no-blockage",
  /// "namounc-no-action-no-blockage", "priority-bypass", "priority-removal",
  /// "random-choice". Throws namo::Error for anything else.
  static Policy parse(std::string_view name);
  std::string name() const;
};

enum class Outcome { Success, Timeout, NoStrategy };
std::string_view to_string(Outcome o);

struct DecisionRecord {
  double time = 0.0;
  int obstacle_id = -1;
  std::string region;
  std::string reason;  // "blocked" (first encounter) or "retry" (after a failed load)
  Strategy choice = Strategy::Bypass;
  bool forced = false;    // policy picked the other option because its choice was infeasible
  bool feasible = true;   // false when neither option had a finite cost
  CostInterval bypass_nav;
  CostInterval bypass_blocked;
  CostInterval bypass_total;
  CostInterval removal_mo;
  CostInterval removal_nav;
  CostInterval removal_blocked;
  CostInterval removal_total;
  double bypass_utility = 0.0;
  double removal_utility = 0.0;
  double removal_time = 0.0;  // T_MO, +inf without a stock region
  double p_block_bypass = 0.0;
  double p_block_removal = 0.0;
  SuccessRateInterval success_rate;
};

struct TrialDiagnostics {
  double distance = 0.0;
  double rotation = 0.0;  // radians turned in place
  int load_attempts = 0;
  int load_successes = 0;
  int removals = 0;
  int replans = 0;
  int observations = 0;
  std::size_t explored_cells = 0;
  int removal_clear_violations = 0;  // placed MO still blocking the path it was removed from
};

struct TrialRecord {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  double elapsed = 0.0;
  std::vector<DecisionRecord> decisions;
  TrialDiagnostics diagnostics;

  /// First decision epoch taken at an obstacle of `region`, if any.
  const DecisionRecord* first_decision_at(std::string_view region) const;
};

/// Single JSON object, no trailing newline. Infinite values print as "inf".
std::string to_json_line(const TrialRecord& record);

/// Loaded scenario: map, inflation and bypass model, shared by episodes.
class Simulator {
 public:
  explicit Simulator(ScenarioConfig config);
  Simulator(ScenarioConfig config, GlrModel model);

  const ScenarioConfig& config() const { return config_; }
  const OccupancyGrid& grid() const { return grid_; }
  const InflatedGrid& inflated() const { return inflated_; }
  const GlrModel& model() const { return model_; }

  /// Runs one episode with the given seed (the config seed when omitted).
  TrialRecord run(const Policy& policy, std::optional<std::uint64_t> seed = std::nullopt) const;

 private:
  ScenarioConfig config_;
  OccupancyGrid grid_;
  InflatedGrid inflated_;
  GlrModel model_;
  std::map<std::string, BetaBelief> calibration_;
};

TrialRecord run_episode(const ScenarioConfig& config, const Policy& policy);

/// splitmix64-based seed derivation for independent deterministic streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

}  // namespace namo
