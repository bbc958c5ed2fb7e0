#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "namo/grid.hpp"
#include "namo/interval.hpp"
#include "namo/observation.hpp"
#include "namo/planner.hpp"

namespace namo {

/// Beta(alpha, beta) belief over the loading success rate.
struct BetaBelief {
  double alpha = 1.0;
  double beta = 1.0;

  BetaBelief() = default;
  BetaBelief(double a, double b);

  double mean() const { return alpha / (alpha + beta); }

  /// Belief after `successes` / `failures` calibration trials starting from
  /// Beta(prior_alpha, prior_beta). The default prior is uniform.
  static BetaBelief from_trials(int successes, int failures, double prior_alpha = 1.0, double prior_beta = 1.0);

  friend bool operator==(const BetaBelief&, const BetaBelief&) = default;
};

/// alpha + 1 on success, beta + 1 on failure.
BetaBelief update_belief(BetaBelief belief, bool success);

/// Regularized incomplete beta I_x(a, b) (continued fraction, Lentz).
double regularized_incomplete_beta(double a, double b, double x);

/// Inverse of I_x(a, b) in x by bisection, tolerance 1e-12.
double beta_ppf(double a, double b, double q);

struct SuccessRateInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Equal-tailed interval [ppf((1-c)/2), ppf((1+c)/2)].
SuccessRateInterval success_rate_interval(const BetaBelief& belief, double confidence = 0.95);

struct RemovalParameters {
  int max_attempts = 3;              // M
  double removal_time = 0.0;         // T_MO, seconds per attempt
  CostInterval bypass_cost;          // fallback after M failures; its midpoint enters the cost
};

/// T sum_{i=1..M} i p (1-p)^(i-1) + (M T + C_by)(1-p)^M with C_by the bypass midpoint.
double expected_removal_cost(double p_a, const RemovalParameters& params);

/// Expected removal cost evaluated at both ends of the success-rate interval.
CostInterval removal_cost_interval(const BetaBelief& belief, const RemovalParameters& params,
                                   double confidence = 0.95);

struct RemovalTimeModel {
  double v_lin = 0.5;           // m/s
  double overhead = 5.0;        // load/unload seconds per attempt
  double search_radius = 5.0;   // path distance from the obstacle, meters
};

struct RemovalEstimate {
  double removal_time = 0.0;  // T_MO
  GridPosition stock_position;
  double approach_distance = 0.0;
  double carry_distance = 0.0;
  double return_distance = 0.0;
};

/// Picks the nearest reachable free cell that keeps the obstacle at least
/// (obstacle radius + robot radius) clear of the blocked path and of every
/// static cell, and prices approach + carry + return with the motion model.
/// nullopt means no stock region within the search radius.
std::optional<RemovalEstimate> estimate_removal_time(const OccupancyGrid& grid, const InflatedGrid& inflated,
                                                     const MovableObstacle& mo, const GridPosition& robot,
                                                     const Trajectory& blocked_path,
                                                     std::span<const Ellipse> other_obstacles,
                                                     const RemovalTimeModel& model = {});

/// One calibration load attempt.
struct CalibrationTrial {
  std::string obstacle_class;
  bool success = false;
};

// CSV with header obstacle_class,success (success is 0/1).
void write_calibration_log(std::ostream& out, std::span<const CalibrationTrial> trials);
std::vector<CalibrationTrial> read_calibration_log(std::istream& in);

/// Beliefs from a calibration log. With shared=true every trial feeds a single
/// belief stored under the key "*".
std::map<std::string, BetaBelief> beliefs_from_log(std::span<const CalibrationTrial> trials, bool shared,
                                                   double prior_alpha = 1.0, double prior_beta = 1.0);

}  // namespace namo
