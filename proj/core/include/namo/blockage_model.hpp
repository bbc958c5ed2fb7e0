#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "namo/grid.hpp"
#include "namo/interval.hpp"
#include "namo/planner.hpp"

namespace namo {

inline constexpr int kDefaultBlockageSamples = 10'000;
inline constexpr std::uint64_t kDefaultBlockageSeed = 0x5eed'0b10'cca6eULL;

/// Prior over unseen movable obstacles: diameter ~ N(mean, std) truncated to
/// (0, inf), appearance parameter K, and the free map area A.
struct ObstaclePopulation {
  double mean_diameter = 0.6;
  double std_diameter = 0.1;
  double appearance = 0.5;  // K
  double free_area = 1.0;   // A, square meters

  void validate() const;
};

/// Probability that an obstacle of diameter l, uniformly placed across a
/// corridor of width W, leaves no side gap wide enough for a robot of radius r.
/// Piecewise: 0 | 4r/(W-l) - 1 | 1 | 0. Ties resolve to the lower branch value.
double blockage_given_size(double diameter, double width, double robot_radius);

/// Sampling estimate of the blockage probability marginalized over the
/// diameter prior. Deterministic for a fixed seed; exact when std is 0.
double blockage_at_width(const ObstaclePopulation& pop, double width, double robot_radius,
                         int n_samples = kDefaultBlockageSamples, std::uint64_t seed = kDefaultBlockageSeed);

struct PresenceProbability {
  double value = 0.0;
  bool clamped = false;  // W K > A and the value was clamped to 1
};

/// W K / A clamped to [0, 1].
PresenceProbability waypoint_presence_probability(const ObstaclePopulation& pop, double width);

struct WaypointRisk {
  std::size_t waypoint_index = 0;
  double width = 0.0;
  double p_block_given_here = 0.0;
  double p_here = 0.0;

  double product() const { return p_block_given_here * p_here; }
};

/// 1 - prod(1 - p(b|pt) p(pt)).
double combine_waypoint_risks(std::span<const WaypointRisk> risks);

struct BlockageOptions {
  int n_samples = kDefaultBlockageSamples;
  std::uint64_t seed = kDefaultBlockageSeed;
  /// Waypoint subsampling spacing along the path; <= 0 means the mean diameter.
  double spacing = 0.0;
};

/// Risk of every subsampled waypoint that lies in a never-explored cell.
std::vector<WaypointRisk> waypoint_risks(const ObstaclePopulation& pop, const Trajectory& trajectory,
                                         const OccupancyGrid& grid, double robot_radius,
                                         const BlockageOptions& options = {});

double trajectory_blockage(const ObstaclePopulation& pop, const Trajectory& trajectory, const OccupancyGrid& grid,
                           double robot_radius, const BlockageOptions& options = {});

/// p_block times the removal interval.
CostInterval blockage_cost(double p_block, const CostInterval& removal_interval);

/// CSV: waypoint_index,width,p_block_given_here,p_here,product.
void write_risk_csv(std::ostream& out, std::span<const WaypointRisk> risks);

}  // namespace namo
