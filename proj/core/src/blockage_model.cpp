#include "namo/blockage_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "namo/error.hpp"

namespace namo {

void ObstaclePopulation::validate() const {
  if (!(mean_diameter > 0.0)) throw Error("population mean diameter must be > 0");
  if (!(std_diameter >= 0.0)) throw Error("population diameter std must be >= 0");
  if (!(appearance >= 0.0)) throw Error("population appearance K must be >= 0");
  if (!(free_area > 0.0)) throw Error("population free area must be > 0");
}

double blockage_given_size(double l, double w, double r) {
  if (l >= w) return 0.0;  // does not fit in the corridor
  if (l <= w - 4.0 * r) return 0.0;
  if (l <= w - 2.0 * r) return std::clamp(4.0 * r / (w - l) - 1.0, 0.0, 1.0);
  return 1.0;
}

namespace {

std::vector<double> sample_diameters(const ObstaclePopulation& pop, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(pop.mean_diameter, pop.std_diameter);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    const double l = normal(rng);
    if (l > 0.0) out.push_back(l);
  }
  return out;
}

double mean_blockage(std::span<const double> diameters, double width, double r) {
  double sum = 0.0;
  for (double l : diameters) sum += blockage_given_size(l, width, r);
  return sum / static_cast<double>(diameters.size());
}

}  // namespace

double blockage_at_width(const ObstaclePopulation& pop, double width, double robot_radius, int n_samples,
                         std::uint64_t seed) {
  if (n_samples < 1000) throw Error("blockage sampling needs at least 1000 samples");
  if (pop.std_diameter == 0.0) return blockage_given_size(pop.mean_diameter, width, robot_radius);
  const auto diameters = sample_diameters(pop, n_samples, seed);
  return mean_blockage(diameters, width, robot_radius);
}

PresenceProbability waypoint_presence_probability(const ObstaclePopulation& pop, double width) {
  const double raw = width * pop.appearance / pop.free_area;
  return {std::clamp(raw, 0.0, 1.0), raw > 1.0};
}

double combine_waypoint_risks(std::span<const WaypointRisk> risks) {
  double clear = 1.0;
  for (const auto& r : risks) clear *= 1.0 - std::clamp(r.product(), 0.0, 1.0);
  return std::clamp(1.0 - clear, 0.0, 1.0);
}

std::vector<WaypointRisk> waypoint_risks(const ObstaclePopulation& pop, const Trajectory& trajectory,
                                         const OccupancyGrid& grid, double robot_radius,
                                         const BlockageOptions& options) {
  pop.validate();
  std::vector<WaypointRisk> out;
  if (trajectory.empty()) return out;
  const double spacing = options.spacing > 0.0 ? options.spacing : pop.mean_diameter;

  std::vector<double> diameters;
  if (pop.std_diameter > 0.0) diameters = sample_diameters(pop, options.n_samples, options.seed);

  double since_last = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& wp = trajectory.waypoints[i];
    if (i > 0) since_last += distance(wp.position, trajectory.waypoints[i - 1].position);
    if (i > 0 && since_last < spacing) continue;
    since_last = 0.0;
    const auto cell = grid.cell_of(wp.position);
    if (!grid.in_bounds(cell) || grid.is_explored(cell) || grid.blocks_ray(cell)) continue;
    WaypointRisk risk;
    risk.waypoint_index = i;
    risk.width = raycast_width(grid, wp.position, wp.heading);
    risk.p_block_given_here = diameters.empty() ? blockage_given_size(pop.mean_diameter, risk.width, robot_radius)
                                                : mean_blockage(diameters, risk.width, robot_radius);
    risk.p_here = waypoint_presence_probability(pop, risk.width).value;
    out.push_back(risk);
  }
  return out;
}

double trajectory_blockage(const ObstaclePopulation& pop, const Trajectory& trajectory, const OccupancyGrid& grid,
                           double robot_radius, const BlockageOptions& options) {
  const auto risks = waypoint_risks(pop, trajectory, grid, robot_radius, options);
  return combine_waypoint_risks(risks);
}

CostInterval blockage_cost(double p_block, const CostInterval& removal_interval) {
  if (!(p_block >= 0.0 && p_block <= 1.0)) throw Error("blockage probability must lie in [0, 1]");
  return p_block * removal_interval;
}

void write_risk_csv(std::ostream& out, std::span<const WaypointRisk> risks) {
  out << "waypoint_index,width,p_block_given_here,p_here,product\n" << std::setprecision(10);
  for (const auto& r : risks) {
    out << r.waypoint_index << ',' << r.width << ',' << r.p_block_given_here << ',' << r.p_here << ','
        << r.product() << '\n';
  }
}

}  // namespace namo
