#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "namo/grid.hpp"

namespace namo {

struct Waypoint {
  GridPosition position;
  double heading = 0.0;
};

/// Ordered waypoints. heading[i] points from waypoint i to i+1; the last
/// waypoint keeps its predecessor's heading.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  double total_length = 0.0;

  static Trajectory from_positions(std::span<const GridPosition> positions);

  std::size_t size() const { return waypoints.size(); }
  bool empty() const { return waypoints.empty(); }
  const GridPosition& front() const { return waypoints.front().position; }
  const GridPosition& back() const { return waypoints.back().position; }

  /// Waypoints [from, end) as a new trajectory (at least two waypoints kept).
  Trajectory suffix(std::size_t from) const;
};

/// Recomputes every heading from the waypoint geometry; positions unchanged.
Trajectory smooth_headings(Trajectory trajectory);

/// Ellipse given by center, semi-axes and the orientation of the major axis.
struct Ellipse {
  GridPosition center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;

  /// Closed-set test against the ellipse grown by `inflation` on both axes.
  bool contains(const GridPosition& p, double inflation = 0.0) const;
  double area() const;
};

struct PlanRequest {
  GridPosition start;
  GridPosition goal;
  std::vector<Ellipse> temporary_obstacles;
};

/// Static map inflated by the robot radius: a cell is blocked when a static
/// cell center lies within robot_radius of its center. Build once per map and
/// reuse across plan requests.
class InflatedGrid {
 public:
  InflatedGrid(const OccupancyGrid& grid, double robot_radius);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double robot_radius() const { return robot_radius_; }
  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool blocked(CellIndex c) const { return !in_bounds(c) || mask_[index(c)] != 0; }
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  CellIndex cell_of(const GridPosition& p) const;
  GridPosition center_of(CellIndex c) const;

  /// Inflated mask plus the given ellipses, each grown by the robot radius.
  std::vector<std::uint8_t> with_obstacles(std::span<const Ellipse> obstacles) const;

 private:
  int width_;
  int height_;
  double resolution_;
  double robot_radius_;
  std::vector<std::uint8_t> mask_;
};

/// 8-connected A* (octile heuristic, no corner cutting). Returns nullopt when
/// the goal is unreachable. Throws "endpoint blocked" when start or goal sits
/// in an inflated or temporary obstacle.
std::optional<Trajectory> plan_path(const InflatedGrid& grid, const PlanRequest& request);
std::optional<Trajectory> plan_path(const OccupancyGrid& grid, const PlanRequest& request, double robot_radius);

/// Integer move costs used by the planner: 1 per straight step, sqrt(2) per
/// diagonal, scaled by kCostScale.
inline constexpr std::int64_t kCostScale = 1'000'000;
inline constexpr std::int64_t kStraightCost = kCostScale;
inline constexpr std::int64_t kDiagonalCost = 1'414'214;

/// Path cost of a trajectory in planner units (sum of straight/diagonal moves).
std::int64_t path_cost(const Trajectory& trajectory, double resolution);

/// Shortest 8-connected path distance (meters) from source to every cell,
/// +inf where unreachable. Blocked mask as produced by with_obstacles().
std::vector<double> distance_field(const InflatedGrid& grid, std::span<const std::uint8_t> blocked,
                                   CellIndex source);

/// Nearest unblocked cell to `p` by breadth-first search, if any within max_cells rings.
std::optional<CellIndex> nearest_free_cell(const InflatedGrid& grid, std::span<const std::uint8_t> blocked,
                                           const GridPosition& p, int max_cells = 50);

/// Greedy line-of-sight shortcutting: from each kept waypoint jump to the
/// farthest later waypoint whose connecting segment crosses only unblocked
/// cells, then resample every segment at `spacing`. Waypoints before
/// `keep_prefix` are copied unchanged; endpoints are preserved.
Trajectory shortcut_path(const InflatedGrid& grid, std::span<const std::uint8_t> blocked, const Trajectory& path,
                         double spacing, std::size_t keep_prefix = 0);

}  // namespace namo
