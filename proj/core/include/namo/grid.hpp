#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace namo {

inline constexpr double kDefaultResolution = 0.05;
inline constexpr double kDefaultSensorRange = 5.0;
inline constexpr double kDefaultFov = 1.5707963267948966;  // 90 degrees

enum class CellState : std::uint8_t { Free, StaticObstacle, MovableObstacleMark };

/// Metric position in the map frame. The origin is the lower-left map corner.
struct GridPosition {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GridPosition&, const GridPosition&) = default;
};

struct CellIndex {
  int x = 0;
  int y = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

double distance(const GridPosition& a, const GridPosition& b);

/// Discretized static map plus the explored/unexplored mask used for partial
/// observability. Cells are stored row-major with y growing upwards.
class OccupancyGrid {
 public:
  OccupancyGrid(int width_cells, int height_cells, double resolution = kDefaultResolution);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double width_m() const { return width_ * resolution_; }
  double height_m() const { return height_ * resolution_; }

  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool contains(const GridPosition& p) const;

  CellState at(CellIndex c) const;
  void set(CellIndex c, CellState s);
  bool is_static(CellIndex c) const { return at(c) == CellState::StaticObstacle; }

  /// Cells strictly outside the map are treated as static obstacles.
  bool blocks_ray(CellIndex c) const { return !in_bounds(c) || is_static(c); }

  bool is_explored(CellIndex c) const;
  /// Monotone: there is no way to reset a cell to unexplored.
  void set_explored(CellIndex c);
  std::size_t explored_count() const { return explored_count_; }

  /// Cell containing p; positions on the upper/right map edge map to the last cell.
  CellIndex cell_of(const GridPosition& p) const;
  GridPosition center_of(CellIndex c) const;

  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  std::size_t cell_count() const { return cells_.size(); }

  /// Marks every cell whose center lies in [lo, hi] (scenario construction helper).
  void fill_rect(const GridPosition& lo, const GridPosition& hi, CellState s);

 private:
  int width_;
  int height_;
  double resolution_;
  std::vector<CellState> cells_;
  std::vector<std::uint8_t> explored_;
  std::size_t explored_count_ = 0;
};

/// Map text format:
///   width <cells>
///   height <cells>
///   resolution <meters>
/// followed by `height` rows of `width` characters, top row first
/// ('.' free, '#' static obstacle, 'm' movable-obstacle mark).
OccupancyGrid parse_map(std::istream& in);
OccupancyGrid load_map(const std::string& path);
void write_map(std::ostream& out, const OccupancyGrid& grid);

/// Distance travelled from `origin` along `angle` before entering a ray-blocking
/// cell, capped at max_range. Exact cell-boundary traversal.
double ray_distance(const OccupancyGrid& grid, const GridPosition& origin, double angle, double max_range);

/// True when the straight segment a-b crosses no static obstacle cell.
bool line_of_sight(const OccupancyGrid& grid, const GridPosition& a, const GridPosition& b);

/// Corridor width at `point`: free span along the line perpendicular to
/// `heading`, measured to the first static cell (or map border) on each side.
double raycast_width(const OccupancyGrid& grid, const GridPosition& point, double heading);

/// Free cell count times resolution squared.
double free_area(const OccupancyGrid& grid);

/// Marks every cell hit by an unobstructed ray from `origin` within range and
/// field of view. The first static cell on a ray is marked; nothing behind it.
void mark_explored(OccupancyGrid& grid, const GridPosition& origin, double heading,
                   double sensor_range = kDefaultSensorRange, double fov = kDefaultFov);

}  // namespace namo
