#include "namo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "namo/error.hpp"

namespace namo {

double distance(const GridPosition& a, const GridPosition& b) { return std::hypot(a.x - b.x, a.y - b.y); }

OccupancyGrid::OccupancyGrid(int width_cells, int height_cells, double resolution)
    : width_(width_cells), height_(height_cells), resolution_(resolution) {
  if (width_cells < 1 || height_cells < 1) throw Error("grid dimensions must be >= 1");
  if (!(resolution > 0.0)) throw Error("grid resolution must be > 0");
  cells_.assign(static_cast<std::size_t>(width_) * height_, CellState::Free);
  explored_.assign(cells_.size(), 0);
}

bool OccupancyGrid::contains(const GridPosition& p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_m() && p.y <= height_m();
}

CellState OccupancyGrid::at(CellIndex c) const {
  if (!in_bounds(c)) throw Error("cell index out of bounds");
  return cells_[index(c)];
}

void OccupancyGrid::set(CellIndex c, CellState s) {
  if (!in_bounds(c)) throw Error("cell index out of bounds");
  cells_[index(c)] = s;
}

bool OccupancyGrid::is_explored(CellIndex c) const {
  if (!in_bounds(c)) throw Error("cell index out of bounds");
  return explored_[index(c)] != 0;
}

void OccupancyGrid::set_explored(CellIndex c) {
  if (!in_bounds(c)) return;
  auto& e = explored_[index(c)];
  if (!e) {
    e = 1;
    ++explored_count_;
  }
}

CellIndex OccupancyGrid::cell_of(const GridPosition& p) const {
  CellIndex c{static_cast<int>(std::floor(p.x / resolution_)), static_cast<int>(std::floor(p.y / resolution_))};
  if (c.x == width_ && p.x <= width_m()) c.x = width_ - 1;
  if (c.y == height_ && p.y <= height_m()) c.y = height_ - 1;
  return c;
}

GridPosition OccupancyGrid::center_of(CellIndex c) const {
  return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_};
}

void OccupancyGrid::fill_rect(const GridPosition& lo, const GridPosition& hi, CellState s) {
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const auto c = center_of({x, y});
      if (c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y) cells_[index({x, y})] = s;
    }
  }
}

OccupancyGrid parse_map(std::istream& in) {
  int width = -1;
  int height = -1;
  double resolution = -1.0;
  std::string key;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> key)) throw Error("map: truncated header");
    if (key == "width") {
      in >> width;
    } else if (key == "height") {
      in >> height;
    } else if (key == "resolution") {
      in >> resolution;
    } else {
      throw Error("map: unknown header key '" + key + "'");
    }
    if (!in) throw Error("map: bad header value for '" + key + "'");
  }
  OccupancyGrid grid(width, height, resolution);
  std::string row;
  std::getline(in, row);
  for (int r = 0; r < height; ++r) {
    if (!std::getline(in, row)) throw Error("map: expected " + std::to_string(height) + " rows");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (static_cast<int>(row.size()) != width) {
      throw Error("map: row " + std::to_string(r) + " has " + std::to_string(row.size()) + " cells");
    }
    const int y = height - 1 - r;
    for (int x = 0; x < width; ++x) {
      switch (row[x]) {
        case '.': break;
        case '#': grid.set({x, y}, CellState::StaticObstacle); break;
        case 'm': grid.set({x, y}, CellState::MovableObstacleMark); break;
        default: throw Error(std::string("map: bad cell character '") + row[x] + "'");
      }
    }
  }
  return grid;
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("map: cannot open '" + path + "'");
  return parse_map(in);
}

void write_map(std::ostream& out, const OccupancyGrid& grid) {
  out << "width " << grid.width() << "\nheight " << grid.height() << "\nresolution " << grid.resolution() << "\n";
  for (int y = grid.height() - 1; y >= 0; --y) {
    std::string row(grid.width(), '.');
    for (int x = 0; x < grid.width(); ++x) {
      switch (grid.at({x, y})) {
        case CellState::Free: break;
        case CellState::StaticObstacle: row[x] = '#'; break;
        case CellState::MovableObstacleMark: row[x] = 'm'; break;
      }
    }
    out << row << "\n";
  }
}

namespace {

// Amanatides-Woo traversal. The visitor gets (cell, entry distance) and
// returns false to stop.
template <typename Visit>
void traverse(const OccupancyGrid& grid, const GridPosition& origin, double angle, double max_range,
              Visit&& visit) {
  const double res = grid.resolution();
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  CellIndex cell = grid.cell_of(origin);
  if (!visit(cell, 0.0)) return;

  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double delta_x = step_x != 0 ? res / std::abs(dx) : inf;
  const double delta_y = step_y != 0 ? res / std::abs(dy) : inf;
  double next_x = inf;
  double next_y = inf;
  if (step_x > 0) next_x = ((cell.x + 1) * res - origin.x) / dx;
  if (step_x < 0) next_x = (cell.x * res - origin.x) / dx;
  if (step_y > 0) next_y = ((cell.y + 1) * res - origin.y) / dy;
  if (step_y < 0) next_y = (cell.y * res - origin.y) / dy;

  while (true) {
    double t = 0.0;
    if (next_x < next_y) {
      t = next_x;
      cell.x += step_x;
      next_x += delta_x;
    } else {
      t = next_y;
      cell.y += step_y;
      next_y += delta_y;
    }
    if (t > max_range) return;
    if (!visit(cell, std::max(0.0, t))) return;
  }
}

}  // namespace

double ray_distance(const OccupancyGrid& grid, const GridPosition& origin, double angle, double max_range) {
  double hit = max_range;
  traverse(grid, origin, angle, max_range, [&](CellIndex c, double t) {
    if (grid.blocks_ray(c)) {
      hit = t;
      return false;
    }
    return true;
  });
  return hit;
}

bool line_of_sight(const OccupancyGrid& grid, const GridPosition& a, const GridPosition& b) {
  const double len = distance(a, b);
  if (len == 0.0) return !grid.blocks_ray(grid.cell_of(a));
  const double angle = std::atan2(b.y - a.y, b.x - a.x);
  return ray_distance(grid, a, angle, len) >= len;
}

double raycast_width(const OccupancyGrid& grid, const GridPosition& point, double heading) {
  const auto cell = grid.cell_of(point);
  if (grid.blocks_ray(cell)) throw Error("query inside obstacle");
  const double span = std::hypot(grid.width_m(), grid.height_m()) + grid.resolution();
  const double perp = heading + std::numbers::pi / 2.0;
  const double left = ray_distance(grid, point, perp, span);
  const double right = ray_distance(grid, point, perp + std::numbers::pi, span);
  return std::max(grid.resolution(), left + right);
}

double free_area(const OccupancyGrid& grid) {
  std::size_t free = 0;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.at({x, y}) == CellState::Free) ++free;
    }
  }
  return static_cast<double>(free) * grid.resolution() * grid.resolution();
}

void mark_explored(OccupancyGrid& grid, const GridPosition& origin, double heading, double sensor_range,
                   double fov) {
  const auto start = grid.cell_of(origin);
  if (!grid.in_bounds(start)) return;
  grid.set_explored(start);
  const bool full_circle = fov >= 2.0 * std::numbers::pi - 1e-12;
  const double sweep = full_circle ? 2.0 * std::numbers::pi : fov;
  const int rays = std::max(8, static_cast<int>(std::ceil(sweep * sensor_range / (0.5 * grid.resolution()))));
  for (int i = 0; i < rays; ++i) {
    const double angle = full_circle ? sweep * i / rays : heading - fov / 2.0 + fov * i / std::max(1, rays - 1);
    traverse(grid, origin, angle, sensor_range, [&](CellIndex c, double) {
      if (!grid.in_bounds(c)) return false;
      grid.set_explored(c);
      return !grid.is_static(c);
    });
  }
}

}  // namespace namo
