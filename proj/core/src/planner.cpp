#include "namo/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>

#include "namo/error.hpp"

namespace namo {

namespace {

constexpr std::array<int, 8> kDx{1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy{0, 1, 1, 1, 0, -1, -1, -1};

bool is_diagonal(int dir) { return dir % 2 == 1; }

std::int64_t move_cost(int dir) { return is_diagonal(dir) ? kDiagonalCost : kStraightCost; }

// Heading change between two 45-degree directions, in steps of 45 degrees.
int turn_steps(int from, int to) {
  if (from < 0) return 0;
  const int d = std::abs(from - to) % 8;
  return std::min(d, 8 - d);
}

std::int64_t octile(CellIndex a, CellIndex b) {
  const std::int64_t dx = std::abs(a.x - b.x);
  const std::int64_t dy = std::abs(a.y - b.y);
  return kStraightCost * (std::max(dx, dy) - std::min(dx, dy)) + kDiagonalCost * std::min(dx, dy);
}

bool can_move(const InflatedGrid& g, std::span<const std::uint8_t> blocked, CellIndex from, int dir) {
  const CellIndex to{from.x + kDx[dir], from.y + kDy[dir]};
  if (!g.in_bounds(to) || blocked[g.index(to)]) return false;
  if (is_diagonal(dir)) {
    const CellIndex side_a{from.x + kDx[dir], from.y};
    const CellIndex side_b{from.x, from.y + kDy[dir]};
    if (blocked[g.index(side_a)] || blocked[g.index(side_b)]) return false;
  }
  return true;
}

}  // namespace

Trajectory Trajectory::from_positions(std::span<const GridPosition> positions) {
  Trajectory t;
  t.waypoints.reserve(positions.size());
  for (const auto& p : positions) t.waypoints.push_back({p, 0.0});
  return smooth_headings(std::move(t));
}

Trajectory Trajectory::suffix(std::size_t from) const {
  if (waypoints.size() < 2) return *this;
  from = std::min(from, waypoints.size() - 2);
  std::vector<GridPosition> pts;
  pts.reserve(waypoints.size() - from);
  for (std::size_t i = from; i < waypoints.size(); ++i) pts.push_back(waypoints[i].position);
  return from_positions(pts);
}

Trajectory smooth_headings(Trajectory trajectory) {
  auto& w = trajectory.waypoints;
  trajectory.total_length = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double dx = w[i + 1].position.x - w[i].position.x;
    const double dy = w[i + 1].position.y - w[i].position.y;
    const double step = std::hypot(dx, dy);
    trajectory.total_length += step;
    if (step > 0.0) {
      w[i].heading = std::atan2(dy, dx);
    } else {
      w[i].heading = i > 0 ? w[i - 1].heading : 0.0;
    }
  }
  if (w.size() >= 2) w.back().heading = w[w.size() - 2].heading;
  return trajectory;
}

bool Ellipse::contains(const GridPosition& p, double inflation) const {
  const double a = semi_major + inflation;
  const double b = semi_minor + inflation;
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  if (a <= 0.0 || b <= 0.0) return dx == 0.0 && dy == 0.0;
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  const double u = (c * dx + s * dy) / a;
  const double v = (-s * dx + c * dy) / b;
  return u * u + v * v <= 1.0 + 1e-12;
}

double Ellipse::area() const { return std::numbers::pi * semi_major * semi_minor; }

InflatedGrid::InflatedGrid(const OccupancyGrid& grid, double robot_radius)
    : width_(grid.width()),
      height_(grid.height()),
      resolution_(grid.resolution()),
      robot_radius_(robot_radius),
      mask_(grid.cell_count(), 0) {
  const int reach = static_cast<int>(std::floor(robot_radius / resolution_ + 1e-9));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (std::hypot(dx, dy) * resolution_ <= robot_radius + 1e-12) offsets.emplace_back(dx, dy);
    }
  }
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!grid.is_static({x, y})) continue;
      for (const auto& [dx, dy] : offsets) {
        const CellIndex c{x + dx, y + dy};
        if (in_bounds(c)) mask_[index(c)] = 1;
      }
    }
  }
}

CellIndex InflatedGrid::cell_of(const GridPosition& p) const {
  CellIndex c{static_cast<int>(std::floor(p.x / resolution_)), static_cast<int>(std::floor(p.y / resolution_))};
  if (c.x == width_ && p.x <= width_ * resolution_) c.x = width_ - 1;
  if (c.y == height_ && p.y <= height_ * resolution_) c.y = height_ - 1;
  return c;
}

GridPosition InflatedGrid::center_of(CellIndex c) const {
  return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_};
}

std::vector<std::uint8_t> InflatedGrid::with_obstacles(std::span<const Ellipse> obstacles) const {
  auto mask = mask_;
  for (const auto& e : obstacles) {
    const double reach = std::max(e.semi_major, e.semi_minor) + robot_radius_;
    const auto lo = cell_of({e.center.x - reach, e.center.y - reach});
    const auto hi = cell_of({e.center.x + reach, e.center.y + reach});
    for (int y = std::max(0, lo.y); y <= std::min(height_ - 1, hi.y); ++y) {
      for (int x = std::max(0, lo.x); x <= std::min(width_ - 1, hi.x); ++x) {
        if (e.contains(center_of({x, y}), robot_radius_)) mask[index({x, y})] = 1;
      }
    }
  }
  return mask;
}

std::optional<Trajectory> plan_path(const InflatedGrid& grid, const PlanRequest& request) {
  const double w = grid.width() * grid.resolution();
  const double h = grid.height() * grid.resolution();
  for (const auto& p : {request.start, request.goal}) {
    if (p.x < 0.0 || p.y < 0.0 || p.x > w || p.y > h) throw Error("endpoint outside map");
  }
  const auto blocked = grid.with_obstacles(request.temporary_obstacles);
  const CellIndex start = grid.cell_of(request.start);
  const CellIndex goal = grid.cell_of(request.goal);
  if (blocked[grid.index(start)] || blocked[grid.index(goal)]) throw Error("endpoint blocked");

  if (start == goal) {
    const auto c = grid.center_of(start);
    const std::array<GridPosition, 2> pts{c, c};
    return Trajectory::from_positions(pts);
  }

  const std::size_t n = static_cast<std::size_t>(grid.width()) * grid.height();
  constexpr std::int64_t kUnset = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> g(n, kUnset);
  std::vector<std::int32_t> parent(n, -1);
  std::vector<std::int8_t> in_dir(n, -1);
  std::vector<std::int8_t> turns(n, 0);
  std::vector<std::uint8_t> closed(n, 0);

  struct Entry {
    std::int64_t f;
    std::int64_t h;
    int turn;
    std::int32_t cell;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    if (a.turn != b.turn) return a.turn > b.turn;
    return a.cell > b.cell;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  const auto s = static_cast<std::int32_t>(grid.index(start));
  const auto goal_idx = static_cast<std::int32_t>(grid.index(goal));
  g[s] = 0;
  open.push({octile(start, goal), octile(start, goal), 0, s});

  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.cell]) continue;
    closed[e.cell] = 1;
    if (e.cell == goal_idx) break;
    const CellIndex cur{e.cell % grid.width(), e.cell / grid.width()};
    for (int dir = 0; dir < 8; ++dir) {
      if (!can_move(grid, blocked, cur, dir)) continue;
      const CellIndex nxt{cur.x + kDx[dir], cur.y + kDy[dir]};
      const auto ni = static_cast<std::int32_t>(grid.index(nxt));
      if (closed[ni]) continue;
      const std::int64_t ng = g[e.cell] + move_cost(dir);
      const int nturn = turn_steps(in_dir[e.cell], dir);
      if (ng < g[ni] || (ng == g[ni] && nturn < turns[ni])) {
        g[ni] = ng;
        parent[ni] = e.cell;
        in_dir[ni] = static_cast<std::int8_t>(dir);
        turns[ni] = static_cast<std::int8_t>(nturn);
        const std::int64_t hn = octile(nxt, goal);
        open.push({ng + hn, hn, nturn, ni});
      }
    }
  }
  if (g[goal_idx] == kUnset) return std::nullopt;

  std::vector<GridPosition> pts;
  for (std::int32_t c = goal_idx; c != -1; c = parent[c]) {
    pts.push_back(grid.center_of({c % grid.width(), c / grid.width()}));
  }
  std::reverse(pts.begin(), pts.end());
  return Trajectory::from_positions(pts);
}

std::optional<Trajectory> plan_path(const OccupancyGrid& grid, const PlanRequest& request, double robot_radius) {
  return plan_path(InflatedGrid(grid, robot_radius), request);
}

std::int64_t path_cost(const Trajectory& trajectory, double resolution) {
  std::int64_t cost = 0;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const double step = distance(trajectory.waypoints[i].position, trajectory.waypoints[i + 1].position);
    if (step < 0.5 * resolution) continue;
    cost += step > 1.2 * resolution ? kDiagonalCost : kStraightCost;
  }
  return cost;
}

std::vector<double> distance_field(const InflatedGrid& grid, std::span<const std::uint8_t> blocked,
                                   CellIndex source) {
  const std::size_t n = static_cast<std::size_t>(grid.width()) * grid.height();
  constexpr std::int64_t kUnset = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> g(n, kUnset);
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  if (!grid.in_bounds(source) || blocked[grid.index(source)]) return out;

  using Item = std::pair<std::int64_t, std::int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const auto s = static_cast<std::int32_t>(grid.index(source));
  g[s] = 0;
  open.push({0, s});
  while (!open.empty()) {
    const auto [d, c] = open.top();
    open.pop();
    if (d != g[c]) continue;
    const CellIndex cur{c % grid.width(), c / grid.width()};
    for (int dir = 0; dir < 8; ++dir) {
      if (!can_move(grid, blocked, cur, dir)) continue;
      const auto ni = static_cast<std::int32_t>(grid.index({cur.x + kDx[dir], cur.y + kDy[dir]}));
      const std::int64_t nd = d + move_cost(dir);
      if (nd < g[ni]) {
        g[ni] = nd;
        open.push({nd, ni});
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] != kUnset) out[i] = static_cast<double>(g[i]) / kCostScale * grid.resolution();
  }
  return out;
}

std::optional<CellIndex> nearest_free_cell(const InflatedGrid& grid, std::span<const std::uint8_t> blocked,
                                           const GridPosition& p, int max_cells) {
  const CellIndex origin = grid.cell_of(p);
  std::optional<CellIndex> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int ring = 0; ring <= max_cells; ++ring) {
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const CellIndex c{origin.x + dx, origin.y + dy};
        if (!grid.in_bounds(c) || blocked[grid.index(c)]) continue;
        const double d = distance(grid.center_of(c), p);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
    }
    // Any cell in a later ring is at least (ring) cells away.
    if (best && best_d <= ring * grid.resolution()) break;
  }
  return best;
}

namespace {

bool segment_free(const InflatedGrid& grid, std::span<const std::uint8_t> blocked, const GridPosition& a,
                  const GridPosition& b) {
  // Supercover traversal: every cell the segment touches, both sides at exact corner crossings.
  const auto bad = [&](CellIndex c) { return !grid.in_bounds(c) || blocked[grid.index(c)]; };
  const double res = grid.resolution();
  CellIndex c = grid.cell_of(a);
  const CellIndex end = grid.cell_of(b);
  if (bad(c)) return false;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int sx = dx > 0 ? 1 : -1;
  const int sy = dy > 0 ? 1 : -1;
  constexpr double kNever = std::numeric_limits<double>::infinity();
  const double step_x = dx != 0.0 ? res / std::abs(dx) : kNever;
  const double step_y = dy != 0.0 ? res / std::abs(dy) : kNever;
  double next_x = dx != 0.0 ? ((c.x + (sx > 0 ? 1 : 0)) * res - a.x) / dx : kNever;
  double next_y = dy != 0.0 ? ((c.y + (sy > 0 ? 1 : 0)) * res - a.y) / dy : kNever;
  const int budget = std::abs(end.x - c.x) + std::abs(end.y - c.y);
  for (int k = 0; k < budget && !(c.x == end.x && c.y == end.y); ++k) {
    const double gap = next_x - next_y;
    if (std::isfinite(gap) && std::abs(gap) <= 1e-9 * std::max(1.0, std::abs(next_x))) {
      if (bad({c.x + sx, c.y}) || bad({c.x, c.y + sy})) return false;
      c = {c.x + sx, c.y + sy};
      next_x += step_x;
      next_y += step_y;
      ++k;
    } else if (gap < 0.0) {
      c.x += sx;
      next_x += step_x;
    } else {
      c.y += sy;
      next_y += step_y;
    }
    if (bad(c)) return false;
  }
  return !bad(end);
}

}  // namespace

Trajectory shortcut_path(const InflatedGrid& grid, std::span<const std::uint8_t> blocked, const Trajectory& path,
                         double spacing, std::size_t keep_prefix) {
  if (!(spacing > 0.0)) throw Error("spacing must be > 0");
  const auto& w = path.waypoints;
  if (w.size() < 3) return path;
  keep_prefix = std::min(keep_prefix, w.size() - 1);
  std::vector<GridPosition> corners;
  for (std::size_t i = 0; i < keep_prefix; ++i) corners.push_back(w[i].position);
  std::size_t i = keep_prefix;
  corners.push_back(w[i].position);
  while (i + 1 < w.size()) {
    std::size_t j = i + 1;
    while (j + 1 < w.size() && segment_free(grid, blocked, w[i].position, w[j + 1].position)) ++j;
    corners.push_back(w[j].position);
    i = j;
  }
  std::vector<GridPosition> pts{corners.front()};
  for (std::size_t k = 1; k < corners.size(); ++k) {
    const GridPosition a = corners[k - 1];
    const GridPosition b = corners[k];
    const double len = distance(a, b);
    const int n = k <= keep_prefix ? 1 : std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
    for (int s = 1; s <= n; ++s) {
      const double t = static_cast<double>(s) / n;
      pts.push_back(s == n ? b : GridPosition{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return Trajectory::from_positions(pts);
}

}  // namespace namo
