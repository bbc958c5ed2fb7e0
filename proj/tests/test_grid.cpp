#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "namo/error.hpp"
#include "namo/grid.hpp"
#include "support.hpp"

namespace namo {
namespace {

using test::corridor;

TEST(Grid, WidthAtCorridorCenter) {
  const auto g = corridor(10.0, 2.0, 0.05);
  EXPECT_NEAR(raycast_width(g, {5.0, 1.5}, 0.0), 2.0, 0.05);
}

TEST(Grid, WidthInOpenRoomBoundedBySpan) {
  OccupancyGrid g(200, 200, 0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 20; ++i) {
    const double w = raycast_width(g, {5.0, 5.0}, heading(rng));
    EXPECT_GE(w, 2.0);
    EXPECT_LE(w, std::hypot(10.0, 10.0) + 1e-9);
  }
}

TEST(Grid, WidthMatchesScanlineCount) {
  const auto g = corridor(6.0, 1.2, 0.05);
  const auto c = g.cell_of({3.0, 1.1});
  int free = 0;
  for (int y = 0; y < g.height(); ++y) free += g.is_static({c.x, y}) ? 0 : 1;
  const double scan = free * g.resolution();
  EXPECT_NEAR(raycast_width(g, {3.0, 1.1}, 0.0), scan, 1e-9);
  EXPECT_NEAR(scan, 1.2, 0.05);
}

TEST(Grid, WidthQueryInsideObstacleThrows) {
  const auto g = corridor(4.0, 1.0, 0.05);
  EXPECT_THROW(raycast_width(g, {2.0, 0.1}, 0.0), Error);
}

TEST(Grid, FreeAreaCountsCells) {
  OccupancyGrid g(10, 10, 1.0);
  EXPECT_DOUBLE_EQ(free_area(g), 100.0);
  for (int i = 0; i < 30; ++i) g.set({i % 10, i / 10}, CellState::StaticObstacle);
  EXPECT_DOUBLE_EQ(free_area(g), 70.0);
}

TEST(Grid, WarehouseFreeAreaMatchesFileCount) {
  const auto path = test::data_path("maps/warehouse.map");
  std::ifstream in(path);
  std::string line;
  double res = 0.0;
  std::size_t dots = 0;
  for (int i = 0; i < 3 && std::getline(in, line); ++i) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "resolution") ss >> res;
  }
  while (std::getline(in, line))
    for (char ch : line) dots += ch == '.' ? 1 : 0;
  const auto g = load_map(path);
  EXPECT_DOUBLE_EQ(free_area(g), static_cast<double>(dots) * res * res);
  EXPECT_DOUBLE_EQ(free_area(g), free_area(load_map(path)));
}

TEST(Grid, MarkExploredOpenDisk) {
  OccupancyGrid g(200, 200, 0.05);
  const GridPosition o{5.0, 5.0};
  mark_explored(g, o, 0.0, 3.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      const double d = distance(g.center_of({x, y}), o);
      if (d < 2.9) { EXPECT_TRUE(g.is_explored({x, y})) << x << "," << y; }
      if (d > 3.0 + 0.1) { EXPECT_FALSE(g.is_explored({x, y})) << x << "," << y; }
    }
}

TEST(Grid, MarkExploredWallOccludes) {
  OccupancyGrid g(200, 200, 0.05);
  g.fill_rect({6.0, 0.0}, {6.05, 10.0}, CellState::StaticObstacle);
  mark_explored(g, {5.0, 5.0}, 0.0, 5.0, kDefaultFov);
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      if (g.center_of({x, y}).x > 6.1) { EXPECT_FALSE(g.is_explored({x, y})); }
  EXPECT_TRUE(g.is_explored(g.cell_of({5.5, 5.0})));
}

TEST(Grid, MarkExploredMonotoneAlongPath) {
  auto g = corridor(20.0, 2.0, 0.05);
  std::size_t last = 0;
  for (double x = 1.0; x < 19.0; x += 0.7) {
    mark_explored(g, {x, 1.5}, 0.0);
    EXPECT_GE(g.explored_count(), last);
    last = g.explored_count();
  }
  EXPECT_GT(last, 0u);
}

TEST(Grid, MarkExploredStaysInsideSealedRoom) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    OccupancyGrid g(120, 120, 0.05);
    const double x0 = 0.5 + 1.5 * u(rng);
    const double y0 = 0.5 + 1.5 * u(rng);
    const double x1 = x0 + 1.0 + 2.0 * u(rng);
    const double y1 = y0 + 1.0 + 2.0 * u(rng);
    g.fill_rect({x0, y0}, {x1, y0 + 0.1}, CellState::StaticObstacle);
    g.fill_rect({x0, y1 - 0.1}, {x1, y1}, CellState::StaticObstacle);
    g.fill_rect({x0, y0}, {x0 + 0.1, y1}, CellState::StaticObstacle);
    g.fill_rect({x1 - 0.1, y0}, {x1, y1}, CellState::StaticObstacle);
    const GridPosition o{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
    mark_explored(g, o, u(rng) * 6.0, 5.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) {
        const auto c = g.center_of({x, y});
        const bool outside = c.x < x0 || c.x > x1 || c.y < y0 || c.y > y1;
        if (outside) { ASSERT_FALSE(g.is_explored({x, y})) << "trial " << trial; }
      }
  }
}

TEST(Grid, ParseWriteRoundTrip) {
  const std::string text = "width 4\nheight 3\nresolution 0.5\n#..m\n....\n##..\n";
  std::istringstream in(text);
  const auto g = parse_map(in);
  EXPECT_EQ(g.width(), 4);
  EXPECT_EQ(g.height(), 3);
  EXPECT_EQ(g.at({0, 2}), CellState::StaticObstacle);
  EXPECT_EQ(g.at({3, 2}), CellState::MovableObstacleMark);
  EXPECT_EQ(g.at({1, 0}), CellState::StaticObstacle);
  std::ostringstream out;
  write_map(out, g);
  EXPECT_EQ(out.str(), text);
}

TEST(Grid, ParseRejectsMalformed) {
  std::istringstream bad_char("width 2\nheight 1\nresolution 1\n.x\n");
  EXPECT_THROW(parse_map(bad_char), Error);
  std::istringstream short_row("width 3\nheight 1\nresolution 1\n..\n");
  EXPECT_THROW(parse_map(short_row), Error);
  EXPECT_THROW(load_map("/nonexistent/map.map"), Error);
}

TEST(Grid, EdgePositionsMapToLastCell) {
  OccupancyGrid g(10, 5, 0.1);
  EXPECT_EQ(g.cell_of({1.0, 0.5}), (CellIndex{9, 4}));
  EXPECT_EQ(g.cell_of({0.0, 0.0}), (CellIndex{0, 0}));
}

TEST(Grid, RayStopsAtBorder) {
  OccupancyGrid g(100, 100, 0.1);
  EXPECT_NEAR(ray_distance(g, {5.0, 5.0}, 0.0, 100.0), 5.0, 1e-9);
  EXPECT_NEAR(ray_distance(g, {5.0, 5.0}, 0.0, 2.0), 2.0, 1e-12);
}

}  // namespace
}  // namespace namo
