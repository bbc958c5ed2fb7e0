#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "namo/grid.hpp"
#include "namo/planner.hpp"

namespace namo::test {

inline std::string data_path(const std::string& rel) { return std::string(NAMO_DATA_DIR) + "/" + rel; }

/// Horizontal corridor of free width `width` (meters) along x, walls above and below.
inline OccupancyGrid corridor(double length, double width, double res, double wall = 0.5) {
  const int w = static_cast<int>(std::lround(length / res));
  const int h = static_cast<int>(std::lround((width + 2.0 * wall) / res));
  OccupancyGrid g(w, h, res);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double cy = (y + 0.5) * res;
      if (cy < wall || cy > wall + width) g.set({x, y}, CellState::StaticObstacle);
    }
  return g;
}

inline Trajectory polyline(std::vector<GridPosition> pts) { return Trajectory::from_positions(pts); }

/// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("namo_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

}  // namespace namo::test
