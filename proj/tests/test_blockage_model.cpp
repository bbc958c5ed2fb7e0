#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "namo/blockage_model.hpp"
#include "namo/error.hpp"
#include "support.hpp"

namespace namo {
namespace {

// Fraction of uniform placements d ~ U(l/2, W - l/2) whose wider side gap is narrower than 2r.
double placement_oracle(double l, double w, double r, int n, std::uint64_t seed) {
  if (l >= w) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.5 * l, w - 0.5 * l);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double c = d(rng);
    hits += std::max(c - 0.5 * l, w - c - 0.5 * l) < 2.0 * r ? 1 : 0;
  }
  return static_cast<double>(hits) / n;
}

// Trapezoid rule over mean +- 6 std of the diameter density, truncated at zero.
double quadrature_oracle(const ObstaclePopulation& pop, double w, double r, int points) {
  const double lo = std::max(0.0, pop.mean_diameter - 6.0 * pop.std_diameter);
  const double hi = pop.mean_diameter + 6.0 * pop.std_diameter;
  const double h = (hi - lo) / (points - 1);
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < points; ++i) {
    const double l = lo + i * h;
    const double z = (l - pop.mean_diameter) / pop.std_diameter;
    const double wgt = (i == 0 || i == points - 1 ? 0.5 : 1.0) * std::exp(-0.5 * z * z);
    num += wgt * blockage_given_size(l, w, r);
    den += wgt;
  }
  return num / den;
}

TEST(BlockageGivenSize, Branches) {
  EXPECT_DOUBLE_EQ(blockage_given_size(0.5, 2.0, 0.3), 0.0);
  EXPECT_NEAR(blockage_given_size(1.0, 2.0, 0.3), 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(blockage_given_size(1.6, 2.0, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(blockage_given_size(2.5, 2.0, 0.3), 0.0);
}

TEST(BlockageGivenSize, MiddleBranchMatchesPlacement) {
  EXPECT_NEAR(placement_oracle(1.0, 2.0, 0.3, 1'000'000, 137), 0.2, 0.005);
}

TEST(BlockageGivenSize, BoundaryTiesTakeLowerBranch) {
  EXPECT_DOUBLE_EQ(blockage_given_size(1.0, 2.0, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(blockage_given_size(2.0, 2.5, 0.25), 1.0);
}

TEST(BlockageAtWidth, PointMass) {
  ObstaclePopulation pop{1.0, 0.0, 0.5, 100.0};
  EXPECT_DOUBLE_EQ(blockage_at_width(pop, 2.0, 0.3), blockage_given_size(1.0, 2.0, 0.3));
}

TEST(BlockageAtWidth, HugeObstaclesNeverBlock) {
  ObstaclePopulation pop{3.0, 0.1, 0.5, 100.0};
  EXPECT_DOUBLE_EQ(blockage_at_width(pop, 2.0, 0.3), 0.0);
}

TEST(BlockageAtWidth, MatchesQuadrature) {
  ObstaclePopulation pop{1.0, 0.1, 0.5, 100.0};
  EXPECT_NEAR(blockage_at_width(pop, 2.0, 0.3), quadrature_oracle(pop, 2.0, 0.3, 100'000), 0.01);
}

TEST(BlockageAtWidth, RisesJustAboveMeanDiameter) {
  // Diameters just under the width always block, so the curve climbs before it falls.
  const ObstaclePopulation pop{1.0, 0.1, 0.5, 100.0};
  const double at_mean = quadrature_oracle(pop, 1.0, 0.3, 100'000);
  const double above = quadrature_oracle(pop, 1.2, 0.3, 100'000);
  EXPECT_NEAR(at_mean, 0.5, 0.01);
  EXPECT_GT(above, 0.95);
  EXPECT_NEAR(blockage_at_width(pop, 1.0, 0.3), at_mean, 0.01);
  EXPECT_NEAR(blockage_at_width(pop, 1.2, 0.3), above, 0.01);
  EXPECT_GT(blockage_at_width(pop, 1.3, 0.3), blockage_at_width(pop, 1.6, 0.3));
}

TEST(BlockageAtWidth, DeterministicInSeed) {
  ObstaclePopulation pop{0.8, 0.2, 0.5, 100.0};
  EXPECT_DOUBLE_EQ(blockage_at_width(pop, 1.5, 0.3, 5000, 9), blockage_at_width(pop, 1.5, 0.3, 5000, 9));
  EXPECT_THROW(blockage_at_width(pop, 1.5, 0.3, 999), Error);
}

TEST(Presence, Examples) {
  EXPECT_DOUBLE_EQ(waypoint_presence_probability({0.6, 0.1, 0.0, 50.0}, 3.0).value, 0.0);
  const auto p = waypoint_presence_probability({0.6, 0.1, 1.0, 100.0}, 2.0);
  EXPECT_DOUBLE_EQ(p.value, 0.02);
  EXPECT_FALSE(p.clamped);
  const auto c = waypoint_presence_probability({0.6, 0.1, 60.0, 100.0}, 2.0);
  EXPECT_DOUBLE_EQ(c.value, 1.0);
  EXPECT_TRUE(c.clamped);
}

TEST(Combine, ProductForm) {
  EXPECT_DOUBLE_EQ(combine_waypoint_risks({}), 0.0);
  const std::vector<WaypointRisk> one{{0, 1.0, 0.5, 0.3}};
  EXPECT_NEAR(combine_waypoint_risks(one), 0.15, 1e-15);
  const std::vector<WaypointRisk> two{{0, 1.0, 1.0, 0.1}, {1, 1.0, 0.5, 0.2}};
  EXPECT_NEAR(combine_waypoint_risks(two), 0.19, 1e-15);
}

TEST(TrajectoryBlockage, ExploredPathIsSafe) {
  auto g = test::corridor(10.0, 1.6, 0.05);
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) g.set_explored({x, y});
  const ObstaclePopulation pop{0.6, 0.1, 0.5, free_area(g)};
  EXPECT_DOUBLE_EQ(trajectory_blockage(pop, test::polyline({{1.0, 1.3}, {9.0, 1.3}}), g, 0.3), 0.0);
}

TEST(TrajectoryBlockage, SingleUnexploredWaypoint) {
  auto g = test::corridor(10.0, 1.6, 0.05);
  g.set_explored(g.cell_of({1.0, 1.3}));
  const ObstaclePopulation pop{0.6, 0.0, 0.5, free_area(g)};
  const auto path = test::polyline({{1.0, 1.3}, {5.0, 1.3}});
  const double w = raycast_width(g, {5.0, 1.3}, 0.0);
  EXPECT_NEAR(w, 1.6, 0.05);
  const double q = blockage_given_size(0.6, w, 0.3) * w * 0.5 / pop.free_area;
  EXPECT_NEAR(trajectory_blockage(pop, path, g, 0.3), q, 1e-15);
  const auto risks = waypoint_risks(pop, path, g, 0.3);
  ASSERT_EQ(risks.size(), 1u);
  EXPECT_EQ(risks[0].waypoint_index, 1u);
}

TEST(TrajectoryBlockage, SubsamplesAtMeanDiameter) {
  const auto g = test::corridor(10.0, 1.6, 0.05);
  const ObstaclePopulation pop{0.6, 0.1, 0.5, free_area(g)};
  std::vector<GridPosition> pts;
  for (int i = 0; i <= 160; ++i) pts.push_back({1.0 + 0.05 * i, 1.3});
  const auto risks = waypoint_risks(pop, Trajectory::from_positions(pts), g, 0.3);
  // 8 m of path at 0.6 m spacing, plus the first waypoint.
  EXPECT_GE(risks.size(), 12u);
  EXPECT_LE(risks.size(), 14u);
  for (std::size_t i = 1; i < risks.size(); ++i)
    EXPECT_GE(distance(pts[risks[i].waypoint_index], pts[risks[i - 1].waypoint_index]), 0.6 - 1e-9);
}

TEST(BlockageCost, Scaling) {
  EXPECT_EQ(blockage_cost(0.0, {15.0, 25.0}), CostInterval::zero());
  EXPECT_EQ(blockage_cost(1.0, {15.0, 25.0}), CostInterval(15.0, 25.0));
  const auto c = blockage_cost(0.19, {15.0, 25.0});
  EXPECT_NEAR(c.lo(), 2.85, 1e-12);
  EXPECT_NEAR(c.hi(), 4.75, 1e-12);
  EXPECT_EQ(blockage_cost(0.0, CostInterval::infinite()), CostInterval::zero());
  EXPECT_THROW(blockage_cost(1.1, {1.0, 2.0}), Error);
}

TEST(BlockageCost, RiskCsvHeader) {
  std::ostringstream out;
  write_risk_csv(out, std::vector<WaypointRisk>{{3, 1.5, 0.2, 0.01}});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "waypoint_index,width,p_block_given_here,p_here,product");
}

TEST(Population, Validation) {
  EXPECT_THROW((ObstaclePopulation{0.0, 0.1, 0.5, 1.0}.validate()), Error);
  EXPECT_THROW((ObstaclePopulation{0.6, -0.1, 0.5, 1.0}.validate()), Error);
  EXPECT_THROW((ObstaclePopulation{0.6, 0.1, 0.5, 0.0}.validate()), Error);
  EXPECT_NO_THROW((ObstaclePopulation{0.6, 0.1, 0.0, 1.0}.validate()));
}

}  // namespace
}  // namespace namo
