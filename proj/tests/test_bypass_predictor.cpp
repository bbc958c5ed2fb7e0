#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "namo/bypass_predictor.hpp"
#include "namo/error.hpp"
#include "support.hpp"

namespace namo {
namespace {

using std::numbers::pi;

TimingDataset linear_dataset(std::mt19937_64& rng, int n, double noise) {
  std::uniform_real_distribution<double> len(1.0, 15.0);
  std::uniform_real_distribution<double> turn(0.0, 1.0);
  std::normal_distribution<double> eps(0.0, noise);
  TimingDataset out;
  for (int i = 0; i < n; ++i) {
    TimingSample s;
    s.features = {len(rng), turn(rng), 0.3 * turn(rng)};
    s.duration = 2.0 * s.features.length + eps(rng);
    out.push_back(s);
  }
  return out;
}

TEST(Features, StraightPath) {
  const auto f = extract_features(test::polyline({{0, 0}, {2.5, 0}, {5, 0}, {7.5, 0}, {10, 0}}));
  EXPECT_DOUBLE_EQ(f.length, 10.0);
  EXPECT_DOUBLE_EQ(f.smoothness, 0.0);
  EXPECT_DOUBLE_EQ(f.variance, 0.0);
}

TEST(Features, SquareWave) {
  const auto f = extract_features(test::polyline({{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 0}}));
  EXPECT_NEAR(f.smoothness, pi / 2.0, 1e-12);
  EXPECT_NEAR(f.variance, 0.0, 1e-12);
}

TEST(Features, MixedDeltas) {
  const auto f = extract_features(test::polyline({{0, 0}, {1, 0}, {2, 0}, {2, 1}}));
  EXPECT_NEAR(f.smoothness, pi / 4.0, 1e-12);
  EXPECT_NEAR(f.variance, (pi / 4.0) * (pi / 4.0), 1e-12);
}

TEST(Features, DegenerateThrows) {
  EXPECT_THROW(extract_features(test::polyline({{0, 0}})), Error);
}

TEST(Features, RigidMotionInvariance) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GridPosition> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({u(rng), u(rng)});
    const double a = u(rng);
    const double tx = 10.0 * u(rng);
    const double ty = 10.0 * u(rng);
    std::vector<GridPosition> moved;
    for (const auto& p : pts)
      moved.push_back({std::cos(a) * p.x - std::sin(a) * p.y + tx, std::sin(a) * p.x + std::cos(a) * p.y + ty});
    const auto f = extract_features(Trajectory::from_positions(pts));
    const auto g = extract_features(Trajectory::from_positions(moved));
    EXPECT_NEAR(f.length, g.length, 1e-9);
    EXPECT_NEAR(f.smoothness, g.smoothness, 1e-9);
    EXPECT_NEAR(f.variance, g.variance, 1e-9);
  }
}

TEST(Glr, RecoversLengthWeight) {
  std::mt19937_64 rng(67);
  const auto data = linear_dataset(rng, 1000, 0.1);
  const auto m = fit(data);
  const double raw_weight = m.weight_mean(1) / m.feature_scale(0);
  EXPECT_GE(raw_weight, 1.9);
  EXPECT_LE(raw_weight, 2.1);
}

TEST(Glr, ConstantColumnIsRegularized) {
  std::mt19937_64 rng(71);
  auto data = linear_dataset(rng, 200, 0.1);
  for (auto& s : data) s.features.variance = 0.0;
  const auto m = fit(data);
  EXPECT_TRUE(m.weight_mean.allFinite());
  EXPECT_TRUE(std::isfinite(m.predict({5.0, 0.5, 0.0}).mean));
  EXPECT_THROW(fit(data, kInf), Error);
}

TEST(Glr, PosteriorMeanIsLinearInDurations) {
  std::mt19937_64 rng(73);
  auto data = linear_dataset(rng, 300, 0.5);
  const auto m1 = fit(data);
  for (auto& s : data) s.duration *= 2.0;
  const auto m2 = fit(data);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 50; ++i) {
    const TrajectoryFeatures q{u(rng), u(rng) / 10.0, u(rng) / 40.0};
    EXPECT_NEAR(m2.predict(q).mean, 2.0 * m1.predict(q).mean, 1e-9 * std::max(1.0, std::abs(m1.predict(q).mean)));
  }
}

TEST(Glr, BiasOnlyIntervalCentered) {
  GlrModel m;
  m.weight_mean << 12.0, 0.0, 0.0, 0.0;
  m.weight_covariance = 0.01 * Eigen::Matrix4d::Identity();
  m.noise_variance = 0.25;
  const auto c = predict_interval(m, {0.0, 0.0, 0.0});
  EXPECT_NEAR(c.midpoint(), 12.0, 1e-12);
  EXPECT_GT(c.width(), 0.0);
}

TEST(Glr, VarianceAtCentroidAtLeastNoise) {
  std::mt19937_64 rng(79);
  const auto m = fit(linear_dataset(rng, 500, 0.3));
  const TrajectoryFeatures centroid{m.feature_mean(0), m.feature_mean(1), m.feature_mean(2)};
  const auto p = m.predict(centroid);
  EXPECT_GE(p.stddev * p.stddev, m.noise_variance);
}

TEST(Glr, VarianceGrowsAwayFromCentroid) {
  std::mt19937_64 rng(83);
  const auto m = fit(linear_dataset(rng, 500, 0.3));
  std::normal_distribution<double> n01;
  for (int dir = 0; dir < 20; ++dir) {
    const Eigen::Vector3d v(n01(rng), n01(rng), n01(rng));
    double last = 0.0;
    for (double t = 0.0; t <= 5.0; t += 0.25) {
      const Eigen::Vector3d q = m.feature_mean + t * v.cwiseProduct(m.feature_scale);
      const double s = m.predict({q(0), q(1), q(2)}).stddev;
      EXPECT_GE(s, last - 1e-12);
      last = s;
    }
  }
}

TEST(Glr, IntervalCoverage) {
  std::mt19937_64 rng(89);
  const auto m = fit(linear_dataset(rng, 1500, 1.0));
  const auto test = linear_dataset(rng, 2000, 1.0);
  int inside = 0;
  for (const auto& s : test) {
    const auto c = predict_interval(m, s.features, 0.95);
    inside += (s.duration >= c.lo() && s.duration <= c.hi()) ? 1 : 0;
  }
  EXPECT_NEAR(inside / 2000.0, 0.95, 0.03);
}

TEST(Glr, IntervalMultiplier) {
  EXPECT_DOUBLE_EQ(interval_multiplier(0.95), 2.0);
  EXPECT_NEAR(interval_multiplier(0.9), 1.6448536269514722, 1e-9);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
  EXPECT_THROW(interval_multiplier(1.0), Error);
}

TEST(Glr, TooFewRowsThrows) {
  TimingDataset d(4, TimingSample{{1.0, 0.0, 0.0}, 2.0});
  EXPECT_THROW(fit(d), Error);
}

TEST(Baselines, AverageSpeedExact) {
  TimingDataset d;
  for (double l : {1.0, 3.0, 7.0, 11.0}) d.push_back({{l, 0.2, 0.01}, l / 0.5});
  const auto p = baseline_average_speed(d);
  EXPECT_DOUBLE_EQ(p.speed(), 0.5);
  EXPECT_DOUBLE_EQ(p.predict({8.0, 0.0, 0.0}), 16.0);
}

TEST(Baselines, TrapezoidProfiles) {
  const auto p = baseline_trapezoid(0.5, 0.25);
  // Cruise reached: ramp distance 0.5^2/0.25 = 1.0 m.
  EXPECT_DOUBLE_EQ(p.predict({10.0, 0.0, 0.0}), 10.0 / 0.5 + 0.5 / 0.25);
  // Triangular profile.
  EXPECT_DOUBLE_EQ(p.predict({0.64, 0.0, 0.0}), 2.0 * std::sqrt(0.64 / 0.25));
  // Both branches agree at the ramp distance.
  EXPECT_NEAR(p.predict({1.0, 0.0, 0.0}), 2.0 * std::sqrt(1.0 / 0.25), 1e-12);
}

TEST(Serialization, ModelRoundTrip) {
  std::mt19937_64 rng(97);
  const auto m = fit(linear_dataset(rng, 100, 0.2));
  std::stringstream ss;
  write_model(ss, m);
  const auto r = read_model(ss);
  EXPECT_TRUE(r.weight_mean.isApprox(m.weight_mean, 1e-12));
  EXPECT_TRUE(r.weight_covariance.isApprox(m.weight_covariance, 1e-12));
  EXPECT_DOUBLE_EQ(r.noise_variance, m.noise_variance);
  std::istringstream bad("{\"kind\": 1}");
  EXPECT_THROW(read_model(bad), Error);
}

TEST(Serialization, DatasetRoundTrip) {
  std::mt19937_64 rng(101);
  const auto d = linear_dataset(rng, 20, 0.2);
  std::stringstream ss;
  write_dataset(ss, d);
  const auto r = read_dataset(ss);
  ASSERT_EQ(r.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_DOUBLE_EQ(r[i].duration, d[i].duration);
  std::istringstream bad("a,b\n");
  EXPECT_THROW(read_dataset(bad), Error);
}

TEST(Serialization, CommittedModelLoads) {
  const auto m = load_model(test::data_path("models/warehouse_glr.json"));
  const auto p = m.predict({10.0, 0.1, 0.01});
  EXPECT_GT(p.mean, 0.0);
  EXPECT_GT(p.stddev, 0.0);
}

}  // namespace
}  // namespace namo
