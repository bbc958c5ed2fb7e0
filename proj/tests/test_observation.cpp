#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

#include "namo/angle.hpp"
#include "namo/error.hpp"
#include "namo/observation.hpp"
#include "support.hpp"

namespace namo {
namespace {

RangeBearingMeasurement meas(double d, double phi, Eigen::Matrix2d cov = Eigen::Matrix2d::Zero()) {
  RangeBearingMeasurement m;
  m.range = d;
  m.bearing = phi;
  m.covariance = cov;
  return m;
}

PoseBelief belief(Eigen::Vector2d mean, Eigen::Matrix2d cov) {
  PoseBelief b;
  b.mean = mean;
  b.covariance = cov;
  b.observation_count = 1;
  return b;
}

Eigen::Vector2d project(const Eigen::Vector3d& r, double d, double phi) {
  const double a = wrap_angle(r(2) + phi);
  return {r(0) + d * std::cos(a), r(1) + d * std::sin(a)};
}

TEST(Observation, NoiselessIdentity) {
  RobotPoseBelief r;
  const auto b = project_measurement(r, meas(1.0, 0.0));
  EXPECT_NEAR(b.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(b.mean(1), 0.0, 1e-15);
  EXPECT_EQ(b.covariance, Eigen::Matrix2d::Zero());
}

TEST(Observation, MeasurementOnlyCovariance) {
  RobotPoseBelief r;
  const auto b = project_measurement(r, meas(2.0, std::numbers::pi / 2.0, Eigen::Vector2d(0.01, 0.01).asDiagonal()));
  EXPECT_NEAR(b.mean(0), 0.0, 1e-12);
  EXPECT_NEAR(b.mean(1), 2.0, 1e-12);
  EXPECT_NEAR(b.covariance(0, 0), 0.04, 1e-12);
  EXPECT_NEAR(b.covariance(1, 1), 0.01, 1e-12);
  EXPECT_NEAR(b.covariance(0, 1), 0.0, 1e-12);
}

TEST(Observation, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    RobotPoseBelief r;
    r.mean = Eigen::Vector3d(5.0 * u(rng), 5.0 * u(rng), std::numbers::pi * u(rng));
    const double d = 0.5 + 4.5 * (0.5 + 0.5 * u(rng));
    const double phi = 0.8 * u(rng);
    const auto j = projection_jacobians(r, meas(d, phi));
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(k) = h;
      const Eigen::Vector2d fd = (project(r.mean + e, d, phi) - project(r.mean - e, d, phi)) / (2.0 * h);
      EXPECT_LE((fd - j.robot.col(k)).cwiseAbs().maxCoeff(), 1e-6);
    }
    const Eigen::Vector2d fd_d = (project(r.mean, d + h, phi) - project(r.mean, d - h, phi)) / (2.0 * h);
    const Eigen::Vector2d fd_phi = (project(r.mean, d, phi + h) - project(r.mean, d, phi - h)) / (2.0 * h);
    EXPECT_LE((fd_d - j.measurement.col(0)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE((fd_phi - j.measurement.col(1)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Observation, CovarianceMatchesMonteCarlo) {
  RobotPoseBelief r;
  r.mean = Eigen::Vector3d(1.0, 2.0, 0.7);
  r.covariance = Eigen::Vector3d(0.05 * 0.05, 0.04 * 0.04, 0.05 * 0.05).asDiagonal();
  const auto m = meas(2.0, 0.3, Eigen::Vector2d(0.05 * 0.05, 0.03 * 0.03).asDiagonal());
  const auto b = project_measurement(r, m);

  std::mt19937_64 rng(43);
  std::normal_distribution<double> n01;
  const Eigen::Matrix3d lr = r.covariance.llt().matrixL();
  const Eigen::Matrix2d lm = m.covariance.llt().matrixL();
  const int n = 1'000'000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sq = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d er = lr * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
    const Eigen::Vector2d em = lm * Eigen::Vector2d(n01(rng), n01(rng));
    const Eigen::Vector2d p = project(r.mean + er, m.range + em(0), m.bearing + em(1));
    sum += p;
    sq += p * p.transpose();
  }
  const Eigen::Vector2d mean = sum / n;
  const Eigen::Matrix2d cov = (sq - n * mean * mean.transpose()) / (n - 1);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(b.covariance(i, k), cov(i, k), 0.05 * std::abs(cov(i, k)));
}

TEST(Observation, InvalidCovarianceThrows) {
  RobotPoseBelief r;
  Eigen::Matrix2d asym;
  asym << 0.1, 0.05, 0.0, 0.1;
  EXPECT_THROW(project_measurement(r, meas(1.0, 0.0, asym)), Error);
  EXPECT_THROW(project_measurement(r, meas(1.0, 0.0, Eigen::Vector2d(-0.1, 0.1).asDiagonal())), Error);
}

TEST(Observation, FuseBalanced) {
  const Eigen::Matrix2d c = 0.04 * Eigen::Matrix2d::Identity();
  const auto f = fuse(belief({1.0, 2.0}, c), belief({1.0, 2.0}, c));
  EXPECT_NEAR((f.mean - Eigen::Vector2d(1.0, 2.0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((f.covariance - 0.02 * Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-12);
  EXPECT_EQ(f.observation_count, 2);
}

TEST(Observation, FuseUninformativePrior) {
  Eigen::Matrix2d tight;
  tight << 0.02, 0.005, 0.005, 0.01;
  const auto obs = belief({3.0, -1.0}, tight);
  const auto f = fuse(belief({0.0, 0.0}, 1e6 * Eigen::Matrix2d::Identity()), obs);
  EXPECT_NEAR(f.mean(0), 3.0, 1e-3);
  EXPECT_NEAR(f.mean(1), -1.0, 1e-3);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(f.covariance(i, k), tight(i, k), 1e-3 * std::abs(tight(i, k)));
}

TEST(Observation, SequentialFusionAverages) {
  const double s2 = 0.09;
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n01;
  auto acc = belief({n01(rng), n01(rng)}, s2 * Eigen::Matrix2d::Identity());
  Eigen::Vector2d sum = acc.mean;
  for (int n = 2; n <= 20; ++n) {
    const Eigen::Vector2d m(n01(rng), n01(rng));
    sum += m;
    acc = fuse(acc, belief(m, s2 * Eigen::Matrix2d::Identity()));
    EXPECT_NEAR((acc.covariance - s2 / n * Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-12);
    EXPECT_NEAR((acc.mean - sum / n).norm(), 0.0, 1e-12);
  }
}

TEST(Observation, EllipseIsotropic) {
  const double s = 0.2;
  const auto e = confidence_ellipse(belief({1.0, 1.0}, s * s * Eigen::Matrix2d::Identity()), 0.3, 0.95);
  const double q = -2.0 * std::log(0.05);
  EXPECT_NEAR(q, 5.991, 1e-3);
  EXPECT_NEAR(e.semi_major, s * std::sqrt(q) + 0.3, 1e-12);
  EXPECT_NEAR(e.semi_minor, s * std::sqrt(q) + 0.3, 1e-12);
}

TEST(Observation, EllipseDegenerate) {
  const auto e = confidence_ellipse(belief({0.0, 0.0}, Eigen::Matrix2d::Zero()), 0.3, 0.95);
  EXPECT_DOUBLE_EQ(e.semi_major, 0.3);
  EXPECT_DOUBLE_EQ(e.semi_minor, 0.3);
}

TEST(Observation, EllipseDiagonal) {
  const auto e = confidence_ellipse(belief({0.0, 0.0}, Eigen::Vector2d(0.04, 0.01).asDiagonal()), 0.3, 0.95);
  const double q = chi2_2dof_quantile(0.95);
  EXPECT_NEAR(e.semi_major, 0.2 * std::sqrt(q) + 0.3, 1e-12);
  EXPECT_NEAR(e.semi_minor, 0.1 * std::sqrt(q) + 0.3, 1e-12);
  EXPECT_NEAR(std::abs(std::cos(e.orientation)), 1.0, 1e-12);
}

TEST(Observation, EllipseMassMatchesConfidence) {
  // The ellipse without the radius term must hold `confidence` of the Gaussian mass.
  Eigen::Matrix2d c;
  c << 0.05, 0.02, 0.02, 0.03;
  const auto e = confidence_ellipse(belief({0.0, 0.0}, c), 0.0, 0.9);
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n01;
  const Eigen::Matrix2d l = c.llt().matrixL();
  int inside = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d p = l * Eigen::Vector2d(n01(rng), n01(rng));
    inside += e.contains({p(0), p(1)}) ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(inside) / n, 0.9, 0.005);
}

TEST(Observation, PathBlockedCases) {
  const auto path = test::polyline({{0.0, 1.0}, {2.5, 1.0}, {5.0, 1.0}, {7.5, 1.0}, {10.0, 1.0}});
  MovableObstacle far{7, belief({5.0, 4.0}, 0.01 * Eigen::Matrix2d::Identity()), 0.3};
  std::vector<MovableObstacle> mos{far};
  EXPECT_FALSE(path_blocked(path, mos, 0.3));
  mos.push_back({9, belief({7.5, 1.0}, 0.01 * Eigen::Matrix2d::Identity()), 0.3});
  EXPECT_EQ(path_blocked(path, mos, 0.3), 9);
  const auto b = first_blockage(path, mos, 0.3);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->waypoint_index, 3u);
}

TEST(Observation, PathBlockedGrazingBoundary) {
  const auto path = test::polyline({{4.0, 1.0}, {5.0, 1.0}, {6.0, 1.0}});
  // Zero covariance: ellipse radius 0.25, grown by robot radius 0.25, touches (5, 1) exactly.
  std::vector<MovableObstacle> touching{{1, belief({5.0, 1.5}, Eigen::Matrix2d::Zero()), 0.25}};
  EXPECT_EQ(path_blocked(path, touching, 0.25), 1);
  std::vector<MovableObstacle> clear{{1, belief({5.0, 1.5 + 1e-6}, Eigen::Matrix2d::Zero()), 0.25}};
  EXPECT_FALSE(path_blocked(path, clear, 0.25));
}

}  // namespace
}  // namespace namo
