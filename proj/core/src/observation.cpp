#include "namo/observation.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "namo/angle.hpp"
#include "namo/error.hpp"

namespace namo {

bool is_valid_covariance(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

ProjectionJacobians projection_jacobians(const RobotPoseBelief& robot, const RangeBearingMeasurement& meas) {
  const double angle = wrap_angle(robot.mean(2) + meas.bearing);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double d = meas.range;
  ProjectionJacobians j;
  j.robot << 1.0, 0.0, -d * s,
             0.0, 1.0, d * c;
  j.measurement << c, -d * s,
                   s, d * c;
  return j;
}

PoseBelief project_measurement(const RobotPoseBelief& robot, const RangeBearingMeasurement& meas) {
  if (!is_valid_covariance(robot.covariance) || !is_valid_covariance(meas.covariance)) {
    throw Error("invalid covariance");
  }
  if (!(meas.range > 0.0)) throw Error("measurement range must be > 0");
  const double angle = wrap_angle(robot.mean(2) + meas.bearing);
  PoseBelief out;
  out.mean << robot.mean(0) + meas.range * std::cos(angle), robot.mean(1) + meas.range * std::sin(angle);
  const auto j = projection_jacobians(robot, meas);
  out.covariance = j.robot * robot.covariance * j.robot.transpose() +
                   j.measurement * meas.covariance * j.measurement.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.observation_count = 1;
  return out;
}

PoseBelief fuse(const PoseBelief& prior, const PoseBelief& obs) {
  const Eigen::Matrix2d sum = prior.covariance + obs.covariance;
  PoseBelief out;
  out.observation_count = prior.observation_count + obs.observation_count;

  const double tr_prior = prior.covariance.trace();
  const double tr_obs = obs.covariance.trace();
  if (tr_prior <= 1e-12 && tr_obs <= 1e-12) {
    if ((prior.mean - obs.mean).norm() > 1e-9) throw Error("inconsistent noiseless observations");
    out.mean = prior.mean;
    out.covariance = Eigen::Matrix2d::Zero();
    return out;
  }

  // Information-weighted form, symmetric in its two arguments:
  //   S = P (P+R)^-1 R,  m = R (P+R)^-1 m_p + P (P+R)^-1 m_o
  const Eigen::Matrix2d inv = sum.completeOrthogonalDecomposition().pseudoInverse();
  out.covariance = prior.covariance * inv * obs.covariance;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.mean = obs.covariance * inv * prior.mean + prior.covariance * inv * obs.mean;
  return out;
}

double chi2_2dof_quantile(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  return -2.0 * std::log1p(-confidence);
}

Ellipse confidence_ellipse(const PoseBelief& belief, double mo_radius, double confidence) {
  const double q = chi2_2dof_quantile(confidence);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(belief.covariance);
  const Eigen::Vector2d values = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const Eigen::Vector2d major = eig.eigenvectors().col(1);
  Ellipse e;
  e.center = {belief.mean(0), belief.mean(1)};
  e.semi_major = std::sqrt(values(1) * q) + mo_radius;
  e.semi_minor = std::sqrt(values(0) * q) + mo_radius;
  e.orientation = std::atan2(major(1), major(0));
  return e;
}

std::optional<Blockage> first_blockage(const Trajectory& trajectory, std::span<const MovableObstacle> obstacles,
                                       double robot_radius, double confidence) {
  std::vector<Ellipse> regions;
  regions.reserve(obstacles.size());
  for (const auto& mo : obstacles) regions.push_back(confidence_ellipse(mo.belief, mo.radius, confidence));
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      if (regions[k].contains(trajectory.waypoints[i].position, robot_radius)) {
        return Blockage{obstacles[k].id, i};
      }
    }
  }
  return std::nullopt;
}

std::optional<int> path_blocked(const Trajectory& trajectory, std::span<const MovableObstacle> obstacles,
                                double robot_radius, double confidence) {
  if (auto b = first_blockage(trajectory, obstacles, robot_radius, confidence)) return b->obstacle_id;
  return std::nullopt;
}

}  // namespace namo
