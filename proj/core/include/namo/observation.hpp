#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "namo/planner.hpp"

namespace namo {

inline constexpr double kDefaultConfidence = 0.95;

struct RobotPoseBelief {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // x, y, theta
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Range/bearing of one movable obstacle relative to the robot.
struct RangeBearingMeasurement {
  double range = 0.0;
  double bearing = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  int target_id = -1;
};

/// 2D position belief of a movable obstacle.
struct PoseBelief {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  int observation_count = 0;
};

struct MovableObstacle {
  int id = -1;
  PoseBelief belief;
  double radius = 0.0;
};

/// Jacobians of the obstacle position with respect to the robot pose (2x3)
/// and the measurement (2x2), evaluated at the means.
struct ProjectionJacobians {
  Eigen::Matrix<double, 2, 3> robot;
  Eigen::Matrix2d measurement;
};

ProjectionJacobians projection_jacobians(const RobotPoseBelief& robot, const RangeBearingMeasurement& meas);

/// Obstacle position from robot pose plus range/bearing, with first-order
/// covariance propagation J_r S_r J_r^T + J_y S_y J_y^T.
/// Throws "invalid covariance" for asymmetric or indefinite inputs.
PoseBelief project_measurement(const RobotPoseBelief& robot, const RangeBearingMeasurement& meas);

/// Static-state Kalman update (identity transition and observation model).
PoseBelief fuse(const PoseBelief& prior, const PoseBelief& obs);

/// Chi-square quantile with two degrees of freedom: -2 ln(1 - p).
double chi2_2dof_quantile(double confidence);

/// Belief region at `confidence`, each semi-axis grown by the obstacle radius.
Ellipse confidence_ellipse(const PoseBelief& belief, double mo_radius, double confidence = kDefaultConfidence);

/// First obstacle, in path order, whose confidence ellipse grown by
/// robot_radius contains a waypoint. Returns the obstacle id.
std::optional<int> path_blocked(const Trajectory& trajectory, std::span<const MovableObstacle> obstacles,
                                double robot_radius, double confidence = kDefaultConfidence);

/// Same test as path_blocked, also reporting the first blocked waypoint index.
struct Blockage {
  int obstacle_id;
  std::size_t waypoint_index;
};
std::optional<Blockage> first_blockage(const Trajectory& trajectory, std::span<const MovableObstacle> obstacles,
                                       double robot_radius, double confidence = kDefaultConfidence);

bool is_valid_covariance(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace namo
