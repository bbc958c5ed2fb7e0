#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "namo/interval.hpp"
#include "namo/planner.hpp"

namespace namo {

/// Geometric trajectory descriptors used to predict navigation time.
struct TrajectoryFeatures {
  double length = 0.0;      // meters
  double smoothness = 0.0;  // mean |heading change|, radians
  double variance = 0.0;    // population variance of |heading change|, radians^2
};

/// Throws "degenerate trajectory" for fewer than two waypoints. Heading deltas
/// are wrapped to (-pi, pi] before taking absolute values.
TrajectoryFeatures extract_features(const Trajectory& trajectory);

struct TimingSample {
  TrajectoryFeatures features;
  double duration = 0.0;  // seconds
};
using TimingDataset = std::vector<TimingSample>;

inline constexpr double kDefaultPriorScale = 100.0;

struct TimePrediction {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Conjugate Bayesian linear regression on [1, z(F_l), z(F_s), z(F_v)], where
/// z() is the training z-score. The weight prior is N(0, noise_variance *
/// prior_scale * I), so the posterior mean is linear in the durations.
struct GlrModel {
  Eigen::Vector3d feature_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d feature_scale = Eigen::Vector3d::Ones();
  Eigen::Vector4d weight_mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d weight_covariance = Eigen::Matrix4d::Zero();
  double noise_variance = 1.0;
  double prior_scale = kDefaultPriorScale;

  Eigen::Vector4d design_row(const TrajectoryFeatures& f) const;
  TimePrediction predict(const TrajectoryFeatures& f) const;
};

/// prior_scale may be +inf (flat prior); a rank-deficient design then throws
/// "singular fit".
GlrModel fit(const TimingDataset& dataset, double prior_scale = kDefaultPriorScale);

/// Multiplier on the predictive standard deviation for a two-sided interval.
/// 0.95 maps to exactly 2 (the 2-sigma convention); other levels use the
/// normal quantile.
double interval_multiplier(double confidence);

/// [max(0, T - z sigma), T + z sigma].
CostInterval predict_interval(const GlrModel& model, const TrajectoryFeatures& features, double confidence = 0.95);

/// Predicts F_l / v, with v the mean of per-row F_l / duration.
class AverageSpeedPredictor {
 public:
  explicit AverageSpeedPredictor(double speed);
  double speed() const { return speed_; }
  double predict(const TrajectoryFeatures& f) const { return f.length / speed_; }

 private:
  double speed_;
};

/// Single accelerate-cruise-decelerate profile over the trajectory length.
class TrapezoidPredictor {
 public:
  TrapezoidPredictor(double v_max, double accel);
  double predict(const TrajectoryFeatures& f) const;

 private:
  double v_max_;
  double accel_;
};

AverageSpeedPredictor baseline_average_speed(const TimingDataset& dataset);
TrapezoidPredictor baseline_trapezoid(double v_max, double accel);

// CSV with header F_l,F_s,F_v,duration.
void write_dataset(std::ostream& out, const TimingDataset& dataset);
TimingDataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const TimingDataset& dataset);
TimingDataset load_dataset(const std::string& path);

// JSON text with the standardization, posterior and noise variance.
void write_model(std::ostream& out, const GlrModel& model);
GlrModel read_model(std::istream& in);
void save_model(const std::string& path, const GlrModel& model);
GlrModel load_model(const std::string& path);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace namo
