#include "namo/bypass_predictor.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include "namo/angle.hpp"
#include "namo/error.hpp"

namespace namo {

TrajectoryFeatures extract_features(const Trajectory& trajectory) {
  const auto& w = trajectory.waypoints;
  if (w.size() < 2) throw Error("degenerate trajectory");
  TrajectoryFeatures f;
  f.length = trajectory.total_length;
  // Deltas between consecutive segment headings; the final waypoint only
  // repeats its predecessor's heading and contributes nothing.
  const std::size_t segments = w.size() - 1;
  if (segments < 2) return f;
  std::vector<double> deltas;
  deltas.reserve(segments - 1);
  for (std::size_t i = 1; i < segments; ++i) deltas.push_back(std::abs(wrap_angle(w[i].heading - w[i - 1].heading)));
  double sum = 0.0;
  for (double d : deltas) sum += d;
  const auto n = static_cast<double>(deltas.size());
  f.smoothness = sum / n;
  double ss = 0.0;
  for (double d : deltas) ss += (d - f.smoothness) * (d - f.smoothness);
  f.variance = f.smoothness == 0.0 ? 0.0 : ss / n;
  return f;
}

Eigen::Vector4d GlrModel::design_row(const TrajectoryFeatures& f) const {
  Eigen::Vector3d raw(f.length, f.smoothness, f.variance);
  Eigen::Vector4d x;
  x(0) = 1.0;
  x.tail<3>() = (raw - feature_mean).cwiseQuotient(feature_scale);
  return x;
}

TimePrediction GlrModel::predict(const TrajectoryFeatures& f) const {
  const Eigen::Vector4d x = design_row(f);
  const double var = x.dot(weight_covariance * x) + noise_variance;
  return {weight_mean.dot(x), std::sqrt(std::max(var, 0.0))};
}

GlrModel fit(const TimingDataset& dataset, double prior_scale) {
  if (dataset.size() < 5) throw Error("too few rows");
  if (!(prior_scale > 0.0)) throw Error("prior scale must be > 0");
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd raw(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = dataset[static_cast<std::size_t>(i)];
    if (!(s.duration > 0.0)) throw Error("dataset durations must be > 0");
    raw.row(i) << s.features.length, s.features.smoothness, s.features.variance;
    y(i) = s.duration;
  }

  GlrModel m;
  m.prior_scale = prior_scale;
  m.feature_mean = raw.colwise().mean().transpose();
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt((raw.col(c).array() - m.feature_mean(c)).square().mean());
    m.feature_scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  Eigen::MatrixXd x(n, 4);
  x.col(0).setOnes();
  for (int c = 0; c < 3; ++c) {
    x.col(c + 1) = (raw.col(c).array() - m.feature_mean(c)) / m.feature_scale(c);
    if ((raw.col(c).array() - m.feature_mean(c)).abs().maxCoeff() <= 1e-12) x.col(c + 1).setZero();
  }

  // Noise variance from ordinary least squares residuals.
  const auto cod = x.completeOrthogonalDecomposition();
  const Eigen::VectorXd w_ols = cod.solve(y);
  const double rss = (y - x * w_ols).squaredNorm();
  const auto dof = std::max<Eigen::Index>(1, n - cod.rank());
  m.noise_variance = std::max(rss / static_cast<double>(dof), 1e-12);

  Eigen::Matrix4d precision = x.transpose() * x;
  if (std::isinf(prior_scale)) {
    if (Eigen::FullPivLU<Eigen::Matrix4d>(precision).rank() < 4) throw Error("singular fit");
  } else {
    precision += Eigen::Matrix4d::Identity() / prior_scale;
  }
  const Eigen::LDLT<Eigen::Matrix4d> ldlt(precision);
  const Eigen::Matrix4d inv = ldlt.solve(Eigen::Matrix4d::Identity());
  m.weight_mean = inv * (x.transpose() * y);
  m.weight_covariance = m.noise_variance * 0.5 * (inv + inv.transpose());
  return m;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile probability must lie in (0, 1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double interval_multiplier(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  if (std::abs(confidence - 0.95) < 1e-12) return 2.0;
  return normal_quantile(0.5 * (1.0 + confidence));
}

CostInterval predict_interval(const GlrModel& model, const TrajectoryFeatures& features, double confidence) {
  const auto p = model.predict(features);
  const double z = interval_multiplier(confidence);
  const double hi = std::max(0.0, p.mean + z * p.stddev);
  return {std::clamp(p.mean - z * p.stddev, 0.0, hi), hi};
}

AverageSpeedPredictor::AverageSpeedPredictor(double speed) : speed_(speed) {
  if (!(speed > 0.0)) throw Error("average speed must be > 0");
}

TrapezoidPredictor::TrapezoidPredictor(double v_max, double accel) : v_max_(v_max), accel_(accel) {
  if (!(v_max > 0.0) || !(accel > 0.0)) throw Error("trapezoid parameters must be > 0");
}

double TrapezoidPredictor::predict(const TrajectoryFeatures& f) const {
  const double ramp = v_max_ * v_max_ / accel_;  // accel + decel distance
  if (f.length >= ramp) return f.length / v_max_ + v_max_ / accel_;
  return 2.0 * std::sqrt(f.length / accel_);
}

AverageSpeedPredictor baseline_average_speed(const TimingDataset& dataset) {
  if (dataset.empty()) throw Error("too few rows");
  double sum = 0.0;
  for (const auto& s : dataset) sum += s.features.length / s.duration;
  return AverageSpeedPredictor(sum / static_cast<double>(dataset.size()));
}

TrapezoidPredictor baseline_trapezoid(double v_max, double accel) { return {v_max, accel}; }

void write_dataset(std::ostream& out, const TimingDataset& dataset) {
  out << "F_l,F_s,F_v,duration\n" << std::setprecision(17);
  for (const auto& s : dataset) {
    out << s.features.length << ',' << s.features.smoothness << ',' << s.features.variance << ',' << s.duration
        << '\n';
  }
}

TimingDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("dataset: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "F_l,F_s,F_v,duration") throw Error("dataset: unexpected header '" + line + "'");
  TimingDataset out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    TimingSample s;
    if (!(row >> s.features.length >> s.features.smoothness >> s.features.variance >> s.duration)) {
      throw Error("dataset: malformed row " + std::to_string(out.size() + 1));
    }
    out.push_back(s);
  }
  return out;
}

void save_dataset(const std::string& path, const TimingDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("dataset: cannot write '" + path + "'");
  write_dataset(out, dataset);
}

TimingDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("dataset: cannot open '" + path + "'");
  return read_dataset(in);
}

namespace {

template <typename M>
nlohmann::json to_rows(const M& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename M>
void from_rows(const nlohmann::json& j, M& m) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows()) throw Error("model: bad matrix shape");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) throw Error("model: bad matrix shape");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
}

}  // namespace

void write_model(std::ostream& out, const GlrModel& model) {
  nlohmann::json j;
  j["kind"] = "bayesian_linear_regression";
  j["inputs"] = {"bias", "F_l", "F_s", "F_v"};
  j["feature_mean"] = to_rows(model.feature_mean.transpose())[0];
  j["feature_scale"] = to_rows(model.feature_scale.transpose())[0];
  j["weight_mean"] = to_rows(model.weight_mean.transpose())[0];
  j["weight_covariance"] = to_rows(model.weight_covariance);
  j["noise_variance"] = model.noise_variance;
  j["prior_scale"] = std::isinf(model.prior_scale) ? nlohmann::json("inf") : nlohmann::json(model.prior_scale);
  out << j.dump(2) << "\n";
}

GlrModel read_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    GlrModel m;
    Eigen::RowVector3d mean;
    Eigen::RowVector3d scale;
    Eigen::RowVector4d w;
    from_rows(nlohmann::json::array({j.at("feature_mean")}), mean);
    from_rows(nlohmann::json::array({j.at("feature_scale")}), scale);
    from_rows(nlohmann::json::array({j.at("weight_mean")}), w);
    from_rows(j.at("weight_covariance"), m.weight_covariance);
    m.feature_mean = mean.transpose();
    m.feature_scale = scale.transpose();
    m.weight_mean = w.transpose();
    m.noise_variance = j.at("noise_variance").get<double>();
    const auto& ps = j.at("prior_scale");
    m.prior_scale = ps.is_string() ? kInf : ps.get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model: ") + e.what());
  }
}

void save_model(const std::string& path, const GlrModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("model: cannot write '" + path + "'");
  write_model(out, model);
}

GlrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("model: cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace namo
