#include "namo/removal_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "namo/error.hpp"

namespace namo {

BetaBelief::BetaBelief(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("beta parameters must be > 0");
}

BetaBelief BetaBelief::from_trials(int successes, int failures, double prior_alpha, double prior_beta) {
  if (successes < 0 || failures < 0) throw Error("trial counts must be >= 0");
  return {prior_alpha + successes, prior_beta + failures};
}

BetaBelief update_belief(BetaBelief belief, bool success) {
  if (success) {
    belief.alpha += 1.0;
  } else {
    belief.beta += 1.0;
  }
  return belief;
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("beta parameters must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_ppf(double a, double b, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile probability must lie in [0, 1]");
  if (q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (regularized_incomplete_beta(a, b, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SuccessRateInterval success_rate_interval(const BetaBelief& belief, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  return {beta_ppf(belief.alpha, belief.beta, 0.5 * (1.0 - confidence)),
          beta_ppf(belief.alpha, belief.beta, 0.5 * (1.0 + confidence))};
}

double expected_removal_cost(double p_a, const RemovalParameters& params) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) throw Error("success rate must lie in [0, 1]");
  if (params.max_attempts < 1) throw Error("max attempts must be >= 1");
  const double t = params.removal_time;
  const int m = params.max_attempts;
  const double q = 1.0 - p_a;
  double attempts = 0.0;
  double q_pow = 1.0;  // q^(i-1)
  for (int i = 1; i <= m; ++i) {
    attempts += i * p_a * q_pow;
    q_pow *= q;
  }
  double cost = t * attempts;
  if (q_pow > 0.0) cost += (m * t + params.bypass_cost.midpoint()) * q_pow;
  return cost;
}

CostInterval removal_cost_interval(const BetaBelief& belief, const RemovalParameters& params, double confidence) {
  const auto p = success_rate_interval(belief, confidence);
  const double at_hi = expected_removal_cost(p.hi, params);
  const double at_lo = expected_removal_cost(p.lo, params);
  // Non-increasing in p_a for a non-negative fallback cost.
  if (at_hi > at_lo + 1e-9 * std::max(1.0, std::abs(at_lo))) throw Error("removal cost not monotone in success rate");
  return {std::min(at_hi, at_lo), std::max(at_hi, at_lo)};
}

std::optional<RemovalEstimate> estimate_removal_time(const OccupancyGrid& grid, const InflatedGrid& inflated,
                                                     const MovableObstacle& mo, const GridPosition& robot,
                                                     const Trajectory& blocked_path,
                                                     std::span<const Ellipse> other_obstacles,
                                                     const RemovalTimeModel& model) {
  const double robot_radius = inflated.robot_radius();
  const double clearance = mo.radius + robot_radius;
  const GridPosition mo_pos{mo.belief.mean(0), mo.belief.mean(1)};

  const auto blocked = inflated.with_obstacles(other_obstacles);
  auto source = inflated.cell_of(mo_pos);
  if (!inflated.in_bounds(source) || blocked[inflated.index(source)]) {
    const auto snapped = nearest_free_cell(inflated, blocked, mo_pos, static_cast<int>(std::ceil(clearance / inflated.resolution())) + 2);
    if (!snapped) return std::nullopt;
    source = *snapped;
  }
  const auto dist = distance_field(inflated, blocked, source);

  const InflatedGrid static_clearance(grid, clearance);
  const double path_clearance = clearance + grid.resolution();
  const int reach = static_cast<int>(std::ceil(model.search_radius / grid.resolution()));

  std::optional<CellIndex> best;
  double best_d = kInf;
  for (int y = std::max(0, source.y - reach); y <= std::min(grid.height() - 1, source.y + reach); ++y) {
    for (int x = std::max(0, source.x - reach); x <= std::min(grid.width() - 1, source.x + reach); ++x) {
      const CellIndex c{x, y};
      const double d = dist[inflated.index(c)];
      if (!(d <= model.search_radius) || d >= best_d) continue;
      if (static_clearance.blocked(c)) continue;
      const auto p = grid.center_of(c);
      bool clear = true;
      for (const auto& w : blocked_path.waypoints) {
        if (distance(p, w.position) < path_clearance) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      best_d = d;
      best = c;
    }
  }
  if (!best) return std::nullopt;

  RemovalEstimate est;
  est.stock_position = grid.center_of(*best);
  est.carry_distance = best_d;
  est.return_distance = best_d;
  const auto robot_cell = inflated.cell_of(robot);
  const double to_robot = inflated.in_bounds(robot_cell) ? dist[inflated.index(robot_cell)] : kInf;
  const double approach = std::isfinite(to_robot) ? to_robot : distance(robot, mo_pos);
  est.approach_distance = std::max(0.0, approach - clearance);
  est.removal_time =
      (est.approach_distance + est.carry_distance + est.return_distance) / model.v_lin + model.overhead;
  return est;
}

void write_calibration_log(std::ostream& out, std::span<const CalibrationTrial> trials) {
  out << "obstacle_class,success\n";
  for (const auto& t : trials) out << t.obstacle_class << ',' << (t.success ? 1 : 0) << '\n';
}

std::vector<CalibrationTrial> read_calibration_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("calibration log: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "obstacle_class,success") throw Error("calibration log: unexpected header '" + line + "'");
  std::vector<CalibrationTrial> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("calibration log: malformed row '" + line + "'");
    const auto flag = line.substr(comma + 1);
    if (flag != "0" && flag != "1") throw Error("calibration log: success must be 0 or 1");
    out.push_back({line.substr(0, comma), flag == "1"});
  }
  return out;
}

std::map<std::string, BetaBelief> beliefs_from_log(std::span<const CalibrationTrial> trials, bool shared,
                                                   double prior_alpha, double prior_beta) {
  std::map<std::string, BetaBelief> out;
  for (const auto& t : trials) {
    const std::string key = shared ? "*" : t.obstacle_class;
    auto it = out.try_emplace(key, prior_alpha, prior_beta).first;
    it->second = update_belief(it->second, t.success);
  }
  return out;
}

}  // namespace namo
