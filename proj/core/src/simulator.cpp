#include "namo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "namo/angle.hpp"
#include "namo/blockage_model.hpp"
#include "namo/error.hpp"

namespace namo {
namespace {

enum Stream : std::uint64_t {
  kStreamSense = 1,
  kStreamAttempt = 2,
  kStreamMotion = 3,
  kStreamPolicy = 4,
  kStreamLayout = 5,
  kStreamPose = 6,
};

constexpr double kContactGap = 0.05;   // docking gap between robot and MO footprints
constexpr double kLoadReach = 0.1;     // attempt_load tolerance beyond the radius sum
constexpr double kPlacedVariance = 1e-6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::Vector2d to_vec(const GridPosition& p) { return {p.x, p.y}; }
GridPosition to_pos(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

// Lower-triangular factor of a PSD covariance, zero where it is degenerate.
template <int N>
Eigen::Matrix<double, N, N> noise_factor(const Eigen::Matrix<double, N, N>& cov) {
  Eigen::LDLT<Eigen::Matrix<double, N, N>> ldlt(cov);
  Eigen::Matrix<double, N, N> d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::Matrix<double, N, N> l = ldlt.matrixL();
  return ldlt.transpositionsP().transpose() * l * d;
}

template <int N>
Eigen::Matrix<double, N, 1> draw(std::mt19937_64& rng, const Eigen::Matrix<double, N, N>& factor) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Matrix<double, N, 1> z;
  for (int i = 0; i < N; ++i) z(i) = n01(rng);
  return factor * z;
}

nlohmann::ordered_json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::ordered_json interval_json(const CostInterval& c) {
  return nlohmann::ordered_json::array({num(c.lo()), num(c.hi())});
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

double motion_time(const Trajectory& trajectory, double v_lin, double v_rot) {
  if (!(v_lin > 0.0) || !(v_rot > 0.0)) throw Error("speeds must be > 0");
  double rotation = 0.0;
  const auto& w = trajectory.waypoints;
  for (std::size_t i = 1; i < w.size(); ++i) rotation += std::abs(wrap_angle(w[i].heading - w[i - 1].heading));
  return trajectory.total_length / v_lin + rotation / v_rot;
}

std::vector<RangeBearingMeasurement> sense(const OccupancyGrid& grid, std::span<const WorldObstacle> obstacles,
                                           const Pose2D& robot, const SensorModel& sensor, std::uint64_t seed,
                                           std::uint64_t tick) {
  std::mt19937_64 rng(derive_seed(seed, kStreamSense, tick));
  const Eigen::Matrix2d factor = noise_factor<2>(sensor.noise);
  std::vector<RangeBearingMeasurement> out;
  for (const auto& mo : obstacles) {
    if (mo.carried) continue;
    const double range = distance(robot.position, mo.position);
    if (range > sensor.range || range <= 0.0) continue;
    const double bearing =
        wrap_angle(std::atan2(mo.position.y - robot.position.y, mo.position.x - robot.position.x) - robot.heading);
    if (std::abs(bearing) > 0.5 * sensor.fov) continue;
    if (!line_of_sight(grid, robot.position, mo.position)) continue;
    const Eigen::Vector2d e = draw<2>(rng, factor);
    RangeBearingMeasurement m;
    m.range = std::max(range + e(0), 1e-6);
    m.bearing = wrap_angle(bearing + e(1));
    m.covariance = sensor.noise;
    m.target_id = mo.id;
    out.push_back(m);
  }
  return out;
}

bool attempt_load(const WorldObstacle& mo, const Pose2D& robot, double robot_radius, std::uint64_t seed,
                  std::uint64_t attempt_index) {
  if (distance(robot.position, mo.position) > mo.radius + robot_radius + kLoadReach + 1e-9)
    throw Error("not in range");
  std::mt19937_64 rng(derive_seed(seed, kStreamAttempt, attempt_index));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mo.true_sr;
}

Policy Policy::parse(std::string_view name) {
  Policy p;
  if (name == "namounc") return p;
  if (name == "namounc-no-action") {
    p.action_uncertainty = false;
    return p;
  }
  if (name == "namounc-no-blockage") {
    p.blockage_uncertainty = false;
    return p;
  }
  if (name == "namounc-no-action-no-blockage") {
    p.action_uncertainty = false;
    p.blockage_uncertainty = false;
    return p;
  }
  if (name == "priority-bypass") p.kind = PolicyKind::PriorityBypass;
  else if (name == "priority-removal") p.kind = PolicyKind::PriorityRemoval;
  else if (name == "random-choice") p.kind = PolicyKind::RandomChoice;
  else throw Error("unknown policy: " + std::string(name));
  return p;
}

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::PriorityBypass: return "priority-bypass";
    case PolicyKind::PriorityRemoval: return "priority-removal";
    case PolicyKind::RandomChoice: return "random-choice";
    case PolicyKind::NamoUnc: break;
  }
  std::string n = "namounc";
  if (!action_uncertainty) n += "-no-action";
  if (!blockage_uncertainty) n += "-no-blockage";
  return n;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Timeout: return "Timeout";
    case Outcome::NoStrategy: return "NoStrategy";
  }
  return "?";
}

const DecisionRecord* TrialRecord::first_decision_at(std::string_view region) const {
  for (const auto& d : decisions)
    if (d.region == region) return &d;
  return nullptr;
}

std::string to_json_line(const TrialRecord& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario"] = r.scenario;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["outcome"] = std::string(to_string(r.outcome));
  j["elapsed"] = num(r.elapsed);
  auto decisions = ordered_json::array();
  for (const auto& d : r.decisions) {
    ordered_json e;
    e["time"] = num(d.time);
    e["obstacle"] = d.obstacle_id;
    e["region"] = d.region;
    e["reason"] = d.reason;
    e["choice"] = std::string(to_string(d.choice));
    e["forced"] = d.forced;
    e["feasible"] = d.feasible;
    e["bypass_nav"] = interval_json(d.bypass_nav);
    e["bypass_blocked"] = interval_json(d.bypass_blocked);
    e["bypass_total"] = interval_json(d.bypass_total);
    e["removal_mo"] = interval_json(d.removal_mo);
    e["removal_nav"] = interval_json(d.removal_nav);
    e["removal_blocked"] = interval_json(d.removal_blocked);
    e["removal_total"] = interval_json(d.removal_total);
    e["bypass_utility"] = num(d.bypass_utility);
    e["removal_utility"] = num(d.removal_utility);
    e["removal_time"] = num(d.removal_time);
    e["p_block_bypass"] = num(d.p_block_bypass);
    e["p_block_removal"] = num(d.p_block_removal);
    e["success_rate"] = ordered_json::array({num(d.success_rate.lo), num(d.success_rate.hi)});
    decisions.push_back(std::move(e));
  }
  j["decisions"] = std::move(decisions);
  const auto& g = r.diagnostics;
  ordered_json diag;
  diag["distance"] = num(g.distance);
  diag["rotation"] = num(g.rotation);
  diag["load_attempts"] = g.load_attempts;
  diag["load_successes"] = g.load_successes;
  diag["removals"] = g.removals;
  diag["replans"] = g.replans;
  diag["observations"] = g.observations;
  diag["explored_cells"] = g.explored_cells;
  diag["removal_clear_violations"] = g.removal_clear_violations;
  j["diagnostics"] = std::move(diag);
  return j.dump();
}

namespace {

/// One perceive-decide-act run; owns all mutable world state.
class Episode {
 public:
  Episode(const Simulator& sim, const Policy& policy, std::uint64_t seed)
      : cfg_(sim.config()),
        sim_(sim),
        policy_(policy),
        seed_(seed),
        explored_(sim.grid()),
        motion_rng_(derive_seed(seed, kStreamMotion)),
        policy_rng_(derive_seed(seed, kStreamPolicy)) {
    sensor_.range = cfg_.robot.sensor_range;
    sensor_.fov = cfg_.robot.fov;
    sensor_.noise = cfg_.measurement_variance.asDiagonal();
    pose_factor_ = noise_factor<3>(Eigen::Matrix3d(cfg_.robot.pose_variance.asDiagonal()));
    removal_model_.v_lin = cfg_.robot.v_lin;
    removal_model_.overhead = cfg_.load_overhead;
    removal_model_.search_radius = cfg_.stock_search_radius;
    blockage_options_.n_samples = cfg_.blockage_samples;
    blockage_options_.seed = cfg_.blockage_seed;

    std::mt19937_64 layout(derive_seed(seed, kStreamLayout));
    for (const auto& s : cfg_.obstacles) {
      WorldObstacle w;
      w.id = s.id;
      w.radius = s.radius;
      w.true_sr = s.true_sr;
      std::uniform_real_distribution<double> ux(-s.jitter.x, s.jitter.x), uy(-s.jitter.y, s.jitter.y);
      const double dx = s.jitter.x > 0.0 ? ux(layout) : 0.0;
      const double dy = s.jitter.y > 0.0 ? uy(layout) : 0.0;
      w.position = {s.position.x + dx, s.position.y + dy};
      world_.push_back(w);
      spec_of_[s.id] = &s;
    }
    pose_.position = cfg_.robot.start;
    pose_.heading = cfg_.robot.start_heading;
    record_.scenario = cfg_.name;
    record_.policy = policy_.name();
    record_.seed = seed;
  }

  void set_calibration(std::map<std::string, BetaBelief> beliefs) { beliefs_ = std::move(beliefs); }

  TrialRecord run();

 private:
  enum class Status { Undecided, Bypass, Unremovable };
  struct Known {
    MovableObstacle mo;
    Status status = Status::Undecided;
    bool gave_up = false;  // unremovable after M failed attempts (not for lack of stock)
    int failures = 0;
  };
  struct Plan {
    Trajectory raw;   // grid path; bypass-time features come from here
    Trajectory path;  // driven path, shortcut by line of sight
    std::size_t exempt = 0;  // leading waypoints inside the snap-out segment
  };
  struct Evaluation {
    DecisionRecord record;
    std::optional<Plan> bypass;
    std::optional<RemovalEstimate> estimate;
    bool bypass_feasible = false;
    bool remove_feasible = false;
  };
  enum class FollowResult { Arrived, Replan, Blocked, Timeout };

  double r() const { return cfg_.robot.radius; }
  bool timed_out() const { return clock_ >= cfg_.timeout; }
  void advance(double dt) { clock_ += dt; }

  std::string belief_key(int id) const {
    if (cfg_.shared_sr) return "*";
    const auto it = spec_of_.find(id);
    return it == spec_of_.end() ? std::string("default") : it->second->obstacle_class;
  }
  BetaBelief& belief_for(int id) {
    const auto key = belief_key(id);
    auto it = beliefs_.find(key);
    if (it == beliefs_.end()) {
      const int s = static_cast<int>(std::lround(cfg_.estimated_sr * cfg_.calibration_trials));
      it = beliefs_.emplace(key, BetaBelief::from_trials(s, cfg_.calibration_trials - s)).first;
    }
    return it->second;
  }
  WorldObstacle& world_obstacle(int id) {
    for (auto& w : world_)
      if (w.id == id) return w;
    throw Error("unknown obstacle id");
  }
  std::string region_of(int id) const {
    const auto it = spec_of_.find(id);
    return it == spec_of_.end() ? std::string() : it->second->region;
  }
  Ellipse ellipse_of(const Known& k) const { return confidence_ellipse(k.mo.belief, k.mo.radius, cfg_.confidence); }

  template <class Pred>
  std::vector<Ellipse> ellipses(Pred pred) const {
    std::vector<Ellipse> out;
    for (const auto& [id, k] : known_)
      if (pred(id, k)) out.push_back(ellipse_of(k));
    return out;
  }
  std::vector<Ellipse> planning_obstacles() const {
    return ellipses([](int, const Known& k) { return k.status != Status::Undecided; });
  }
  std::vector<Ellipse> all_except(int skip) const {
    return ellipses([skip](int id, const Known&) { return id != skip; });
  }

  std::optional<Plan> plan(const GridPosition& from, const GridPosition& to, const std::vector<Ellipse>& obstacles) const;
  void observe();
  void sense_at_stop();
  double traverse_segment(const GridPosition& to, double heading);
  void traverse(const Trajectory& path);
  FollowResult follow(const Plan& plan, int& blocking_id, Trajectory& blocked_path);
  Evaluation evaluate(int id, const Trajectory& blocked_path);
  std::optional<Strategy> choose(Evaluation& ev);
  void handle_infeasible(int id);
  bool decide_on(int id, const Trajectory& blocked_path, const char* reason);
  bool execute_removal(int id, Evaluation ev, const Trajectory& blocked_path);
  void place(int id, const GridPosition& stock, const Trajectory& blocked_path);

  const ScenarioConfig& cfg_;
  const Simulator& sim_;
  Policy policy_;
  std::uint64_t seed_;
  OccupancyGrid explored_;
  std::vector<WorldObstacle> world_;
  std::map<int, const ObstacleSpec*> spec_of_;
  std::map<int, Known> known_;
  std::map<std::string, BetaBelief> beliefs_;
  Pose2D pose_;
  double clock_ = 0.0;
  std::uint64_t tick_ = 0;
  std::uint64_t attempt_counter_ = 0;
  bool stuck_ = false;  // policy cannot continue; the episode runs into the timeout
  std::mt19937_64 motion_rng_;
  std::mt19937_64 policy_rng_;
  SensorModel sensor_;
  Eigen::Matrix3d pose_factor_;
  RemovalTimeModel removal_model_;
  BlockageOptions blockage_options_;
  TrialRecord record_;
};

std::optional<Episode::Plan> Episode::plan(const GridPosition& from, const GridPosition& to,
                                           const std::vector<Ellipse>& obstacles) const {
  const InflatedGrid& inflated = sim_.inflated();
  const auto mask = inflated.with_obstacles(obstacles);
  const auto blocked = [&](const GridPosition& p) {
    const CellIndex c = inflated.cell_of(p);
    return !inflated.in_bounds(c) || mask[inflated.index(c)] != 0;
  };
  if (blocked(to)) return std::nullopt;
  GridPosition start = from;
  bool snapped = false;
  if (blocked(from)) {
    const auto cell = nearest_free_cell(inflated, mask, from);
    if (!cell) return std::nullopt;
    start = inflated.center_of(*cell);
    snapped = true;
  }
  auto path = plan_path(inflated, PlanRequest{start, to, obstacles});
  if (!path) return std::nullopt;
  std::vector<GridPosition> pts;
  pts.reserve(path->size() + 2);
  pts.push_back(from);
  for (std::size_t i = 1; i + 1 < path->size(); ++i) pts.push_back(path->waypoints[i].position);
  if (snapped && distance(start, from) > 1e-9) pts.insert(pts.begin() + 1, start);
  pts.push_back(to);
  // Sub-cell offsets can leave near-duplicate points; drop zero-length steps.
  std::vector<GridPosition> clean;
  for (const auto& p : pts)
    if (clean.empty() || distance(clean.back(), p) > 1e-9) clean.push_back(p);
  if (clean.size() < 2) clean.push_back(to);
  Plan out;
  out.exempt = snapped ? 2 : 0;
  out.raw = Trajectory::from_positions(clean);
  out.path = shortcut_path(inflated, mask, out.raw, inflated.resolution(), snapped ? 1 : 0);
  return out;
}

void Episode::observe() {
  ++tick_;
  ++record_.diagnostics.observations;
  RobotPoseBelief robot;
  std::mt19937_64 rng(derive_seed(seed_, kStreamPose, tick_));
  const Eigen::Vector3d e = draw<3>(rng, pose_factor_);
  robot.mean = Eigen::Vector3d(pose_.position.x, pose_.position.y, pose_.heading) + e;
  robot.covariance = cfg_.robot.pose_variance.asDiagonal();
  for (const auto& m : sense(sim_.grid(), world_, pose_, sensor_, seed_, tick_)) {
    const PoseBelief obs = project_measurement(robot, m);
    auto it = known_.find(m.target_id);
    if (it == known_.end()) {
      Known k;
      k.mo.id = m.target_id;
      k.mo.belief = obs;
      k.mo.radius = world_obstacle(m.target_id).radius;
      known_.emplace(m.target_id, k);
    } else {
      it->second.mo.belief = fuse(it->second.mo.belief, obs);
    }
  }
  mark_explored(explored_, pose_.position, pose_.heading, cfg_.robot.sensor_range, cfg_.robot.fov);
}

void Episode::sense_at_stop() {
  for (int i = 0; i < cfg_.observations_per_stop; ++i) {
    advance(cfg_.sense_time);
    observe();
  }
}

double Episode::traverse_segment(const GridPosition& to, double heading) {
  const double len = distance(pose_.position, to);
  const double turn = std::abs(wrap_angle(heading - pose_.heading));
  pose_.position = to;
  pose_.heading = heading;
  record_.diagnostics.distance += len;
  record_.diagnostics.rotation += turn;
  return len / cfg_.robot.v_lin + turn / cfg_.robot.v_rot;
}

void Episode::traverse(const Trajectory& path) {
  double t = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i)
    t += traverse_segment(path.waypoints[i].position, path.waypoints[i - 1].heading);
  if (t > 0.0) {
    double factor = 1.0;
    if (cfg_.motion_noise > 0.0)
      factor = std::max(0.5, 1.0 + std::normal_distribution<double>(0.0, cfg_.motion_noise)(motion_rng_));
    advance(t * factor);
  }
  observe();
}

Episode::FollowResult Episode::follow(const Plan& plan, int& blocking_id, Trajectory& blocked_path) {
  const auto& w = plan.path.waypoints;
  std::size_t idx = 0;
  while (idx + 1 < w.size()) {
    std::size_t j = idx;
    double len = 0.0;
    double t = 0.0;
    while (j + 1 < w.size() && (len < cfg_.sense_spacing || j == idx)) {
      len += distance(w[j].position, w[j + 1].position);
      t += traverse_segment(w[j + 1].position, w[j].heading);
      ++j;
    }
    double factor = 1.0;
    if (cfg_.motion_noise > 0.0)
      factor = std::max(0.5, 1.0 + std::normal_distribution<double>(0.0, cfg_.motion_noise)(motion_rng_));
    advance(t * factor);
    idx = j;
    if (timed_out()) return FollowResult::Timeout;
    observe();
    if (idx + 1 >= w.size()) break;
    const std::size_t check_from = std::max(idx, plan.exempt);
    if (check_from + 1 >= w.size()) continue;
    const Trajectory rest = plan.path.suffix(check_from);
    std::vector<MovableObstacle> mos;
    for (const auto& [id, k] : known_) mos.push_back(k.mo);
    if (const auto b = first_blockage(rest, mos, r(), cfg_.confidence)) {
      blocking_id = b->obstacle_id;
      blocked_path = plan.path.suffix(idx);
      return known_.at(b->obstacle_id).status == Status::Undecided ? FollowResult::Blocked : FollowResult::Replan;
    }
  }
  return FollowResult::Arrived;
}

Episode::Evaluation Episode::evaluate(int id, const Trajectory& blocked_path) {
  Evaluation ev;
  const Known& x = known_.at(id);
  DecisionRecord& d = ev.record;
  d.time = clock_;
  d.obstacle_id = id;
  d.region = region_of(id);

  const auto others = all_except(id);
  auto with_x = others;
  with_x.push_back(ellipse_of(x));

  ev.bypass = plan(pose_.position, cfg_.goal, with_x);
  d.bypass_nav = ev.bypass ? predict_interval(sim_.model(), extract_features(ev.bypass->raw), cfg_.confidence)
                           : CostInterval::infinite();

  ev.estimate = estimate_removal_time(sim_.grid(), sim_.inflated(), x.mo, pose_.position, blocked_path, others,
                                      removal_model_);
  d.removal_time = ev.estimate ? ev.estimate->removal_time : kInf;

  const BetaBelief& belief = belief_for(id);
  d.success_rate = success_rate_interval(belief, cfg_.confidence);
  const double fallback = std::min(d.bypass_nav.midpoint(), cfg_.timeout);
  const auto mo_cost = [&](double t_mo) {
    if (!std::isfinite(t_mo)) return CostInterval::infinite();
    if (!policy_.action_uncertainty) return CostInterval::point(t_mo);
    return removal_cost_interval(belief, {cfg_.max_attempts, t_mo, CostInterval::point(fallback)}, cfg_.confidence);
  };
  d.removal_mo = mo_cost(d.removal_time);

  const GridPosition mo_pos = to_pos(x.mo.belief.mean);
  auto after = plan(mo_pos, cfg_.goal, others);
  if (!after) after = plan(mo_pos, cfg_.goal, {});
  d.removal_nav = after ? predict_interval(sim_.model(), extract_features(after->raw), cfg_.confidence)
                        : CostInterval::infinite();

  d.bypass_blocked = CostInterval::zero();
  d.removal_blocked = CostInterval::zero();
  if (policy_.blockage_uncertainty && policy_.kind == PolicyKind::NamoUnc) {
    const CostInterval unseen = d.removal_mo.is_infinite() ? mo_cost(cfg_.nominal_removal_time) : d.removal_mo;
    if (ev.bypass) {
      d.p_block_bypass = trajectory_blockage(cfg_.population, ev.bypass->path, explored_, r(), blockage_options_);
      d.bypass_blocked = blockage_cost(d.p_block_bypass, unseen);
    }
    if (after) {
      d.p_block_removal = trajectory_blockage(cfg_.population, after->path, explored_, r(), blockage_options_);
      d.removal_blocked = blockage_cost(d.p_block_removal, unseen);
    }
  }
  d.bypass_total = assemble_bypass_cost(d.bypass_nav, d.bypass_blocked);
  d.removal_total = assemble_removal_cost(d.removal_mo, d.removal_nav, d.removal_blocked);
  d.bypass_utility = laplace_utility(d.bypass_total);
  d.removal_utility = laplace_utility(d.removal_total);
  ev.bypass_feasible = !d.bypass_total.is_infinite();
  ev.remove_feasible = !d.removal_total.is_infinite();
  return ev;
}

std::optional<Strategy> Episode::choose(Evaluation& ev) {
  DecisionRecord& d = ev.record;
  const auto pick = [&](Strategy preferred) -> std::optional<Strategy> {
    const bool ok = preferred == Strategy::Bypass ? ev.bypass_feasible : ev.remove_feasible;
    const bool other_ok = preferred == Strategy::Bypass ? ev.remove_feasible : ev.bypass_feasible;
    if (ok) return preferred;
    if (!other_ok) return std::nullopt;
    d.forced = true;
    return preferred == Strategy::Bypass ? Strategy::Remove : Strategy::Bypass;
  };
  switch (policy_.kind) {
    case PolicyKind::NamoUnc:
      try {
        return decide(d.bypass_total, d.removal_total, d.obstacle_id).choice;
      } catch (const Error&) {
        return std::nullopt;
      }
    case PolicyKind::PriorityBypass:
      if (ev.bypass_feasible) return Strategy::Bypass;
      stuck_ = true;
      return std::nullopt;
    case PolicyKind::PriorityRemoval:
      return pick(Strategy::Remove);
    case PolicyKind::RandomChoice: {
      const bool remove = std::uniform_real_distribution<double>(0.0, 1.0)(policy_rng_) < 0.5;
      return pick(remove ? Strategy::Remove : Strategy::Bypass);
    }
  }
  return std::nullopt;
}

void Episode::handle_infeasible(int id) {
  Known& x = known_.at(id);
  x.status = Status::Unremovable;
  x.gave_up = false;
  for (auto& [oid, k] : known_)
    if (oid != id && k.status == Status::Bypass) k.status = Status::Undecided;
}

// Returns false when the episode cannot continue.
bool Episode::decide_on(int id, const Trajectory& blocked_path, const char* reason) {
  Evaluation ev = evaluate(id, blocked_path);
  ev.record.reason = reason;
  const auto choice = choose(ev);
  ev.record.feasible = choice.has_value();
  ev.record.choice = choice.value_or(Strategy::Bypass);
  record_.decisions.push_back(ev.record);
  advance(cfg_.decision_time);
  if (!choice) {
    if (stuck_) return false;
    handle_infeasible(id);
    return true;
  }
  if (*choice == Strategy::Bypass) {
    known_.at(id).status = Status::Bypass;
    return true;
  }
  return execute_removal(id, std::move(ev), blocked_path);
}

bool Episode::execute_removal(int id, Evaluation ev, const Trajectory& blocked_path) {
  Known& x = known_.at(id);
  WorldObstacle& truth = world_obstacle(id);
  const double contact = x.mo.radius + r() + kContactGap;

  // Approach the believed position, then dock against the real one.
  {
    const Eigen::Vector2d mean = x.mo.belief.mean;
    Eigen::Vector2d dir = to_vec(pose_.position) - mean;
    if (dir.norm() < 1e-9) dir = Eigen::Vector2d(-1.0, 0.0);
    const GridPosition target = to_pos(mean + dir.normalized() * contact);
    const auto inflated_mask = sim_.inflated().with_obstacles(all_except(id));
    GridPosition goal = target;
    const CellIndex tc = sim_.inflated().cell_of(target);
    if (sim_.inflated().blocked(tc) || inflated_mask[sim_.inflated().index(tc)] != 0) {
      if (const auto c = nearest_free_cell(sim_.inflated(), inflated_mask, target)) goal = sim_.inflated().center_of(*c);
    }
    if (distance(goal, pose_.position) > 1e-9) {
      if (auto approach = plan(pose_.position, goal, all_except(id))) traverse(approach->path);
      else traverse(Trajectory::from_positions(std::vector<GridPosition>{pose_.position, goal}));
    }
    Eigen::Vector2d to_robot = to_vec(pose_.position) - to_vec(truth.position);
    if (to_robot.norm() < 1e-9) to_robot = Eigen::Vector2d(-1.0, 0.0);
    const GridPosition dock = to_pos(to_vec(truth.position) + to_robot.normalized() * contact);
    const double heading = std::atan2(truth.position.y - dock.y, truth.position.x - dock.x);
    const double dt = traverse_segment(dock, heading);
    if (dt > 0.0) advance(dt);
  }

  while (!timed_out()) {
    advance(cfg_.load_overhead);
    const bool ok = attempt_load(truth, pose_, r(), seed_, attempt_counter_++);
    ++record_.diagnostics.load_attempts;
    BetaBelief& belief = belief_for(id);
    belief = update_belief(belief, ok);
    if (ok) {
      ++record_.diagnostics.load_successes;
      const GridPosition stock = ev.estimate ? ev.estimate->stock_position : pose_.position;
      truth.carried = true;
      if (auto carry = plan(pose_.position, stock, all_except(id))) traverse(carry->path);
      else traverse(Trajectory::from_positions(std::vector<GridPosition>{pose_.position, stock}));
      place(id, stock, blocked_path);
      return true;
    }
    // The attempt cap belongs to the action-uncertainty model; without it the
    // robot assumes every attempt succeeds and keeps trying.
    if (++x.failures >= cfg_.max_attempts && policy_.action_uncertainty) {
      x.failures = 0;
      auto with_x = all_except(id);
      with_x.push_back(ellipse_of(x));
      if (plan(pose_.position, cfg_.goal, with_x)) {
        x.status = Status::Unremovable;
        x.gave_up = true;
        return true;
      }
    }
    if (timed_out()) break;
    observe();
    ev = evaluate(id, blocked_path);
    ev.record.reason = "retry";
    const auto choice = choose(ev);
    ev.record.feasible = choice.has_value();
    ev.record.choice = choice.value_or(Strategy::Remove);
    record_.decisions.push_back(ev.record);
    advance(cfg_.decision_time);
    if (choice && *choice == Strategy::Bypass) {
      x.status = Status::Bypass;
      return true;
    }
    if (!choice && stuck_) return false;
    // Infeasible or Remove: keep trying, the robot is already in contact.
  }
  return true;
}

void Episode::place(int id, const GridPosition& stock, const Trajectory& blocked_path) {
  WorldObstacle& truth = world_obstacle(id);
  truth.position = stock;
  truth.carried = false;
  Known& x = known_.at(id);
  x.mo.belief.mean = to_vec(stock);
  x.mo.belief.covariance = Eigen::Matrix2d::Identity() * kPlacedVariance;
  x.status = Status::Undecided;
  x.failures = 0;
  ++record_.diagnostics.removals;
  const MovableObstacle placed = x.mo;
  if (path_blocked(blocked_path, std::span<const MovableObstacle>(&placed, 1), r(), cfg_.confidence))
    ++record_.diagnostics.removal_clear_violations;
}

TrialRecord Episode::run() {
  observe();
  Outcome outcome = Outcome::Timeout;
  bool first_plan = true;
  while (true) {
    if (timed_out() || stuck_) break;
    if (distance(pose_.position, cfg_.goal) <= 1e-9) {
      outcome = Outcome::Success;
      break;
    }
    if (!first_plan) {
      advance(cfg_.replan_time);
      ++record_.diagnostics.replans;
    }
    first_plan = false;
    auto path = plan(pose_.position, cfg_.goal, planning_obstacles());
    if (!path) {
      bool cleared = false;
      for (auto& [id, k] : known_)
        if (k.status == Status::Bypass) {
          k.status = Status::Undecided;
          cleared = true;
        }
      if (!cleared)
        for (auto& [id, k] : known_)
          if (k.status == Status::Unremovable && k.gave_up) {
            k.status = Status::Undecided;
            k.gave_up = false;
            cleared = true;
          }
      if (!cleared) {
        outcome = Outcome::NoStrategy;
        break;
      }
      continue;
    }
    int blocking = -1;
    Trajectory blocked_path;
    const auto result = follow(*path, blocking, blocked_path);
    if (result == FollowResult::Timeout) break;
    if (result != FollowResult::Blocked) continue;
    sense_at_stop();
    if (timed_out()) break;
    // The extra observations may clear the blockage; the next plan decides.
    std::vector<MovableObstacle> one{known_.at(blocking).mo};
    if (!path_blocked(blocked_path, one, r(), cfg_.confidence)) continue;
    if (!decide_on(blocking, blocked_path, "blocked")) break;
  }
  record_.outcome = outcome;
  if (outcome == Outcome::Success && clock_ > cfg_.timeout) record_.outcome = Outcome::Timeout;
  record_.elapsed = record_.outcome == Outcome::Timeout ? cfg_.timeout : clock_;
  record_.diagnostics.explored_cells = explored_.explored_count();
  return record_;
}

}  // namespace

namespace {
OccupancyGrid load_grid(const std::string& path) {
  try {
    return load_map(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

GlrModel model_for(const ScenarioConfig& config) {
  if (config.bypass_model_path.empty()) throw ConfigError("scenario has no bypass model");
  try {
    return load_model(config.bypass_model_path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}
}  // namespace

Simulator::Simulator(ScenarioConfig config) : Simulator(config, model_for(config)) {}

Simulator::Simulator(ScenarioConfig config, GlrModel model)
    : config_(std::move(config)),
      grid_(load_grid(config_.map_path)),
      inflated_(grid_, config_.robot.radius),
      model_(std::move(model)) {
  if (config_.population.free_area <= 0.0) config_.population.free_area = free_area(grid_);
  validate_scenario(config_, grid_);
  if (!config_.calibration_log.empty()) {
    std::ifstream in(config_.calibration_log);
    if (!in) throw ConfigError("cannot open calibration log: " + config_.calibration_log);
    calibration_ = beliefs_from_log(read_calibration_log(in), config_.shared_sr);
  }
}

TrialRecord Simulator::run(const Policy& policy, std::optional<std::uint64_t> seed) const {
  Episode episode(*this, policy, seed.value_or(config_.seed));
  if (!calibration_.empty()) episode.set_calibration(calibration_);
  return episode.run();
}

TrialRecord run_episode(const ScenarioConfig& config, const Policy& policy) {
  return Simulator(config).run(policy);
}

}  // namespace namo
