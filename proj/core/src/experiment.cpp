#include "namo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "namo/error.hpp"

namespace namo {

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  s.iqr = s.q3 - s.q1;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  s.min = *mn;
  s.max = *mx;
  return s;
}

GeneratedDatasets generate_timing_datasets(const OccupancyGrid& grid, const DatasetGeneration& o) {
  if (o.train_rows < 0 || o.test_rows < 0) throw Error("row counts must be >= 0");
  if (!(o.min_length > 0.0) || !(o.max_length > o.min_length)) throw Error("invalid segment length range");
  if (!(o.stop_spacing > 0.0) || !(o.stop_time >= 0.0)) throw Error("invalid sensing pause parameters");
  const InflatedGrid inflated(grid, o.robot_radius);
  const auto mask = inflated.with_obstacles({});
  std::vector<CellIndex> free_cells;
  for (int y = 0; y < inflated.height(); ++y)
    for (int x = 0; x < inflated.width(); ++x)
      if (!inflated.blocked({x, y})) free_cells.push_back({x, y});
  if (free_cells.size() < 2) throw Error("map has no free space for segments");

  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);
  std::normal_distribution<double> noise(0.0, o.noise);
  const auto total = static_cast<std::size_t>(o.train_rows + o.test_rows);
  TimingDataset rows;
  rows.reserve(total);
  std::size_t attempts = 0;
  std::uniform_int_distribution<int> via_count(0, std::max(0, o.max_via_points));
  while (rows.size() < total) {
    if (++attempts > 100 * total + 1000) throw Error("could not generate enough segments");
    const int legs = via_count(rng) + 1;
    // Features describe the planned grid path; the duration times the path
    // the robot actually drives, shortcut by line of sight.
    std::vector<GridPosition> planned{inflated.center_of(free_cells[pick(rng)])};
    std::vector<GridPosition> driven = planned;
    bool ok = true;
    for (int leg = 0; leg < legs && ok; ++leg) {
      const GridPosition a = planned.back();
      const GridPosition b = inflated.center_of(free_cells[pick(rng)]);
      const double d = distance(a, b);
      if (d < o.min_length || d > o.max_length) {
        ok = false;
        break;
      }
      const auto raw = plan_path(inflated, PlanRequest{a, b, {}});
      if (!raw || raw->size() < 2) {
        ok = false;
        break;
      }
      const auto smooth = shortcut_path(inflated, mask, *raw, inflated.resolution());
      for (std::size_t i = 1; i < raw->size(); ++i) planned.push_back(raw->waypoints[i].position);
      for (std::size_t i = 1; i < smooth.size(); ++i) driven.push_back(smooth.waypoints[i].position);
    }
    if (!ok) continue;
    const auto segment = Trajectory::from_positions(planned);
    const auto drive = Trajectory::from_positions(driven);
    const double factor = std::max(0.5, 1.0 + (o.noise > 0.0 ? noise(rng) : 0.0));
    const double stops = std::floor(drive.total_length / o.stop_spacing);
    rows.push_back(
        {extract_features(segment), motion_time(drive, o.v_lin, o.v_rot) * factor + stops * o.stop_time});
  }
  GeneratedDatasets out;
  out.train.assign(rows.begin(), rows.begin() + o.train_rows);
  out.test.assign(rows.begin() + o.train_rows, rows.end());
  return out;
}

BypassReport evaluate_bypass_predictors(const TimingDataset& train, const TimingDataset& test, double v_max,
                                        double accel) {
  if (test.empty()) throw Error("too few rows");
  BypassReport r;
  r.train_rows = train.size();
  r.test_rows = test.size();
  r.model = fit(train);
  const auto avg = baseline_average_speed(train);
  const auto trap = baseline_trapezoid(v_max, accel);
  std::vector<double> e_glr, e_avg, e_trap;
  for (const auto& s : test) {
    e_glr.push_back(std::abs(r.model.predict(s.features).mean - s.duration));
    e_avg.push_back(std::abs(avg.predict(s.features) - s.duration));
    e_trap.push_back(std::abs(trap.predict(s.features) - s.duration));
  }
  r.methods = {{"glr", summarize(e_glr)}, {"average-speed", summarize(e_avg)}, {"trapezoid", summarize(e_trap)}};
  return r;
}

void write_bypass_report(std::ostream& out, const BypassReport& report) {
  out << "method,n,median_ae,q1,q3,iqr,mean_ae\n" << std::setprecision(10);
  for (const auto& m : report.methods) {
    const auto& s = m.absolute_error;
    out << m.method << ',' << s.n << ',' << s.median << ',' << s.q1 << ',' << s.q3 << ',' << s.iqr << ',' << s.mean
        << '\n';
  }
}

void ExperimentSpec::validate() const {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (scenarios.empty()) throw ConfigError("experiment needs at least one scenario");
  if (policies.empty()) throw ConfigError("experiment needs at least one policy");
  for (const auto& p : policies) {
    try {
      (void)Policy::parse(p);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
}

ExperimentSpec parse_experiment(const std::string& json_text, const std::string& base_dir) {
  using nlohmann::json;
  ExperimentSpec spec;
  try {
    const json j = json::parse(json_text);
    for (const auto& [key, _] : j.items()) {
      if (key != "name" && key != "scenarios" && key != "policies" && key != "repetitions" && key != "seed_base" &&
          key != "output_dir" && key != "description")
        throw ConfigError("experiment: unknown key \"" + key + "\"");
    }
    spec.name = j.value("name", std::string());
    const auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      if (path.is_absolute() || base_dir.empty()) return path.lexically_normal().string();
      return (std::filesystem::path(base_dir) / path).lexically_normal().string();
    };
    for (const auto& s : j.at("scenarios")) {
      ScenarioEntry e;
      if (s.is_string()) {
        e.config_path = resolve(s.get<std::string>());
        e.label = std::filesystem::path(e.config_path).stem().string();
      } else {
        e.config_path = resolve(s.at("config").get<std::string>());
        e.label = s.value("label", std::filesystem::path(e.config_path).stem().string());
        if (s.contains("overrides")) e.overrides_json = s.at("overrides").dump();
      }
      spec.scenarios.push_back(std::move(e));
    }
    spec.policies = j.at("policies").get<std::vector<std::string>>();
    spec.repetitions = j.value("repetitions", 1);
    spec.seed_base = j.value("seed_base", std::uint64_t{1});
    if (j.contains("output_dir")) spec.output_dir = resolve(j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), std::filesystem::path(path).parent_path().string());
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int workers) {
  spec.validate();
  std::vector<Simulator> sims;
  sims.reserve(spec.scenarios.size());
  for (const auto& s : spec.scenarios) {
    auto config = load_scenario(s.config_path, s.overrides_json);
    if (config.name.empty()) config.name = s.label;
    sims.emplace_back(std::move(config));
  }
  std::vector<Policy> policies;
  for (const auto& p : spec.policies) policies.push_back(Policy::parse(p));

  const std::size_t reps = static_cast<std::size_t>(spec.repetitions);
  const std::size_t total = sims.size() * policies.size() * reps;
  std::vector<std::optional<TrialRow>> slots(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error;
  std::size_t error_index = total;

  const auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const std::size_t rep = i % reps;
      const std::size_t pi = (i / reps) % policies.size();
      const std::size_t si = i / (reps * policies.size());
      try {
        TrialRow row;
        row.scenario = spec.scenarios[si].label;
        row.policy = spec.policies[pi];
        row.repetition = static_cast<int>(rep);
        row.record = sims[si].run(policies[pi], spec.seed_base + rep);
        row.record.scenario = row.scenario;
        slots[i] = std::move(row);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = spec.scenarios[si].label + "/" + spec.policies[pi] + "/rep " + std::to_string(rep) + ": " + e.what();
        }
        failed.store(true);
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  ExperimentResult result;
  for (auto& s : slots)
    if (s) result.rows.push_back(std::move(*s));
  result.error = error;
  result.summaries = summarize_rows(result.rows);
  return result;
}

std::vector<SummaryRow> summarize_rows(std::span<const TrialRow> rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> samples;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.scenario, r.policy);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({r.scenario, r.policy, 0, {}});
      samples.emplace_back();
    }
    samples[it->second].push_back(r.record.elapsed);
    if (r.record.outcome == Outcome::Success) ++out[it->second].successes;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].elapsed = summarize(samples[i]);
  return out;
}

namespace {
std::vector<std::pair<SummaryRow, std::vector<double>>> grouped(std::span<const TrialRow> rows) {
  std::vector<std::pair<SummaryRow, std::vector<double>>> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().first.scenario != r.scenario || out.back().first.policy != r.policy)
      out.push_back({SummaryRow{r.scenario, r.policy, 0, {}}, {}});
    out.back().second.push_back(r.record.elapsed);
  }
  return out;
}
}  // namespace

void write_results_csv(std::ostream& out, std::span<const TrialRow> rows) {
  out << "scenario,policy,repetition,seed,outcome,elapsed,decisions,removals,load_attempts,distance\n"
      << std::setprecision(10);
  for (const auto& r : rows) {
    const auto& t = r.record;
    out << r.scenario << ',' << r.policy << ',' << r.repetition << ',' << t.seed << ',' << to_string(t.outcome) << ','
        << t.elapsed << ',' << t.decisions.size() << ',' << t.diagnostics.removals << ','
        << t.diagnostics.load_attempts << ',' << t.diagnostics.distance << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "scenario,policy,n,successes,success_rate,mean,std,median,q1,q3,iqr,min,max\n" << std::setprecision(10);
  for (const auto& r : rows) {
    const auto& s = r.elapsed;
    const double rate = s.n ? static_cast<double>(r.successes) / static_cast<double>(s.n) : 0.0;
    out << r.scenario << ',' << r.policy << ',' << s.n << ',' << r.successes << ',' << rate << ',' << s.mean << ','
        << s.std << ',' << s.median << ',' << s.q1 << ',' << s.q3 << ',' << s.iqr << ',' << s.min << ',' << s.max
        << '\n';
  }
}

void write_quantiles_csv(std::ostream& out, std::span<const TrialRow> rows) {
  out << "scenario,policy,min,q1,median,q3,max,whisker_low,whisker_high\n" << std::setprecision(10);
  for (const auto& [row, v] : grouped(rows)) {
    const Summary s = summarize(v);
    // Tukey whiskers: furthest samples within 1.5 IQR of the box.
    double lo = s.max, hi = s.min;
    for (double x : v) {
      if (x >= s.q1 - 1.5 * s.iqr) lo = std::min(lo, x);
      if (x <= s.q3 + 1.5 * s.iqr) hi = std::max(hi, x);
    }
    out << row.scenario << ',' << row.policy << ',' << s.min << ',' << s.q1 << ',' << s.median << ',' << s.q3 << ','
        << s.max << ',' << lo << ',' << hi << '\n';
  }
}

void write_experiment_outputs(const std::string& dir, const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw Error(std::string("cannot write ") + name + " in " + dir);
    return f;
  };
  auto results = open("results.csv");
  write_results_csv(results, result.rows);
  auto summary = open("summary.csv");
  write_summary_csv(summary, result.summaries);
  auto quantiles = open("quantiles.csv");
  write_quantiles_csv(quantiles, result.rows);
  auto trials = open("trials.jsonl");
  for (const auto& r : result.rows) trials << to_json_line(r.record) << '\n';
}

}  // namespace namo
