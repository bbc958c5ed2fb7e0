#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "namo/bypass_predictor.hpp"
#include "namo/grid.hpp"
#include "namo/simulator.hpp"

namespace namo {

/// Descriptive statistics; quantiles use linear interpolation between order
/// statistics and std is the sample standard deviation.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
};
double quantile(std::span<const double> values, double q);
Summary summarize(std::span<const double> values);

// ---- bypass-time benchmark ------------------------------------------------

struct DatasetGeneration {
  int train_rows = 1500;
  int test_rows = 600;
  std::uint64_t seed = 7;
  double robot_radius = 0.3;
  double v_lin = 0.5;
  double v_rot = 1.0;
  double noise = 0.05;  // multiplicative duration noise (std of the factor)
  double min_length = 1.0;
  double max_length = 15.0;  // per leg, straight-line distance
  int max_via_points = 2;     // each segment routes through 0..max random via points
  double stop_spacing = 1.0;  // the robot pauses to sense after every stop_spacing meters
  double stop_time = 0.6;     // seconds per sensing pause; 0 disables
};

struct GeneratedDatasets {
  TimingDataset train;
  TimingDataset test;
};

/// Random segments planned on the map (start, optional via points, goal),
/// timed with motion_time and a multiplicative Gaussian factor.
/// Deterministic in the seed.
GeneratedDatasets generate_timing_datasets(const OccupancyGrid& grid, const DatasetGeneration& options);

struct MethodError {
  std::string method;
  Summary absolute_error;
};

struct BypassReport {
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  GlrModel model;
  std::vector<MethodError> methods;  // glr, average-speed, trapezoid
};

/// Fits the GLR and both baselines on `train` and scores them on `test`.
BypassReport evaluate_bypass_predictors(const TimingDataset& train, const TimingDataset& test, double v_max = 0.5,
                                        double accel = 0.5);
// CSV: method,n,median_ae,q1,q3,iqr,mean_ae
void write_bypass_report(std::ostream& out, const BypassReport& report);

// ---- trial batches ----------------------------------------------------------

struct ScenarioEntry {
  std::string label;
  std::string config_path;
  std::string overrides_json;  // JSON merge patch, may be empty
};

struct ExperimentSpec {
  std::string name;
  std::vector<ScenarioEntry> scenarios;
  std::vector<std::string> policies;
  int repetitions = 1;
  std::uint64_t seed_base = 1;
  std::string output_dir;
  void validate() const;
};

/// JSON document; relative paths resolve against the spec file's directory.
ExperimentSpec parse_experiment(const std::string& json_text, const std::string& base_dir);
ExperimentSpec load_experiment(const std::string& path);

struct TrialRow {
  std::string scenario;
  std::string policy;
  int repetition = 0;
  TrialRecord record;
};

struct SummaryRow {
  std::string scenario;
  std::string policy;
  std::size_t successes = 0;
  Summary elapsed;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;  // scenario, policy, repetition order
  std::vector<SummaryRow> summaries;
  std::string error;  // first episode failure; rows then hold the finished trials only
};

/// Runs every (scenario, policy, repetition) cell on a worker pool. Trial i of
/// a cell uses seed seed_base + i. The merge order never depends on timing.
ExperimentResult run_experiment(const ExperimentSpec& spec, int workers = 1);
std::vector<SummaryRow> summarize_rows(std::span<const TrialRow> rows);

// results.csv: scenario,policy,repetition,seed,outcome,elapsed,decisions,removals,load_attempts,distance
void write_results_csv(std::ostream& out, std::span<const TrialRow> rows);
// summary.csv: scenario,policy,n,successes,success_rate,mean,std,median,q1,q3,iqr,min,max
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
// quantiles.csv: scenario,policy,min,q1,median,q3,max,whisker_low,whisker_high
void write_quantiles_csv(std::ostream& out, std::span<const TrialRow> rows);
/// Writes the three CSV files plus trials.jsonl into `dir` (created if needed).
void write_experiment_outputs(const std::string& dir, const ExperimentResult& result);

}  // namespace namo
