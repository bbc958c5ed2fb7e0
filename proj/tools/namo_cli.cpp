// namo: run episodes, trial batches and the bypass-time benchmark.
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "namo/error.hpp"
#include "namo/experiment.hpp"
#include "namo/scenario.hpp"
#include "namo/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

struct RunArgs {
  std::string config;
  std::string policy = "namounc";
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct BenchmarkArgs {
  std::string config;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
};

struct TrainArgs {
  std::string dataset;
  std::string test_dataset;
  bool generate = false;
  std::string map;
  std::uint64_t seed = 7;
  int train_rows = 1500;
  int test_rows = 600;
  double stop_spacing = 1.0;
  double stop_time = 0.6;
  std::string out;
  std::string report;
  std::string save_data;
};

// Input problems (unreadable files, bad names, too few rows) surface as config errors.
template <class F>
auto as_config(F&& f) {
  try {
    return f();
  } catch (const namo::ConfigError&) {
    throw;
  } catch (const namo::Error& e) {
    throw namo::ConfigError(e.what());
  }
}

int cmd_run(const RunArgs& a) {
  const auto policy = as_config([&] { return namo::Policy::parse(a.policy); });
  const namo::Simulator sim(namo::load_scenario(a.config));
  const auto record = sim.run(policy, a.seed);
  const auto line = namo::to_json_line(record);
  if (a.out.empty()) {
    std::cout << line << '\n';
  } else {
    std::ofstream f(a.out, std::ios::app);
    if (!f) throw namo::ConfigError("cannot write " + a.out);
    f << line << '\n';
  }
  std::cerr << record.scenario << ' ' << record.policy << " seed " << record.seed << ": "
            << namo::to_string(record.outcome) << " after " << std::fixed << std::setprecision(2) << record.elapsed
            << " s\n";
  return kExitOk;
}

int cmd_benchmark(const BenchmarkArgs& a) {
  auto spec = namo::load_experiment(a.config);
  if (a.reps) spec.repetitions = *a.reps;
  if (a.seed) spec.seed_base = *a.seed;
  if (!a.out.empty()) spec.output_dir = a.out;
  spec.validate();
  const auto result = namo::run_experiment(spec, a.workers);
  if (!spec.output_dir.empty()) namo::write_experiment_outputs(spec.output_dir, result);
  namo::write_summary_csv(std::cout, result.summaries);
  if (!result.error.empty()) {
    std::cerr << "batch aborted: " << result.error << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

int cmd_train(const TrainArgs& a) {
  namo::TimingDataset train, test;
  if (a.generate) {
    if (a.map.empty()) throw namo::ConfigError("--generate needs --map");
    namo::DatasetGeneration g;
    g.seed = a.seed;
    g.train_rows = a.train_rows;
    g.test_rows = a.test_rows;
    g.stop_spacing = a.stop_spacing;
    g.stop_time = a.stop_time;
    auto data = namo::generate_timing_datasets(as_config([&] { return namo::load_map(a.map); }), g);
    train = std::move(data.train);
    test = std::move(data.test);
  } else {
    if (a.dataset.empty()) throw namo::ConfigError("need --dataset or --generate");
    train = as_config([&] { return namo::load_dataset(a.dataset); });
    if (!a.test_dataset.empty()) {
      test = as_config([&] { return namo::load_dataset(a.test_dataset); });
    } else {
      // Hold out the trailing rows in the 1500/600 proportion.
      const auto n_train = train.size() * 5 / 7;
      test.assign(train.begin() + static_cast<std::ptrdiff_t>(n_train), train.end());
      train.resize(n_train);
    }
  }
  if (!a.save_data.empty()) {
    namo::save_dataset(a.save_data + ".train.csv", train);
    namo::save_dataset(a.save_data + ".test.csv", test);
  }
  const auto report = as_config([&] { return namo::evaluate_bypass_predictors(train, test); });
  if (!a.out.empty()) namo::save_model(a.out, report.model);
  namo::write_bypass_report(std::cout, report);
  if (!a.report.empty()) {
    std::ofstream f(a.report);
    if (!f) throw namo::ConfigError("cannot write " + a.report);
    namo::write_bypass_report(f, report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navigation among movable obstacles with uncertainty intervals"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one episode and print its trial record (JSON line)");
  run_cmd->add_option("--config", run.config, "Scenario JSON")->required();
  run_cmd->add_option("--policy", run.policy, "Policy name")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Episode seed (defaults to the scenario seed)");
  run_cmd->add_option("--out", run.out, "Append the record to this file instead of stdout");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run an experiment spec and write CSV summaries");
  bench_cmd->add_option("--config", bench.config, "Experiment JSON")->required();
  bench_cmd->add_option("--reps", bench.reps, "Override repetitions per cell");
  bench_cmd->add_option("--seed", bench.seed, "Override the seed base");
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--workers", bench.workers, "Worker threads")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-bypass", "Fit and evaluate bypass-time predictors");
  train_cmd->add_option("--dataset", train.dataset, "Training CSV (F_l,F_s,F_v,duration)");
  train_cmd->add_option("--test", train.test_dataset, "Test CSV; default holds out the trailing rows");
  train_cmd->add_flag("--generate", train.generate, "Generate segments on --map");
  train_cmd->add_option("--map", train.map, "Map used by --generate");
  train_cmd->add_option("--seed", train.seed, "Generation seed")->capture_default_str();
  train_cmd->add_option("--train-rows", train.train_rows)->capture_default_str();
  train_cmd->add_option("--test-rows", train.test_rows)->capture_default_str();
  train_cmd->add_option("--stop-spacing", train.stop_spacing, "Meters between sensing pauses")->capture_default_str();
  train_cmd->add_option("--stop-time", train.stop_time, "Seconds per sensing pause")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Write the fitted GLR model (JSON)");
  train_cmd->add_option("--report", train.report, "Also write the evaluation report CSV here");
  train_cmd->add_option("--save-data", train.save_data, "Write <prefix>.train.csv and <prefix>.test.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*bench_cmd) return cmd_benchmark(bench);
    if (*train_cmd) return cmd_train(train);
  } catch (const namo::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
