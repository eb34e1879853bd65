#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sata/harness/config.hpp"
#include "sata/harness/scenarios.hpp"
#include "sata/ppo/trainer.hpp"

namespace sata::harness {

inline constexpr int kSummaryFormatVersion = 1;

struct TrainArtifacts {
  std::filesystem::path run_dir;
  std::filesystem::path metrics;
  std::filesystem::path config;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> checkpoints;
  ppo::TrainResult result;
};

/// Trains into out_dir/run_name: config.ini (resolved config), metrics.csv,
/// checkpoints/ckpt_<iteration>.bin and summary.json, each written atomically.
/// On failure the summary records the error and the exception propagates.
TrainArtifacts run_train(const ExperimentConfig& config);

/// Mean of a metrics column over iterations in [first, last), NaN entries skipped.
double column_mean(const std::vector<ppo::IterationMetrics>& metrics, const std::string& column, std::size_t first,
                   std::size_t last);
/// Value of a named metrics column.
double metric_value(const ppo::IterationMetrics& m, const std::string& column);

/// Loads config.checkpoint and runs config.scenario. Writes
/// out_dir/run_name/eval_<scenario>.json.
ScenarioReport run_eval(const ExperimentConfig& config);
/// Evaluation on an in-memory bundle; nothing is written.
ScenarioReport evaluate_bundle(const nets::PolicyBundle& bundle, const ExperimentConfig& config,
                               const ScenarioSpec& scenario);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  bool crashed = false;
  std::string error;
  std::filesystem::path run_dir;
  double early_reward = 0.0;        // base-reward episode mean over the early share of iterations
  double final_tracking_x = 0.0;    // tracking-x term, mean over the last 10% of iterations
  double initial_tracking_x = 0.0;  // same over the first 10%
  double ood_reward = 0.0;          // mean cumulative base reward at the out-of-range command
  double plain_completion = 0.0;    // share of plain evaluation episodes that reach the time limit
  std::vector<ppo::IterationMetrics> metrics;
};

struct VariantSummary {
  std::string variant;
  int runs = 0;
  int crashes = 0;
  double early_mean = 0.0;
  double early_ci95 = 0.0;  // half-width, Student t; NaN with fewer than two runs
  double ood_mean = 0.0;
  double ood_ci95 = 0.0;
};

struct AblationReport {
  std::vector<AblationRun> runs;
  std::vector<VariantSummary> variants;
  int early_wins = 0;  // seeds where sata's early reward exceeds no_growth's
  int ood_wins = 0;    // seeds where sata's OOD reward is at least no_growth's
  int compared_seeds = 0;
};

/// Trains every configured variant on every seed under out_dir/run_name,
/// evaluates plain and out-of-range scenarios, and writes aligned
/// per-iteration tables plus ablation_summary.json. A crashing variant is
/// recorded and the rest continue.
AblationReport run_ablation(const ExperimentConfig& config);

/// Applies a variant name to a config copy.
ExperimentConfig apply_variant(const ExperimentConfig& config, const std::string& variant);

}  // namespace sata::harness
