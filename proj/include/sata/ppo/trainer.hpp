#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sata/growth.hpp"
#include "sata/nets/policy.hpp"
#include "sata/ppo/estimator_trainer.hpp"
#include "sata/ppo/ppo.hpp"
#include "sata/ppo/rollout.hpp"
#include "sata/sim/environment.hpp"

namespace sata::ppo {

struct TrainConfig {
  std::uint64_t seed = 0;
  int iterations = 1500;
  RolloutConfig rollout;
  growth::GrowthSchedule growth;
  sim::EnvConfig env;
  nets::BundleSpec nets;
  PpoConfig ppo;
  EstimatorTrainConfig estimator;
  int estimator_interval = 50;
  int checkpoint_interval = 250;
  int reward_window = 100;  // completed episodes in the rolling means

  /// Throws ConfigError.
  void validate() const;
};

struct IterationMetrics {
  int iteration = 0;
  double t = 0.0;
  double g = 0.0;
  double tau_limit = 0.0;
  double f_policy = 0.0;
  // Rolling means over the last reward_window completed episodes; NaN before
  // the first completion.
  double mean_episode_reward = 0.0;
  double mean_episode_reward_base = 0.0;
  double mean_episode_length = 0.0;  // s
  /// Training-reward term sums per episode divided by the episode time limit.
  std::array<double, rewards::kTermCount> term_means{};
  double step_reward = 0.0;  // mean reward per policy step in this iteration's buffer
  int episodes = 0;          // completed during this iteration
  int failures = 0;          // of which flips or joint-limit violations
  double kl = 0.0;
  double surrogate_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double learning_rate = 0.0;
  double estimator_rmse = 0.0;          // last training RMSE, NaN before the first fit
  double estimator_holdout_rmse = 0.0;  // NaN before the first fit
};

/// Column names in CSV order.
std::vector<std::string> metrics_columns();
std::string metrics_header_line();
std::string format_metrics_row(const IterationMetrics& m);

struct TrainHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
  /// Called with iteration 0 before training, every checkpoint_interval
  /// iterations, and after the final iteration.
  std::function<void(const nets::PolicyBundle&, int)> on_checkpoint;
};

struct TrainResult {
  nets::PolicyBundle bundle;
  std::vector<IterationMetrics> metrics;
  std::optional<EstimatorReport> estimator;
};

TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace sata::ppo
