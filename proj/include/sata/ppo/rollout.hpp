#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sata/growth.hpp"
#include "sata/nets/policy.hpp"
#include "sata/rewards.hpp"
#include "sata/sim/environment.hpp"

namespace sata::ppo {

/// Step-major transition storage: sample index = step * num_envs + env.
struct RolloutBuffer {
  int num_envs = 0;
  int horizon = 0;
  int obs_dim = 0;
  int act_dim = 0;
  nets::Mat<float> obs;      // scaled
  nets::Mat<float> actions;  // sampled policy output
  nets::Mat<float> mean;
  nets::Vec<float> log_std;  // policy log-std at collection time
  std::vector<double> log_prob;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> growth;
  std::vector<double> f_policy;
  std::vector<double> last_values;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<std::uint8_t> written;

  static RolloutBuffer create(int num_envs, int horizon, int obs_dim, int act_dim);
  std::size_t size() const { return static_cast<std::size_t>(num_envs) * static_cast<std::size_t>(horizon); }
  std::size_t index(int step, int env) const { return static_cast<std::size_t>(step) * num_envs + env; }
  void clear_marks();
  bool complete() const;
};

/// Physics ticks between policy queries for a possibly non-integer ratio of
/// physics rate to policy rate. The remainder carries over so the long-run
/// query rate equals f_policy.
class DecimationClock {
 public:
  explicit DecimationClock(double physics_dt, double f_policy = 100.0);

  void set_frequency(double f_policy);
  /// Ticks to simulate before the next query.
  int next_period();

  double accumulator() const { return accumulator_; }
  double frequency() const { return f_policy_; }

 private:
  double dt_;
  double f_policy_;
  double period_;
  double accumulator_ = 0.0;
};

/// Fixed-capacity FIFO of (scaled estimator window, body-frame velocity).
class EstimatorDataset {
 public:
  EstimatorDataset(int input_width, std::size_t capacity);

  void add(std::span<const float> input, const std::array<double, 3>& target);
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return capacity_; }
  int input_width() const { return width_; }
  bool empty() const { return count_ == 0; }
  /// Samples in insertion order, oldest first.
  nets::Mat<float> inputs() const;
  nets::Mat<float> targets() const;

 private:
  int width_;
  std::size_t capacity_;
  std::size_t count_ = 0;
  std::size_t head_ = 0;
  nets::Mat<float> inputs_;
  nets::Mat<float> targets_;
};

struct CompletedEpisode {
  sim::EpisodeStats stats;
  std::array<double, rewards::kTermCount> terms{};  // training-reward term sums
  int env = -1;
  bool partial = false;  // began at a randomized time offset rather than t = 0
};

struct CollectStats {
  std::vector<CompletedEpisode> episodes;
  std::array<double, rewards::kTermCount> term_sums{};  // over every tick of the collection
  double reward_sum = 0.0;
  std::uint64_t ticks = 0;
  std::uint64_t queries = 0;  // policy queries per env
};

struct RolloutConfig {
  int num_envs = 64;
  int horizon = 24;
  double gamma = 0.99;  // timeout bootstrap
  bool random_initial_time = true;
  std::size_t estimator_capacity = 20000;
  double estimator_sample_prob = 0.25;
};

/// Owns the environments and everything that persists between iterations.
class RolloutCollector {
 public:
  RolloutCollector(const RolloutConfig& config, const sim::EnvConfig& env_config, const sim::RobotModel& model,
                   std::uint64_t seed);

  /// Fills `buffer` with one horizon per environment. Throws
  /// SimulationBlowupError tagged with the environment index and seed.
  CollectStats collect(const nets::PolicyBundle& bundle, const growth::Broadcast& broadcast, RolloutBuffer& buffer,
                       Rng& policy_rng);

  const EstimatorDataset& estimator_data() const { return dataset_; }
  std::vector<sim::Environment>& envs() { return envs_; }
  const DecimationClock& clock() const { return clock_; }

 private:
  void end_episode(int env, CollectStats& stats);

  RolloutConfig config_;
  std::uint64_t seed_;
  std::vector<sim::Environment> envs_;
  std::vector<nets::EstimatorWindow> windows_;
  std::vector<std::array<double, rewards::kTermCount>> term_sums_;
  std::vector<std::uint8_t> partial_;
  DecimationClock clock_;
  EstimatorDataset dataset_;
  Rng sample_rng_;
};

}  // namespace sata::ppo
