#include "sata/ppo/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "sata/error.hpp"

namespace sata::ppo {

RolloutBuffer RolloutBuffer::create(int num_envs, int horizon, int obs_dim, int act_dim) {
  if (num_envs <= 0 || horizon <= 0 || obs_dim <= 0 || act_dim <= 0) {
    throw ConfigError("rollout buffer dimensions must be positive");
  }
  RolloutBuffer b;
  b.num_envs = num_envs;
  b.horizon = horizon;
  b.obs_dim = obs_dim;
  b.act_dim = act_dim;
  const auto n = static_cast<Eigen::Index>(b.size());
  b.obs = nets::Mat<float>::Zero(obs_dim, n);
  b.actions = nets::Mat<float>::Zero(act_dim, n);
  b.mean = nets::Mat<float>::Zero(act_dim, n);
  b.log_std = nets::Vec<float>::Zero(act_dim);
  b.log_prob.assign(b.size(), 0.0);
  b.values.assign(b.size(), 0.0);
  b.rewards.assign(b.size(), 0.0);
  b.dones.assign(b.size(), 0);
  b.growth.assign(b.size(), 0.0);
  b.f_policy.assign(b.size(), 0.0);
  b.last_values.assign(static_cast<std::size_t>(num_envs), 0.0);
  b.advantages.assign(b.size(), 0.0);
  b.returns.assign(b.size(), 0.0);
  b.written.assign(b.size(), 0);
  return b;
}

void RolloutBuffer::clear_marks() { std::fill(written.begin(), written.end(), 0); }

bool RolloutBuffer::complete() const {
  return std::all_of(written.begin(), written.end(), [](std::uint8_t w) { return w == 1; });
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kClockEps = 1e-9;
}

DecimationClock::DecimationClock(double physics_dt, double f_policy) : dt_(physics_dt) {
  if (!(physics_dt > 0.0)) throw ConfigError("physics dt must be positive");
  set_frequency(f_policy);
}

void DecimationClock::set_frequency(double f_policy) {
  if (!(f_policy > 0.0) || !std::isfinite(f_policy)) throw ConfigError("policy frequency must be positive");
  if (f_policy > 1.0 / dt_ + kClockEps) throw ConfigError("policy frequency exceeds the physics rate");
  f_policy_ = f_policy;
  period_ = 1.0 / f_policy;
  accumulator_ = std::min(accumulator_, period_);
}

int DecimationClock::next_period() {
  int ticks = 0;
  do {
    accumulator_ += dt_;
    ++ticks;
  } while (accumulator_ + kClockEps < period_);
  accumulator_ = std::max(0.0, accumulator_ - period_);
  return ticks;
}

// ---------------------------------------------------------------------------

EstimatorDataset::EstimatorDataset(int input_width, std::size_t capacity)
    : width_(input_width), capacity_(capacity) {
  if (input_width <= 0 || capacity == 0) throw ConfigError("estimator dataset needs positive width and capacity");
  inputs_ = nets::Mat<float>::Zero(input_width, static_cast<Eigen::Index>(capacity));
  targets_ = nets::Mat<float>::Zero(3, static_cast<Eigen::Index>(capacity));
}

void EstimatorDataset::add(std::span<const float> input, const std::array<double, 3>& target) {
  if (static_cast<int>(input.size()) != width_) throw ShapeError("estimator sample width mismatch");
  const auto col = static_cast<Eigen::Index>(head_);
  inputs_.col(col) = Eigen::Map<const nets::Vec<float>>(input.data(), width_);
  for (int k = 0; k < 3; ++k) targets_(k, col) = static_cast<float>(target[k]);
  head_ = (head_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
}

nets::Mat<float> EstimatorDataset::inputs() const {
  nets::Mat<float> out(width_, static_cast<Eigen::Index>(count_));
  const std::size_t start = count_ < capacity_ ? 0 : head_;
  for (std::size_t i = 0; i < count_; ++i) {
    out.col(static_cast<Eigen::Index>(i)) = inputs_.col(static_cast<Eigen::Index>((start + i) % capacity_));
  }
  return out;
}

nets::Mat<float> EstimatorDataset::targets() const {
  nets::Mat<float> out(3, static_cast<Eigen::Index>(count_));
  const std::size_t start = count_ < capacity_ ? 0 : head_;
  for (std::size_t i = 0; i < count_; ++i) {
    out.col(static_cast<Eigen::Index>(i)) = targets_.col(static_cast<Eigen::Index>((start + i) % capacity_));
  }
  return out;
}

// ---------------------------------------------------------------------------

RolloutCollector::RolloutCollector(const RolloutConfig& config, const sim::EnvConfig& env_config,
                                   const sim::RobotModel& model, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      clock_(env_config.physics_dt),
      dataset_(nets::kEstimatorFrames * nets::estimator_frame_width(model.joint_count()), config.estimator_capacity),
      sample_rng_(derive_seed(seed, 0x5e7)) {
  if (config.num_envs <= 0 || config.horizon <= 0) throw ConfigError("rollout needs positive env count and horizon");
  envs_.reserve(static_cast<std::size_t>(config.num_envs));
  for (int e = 0; e < config.num_envs; ++e) {
    envs_.emplace_back(env_config, model, derive_seed(seed, static_cast<std::uint64_t>(e)));
    windows_.emplace_back(model.joint_count());
    if (config.random_initial_time) {
      envs_.back().set_episode_time(envs_.back().rng().uniform(0.0, env_config.termination.episode_length));
    }
  }
  term_sums_.assign(envs_.size(), {});
  partial_.assign(envs_.size(), config.random_initial_time ? 1 : 0);
}

void RolloutCollector::end_episode(int env, CollectStats& stats) {
  CompletedEpisode ep;
  ep.stats = envs_[env].episode();
  ep.terms = term_sums_[env];
  ep.env = env;
  ep.partial = partial_[env] != 0;
  stats.episodes.push_back(ep);
  term_sums_[env] = {};
  partial_[env] = 0;
}

CollectStats RolloutCollector::collect(const nets::PolicyBundle& bundle, const growth::Broadcast& broadcast,
                                       RolloutBuffer& buffer, Rng& policy_rng) {
  const int E = config_.num_envs;
  const int T = config_.horizon;
  const int obs_dim = envs_.front().layout().size();
  const int J = bundle.joints;
  if (buffer.num_envs != E || buffer.horizon != T || buffer.obs_dim != obs_dim || buffer.act_dim != J) {
    throw ShapeError("rollout buffer does not match the collector");
  }
  buffer.clear_marks();
  buffer.log_std = bundle.log_std;
  clock_.set_frequency(broadcast.f_policy);

  CollectStats stats;
  nets::Mat<double> raw(obs_dim, E);
  std::vector<double> action(static_cast<std::size_t>(J));
  std::vector<double> window_flat(static_cast<std::size_t>(dataset_.input_width()));

  auto run_tick = [&](int e, std::span<const double> executed) {
    try {
      return envs_[e].tick(executed, broadcast);
    } catch (const SimulationBlowupError& err) {
      throw SimulationBlowupError(err.what(), err.step(), e, seed_);
    }
  };

  for (int step = 0; step < T; ++step) {
    for (int e = 0; e < E; ++e) {
      const std::vector<double> o = envs_[e].observe_for_policy();
      raw.col(e) = Eigen::Map<const nets::Vec<double>>(o.data(), obs_dim);
    }
    const nets::Mat<float> x = bundle.obs_scaling.apply(raw);
    const nets::BatchSample sample = nets::sample_actions(bundle.actor, bundle.log_std, x, policy_rng);
    const nets::Mat<float> values = bundle.critic.forward(x);
    const auto base = static_cast<Eigen::Index>(buffer.index(step, 0));
    buffer.obs.middleCols(base, E) = x;
    buffer.actions.middleCols(base, E) = sample.actions;
    buffer.mean.middleCols(base, E) = sample.mean;

    const int ticks = clock_.next_period();
    ++stats.queries;
    for (int e = 0; e < E; ++e) {
      const std::size_t i = buffer.index(step, e);
      buffer.log_prob[i] = sample.log_prob[e];
      buffer.values[i] = values(0, e);
      buffer.growth[i] = broadcast.g;
      buffer.f_policy[i] = broadcast.f_policy;

      for (int j = 0; j < J; ++j) action[j] = sample.actions(j, e);
      const std::span<const double> executed = envs_[e].select_action(action);
      double reward = 0.0;
      sim::TerminationReason reason = sim::TerminationReason::None;
      for (int k = 0; k < ticks; ++k) {
        const sim::TickResult r = run_tick(e, executed);
        reward += r.reward.total;
        stats.reward_sum += r.reward.total;
        ++stats.ticks;
        for (int t = 0; t < rewards::kTermCount; ++t) {
          term_sums_[e][t] += r.reward.terms[t];
          stats.term_sums[t] += r.reward.terms[t];
        }
        windows_[e].push(envs_[e].estimator_frame());
        if (r.termination != sim::TerminationReason::None) {
          reason = r.termination;
          break;
        }
      }

      if (sample_rng_.bernoulli(config_.estimator_sample_prob)) {
        windows_[e].flatten_into(window_flat);
        const nets::Mat<float> scaled = bundle.est_scaling.apply(window_flat);
        dataset_.add(std::span<const float>(scaled.data(), static_cast<std::size_t>(scaled.size())),
                     sim::base_velocity_body(envs_[e].state()));
      }

      if (reason == sim::TerminationReason::Timeout) {
        // Time limits are not part of the task: bootstrap from the final state.
        const std::vector<double> o =
            sim::assemble_observation(envs_[e].state(), envs_[e].actuator(), envs_[e].command());
        const nets::Mat<float> v = bundle.critic.forward(bundle.obs_scaling.apply(o));
        reward += config_.gamma * v(0, 0);
      }
      buffer.rewards[i] = reward;
      buffer.dones[i] = reason != sim::TerminationReason::None ? 1 : 0;
      buffer.written[i] = 1;
      if (reason != sim::TerminationReason::None) {
        end_episode(e, stats);
        envs_[e].reset();
        windows_[e].clear();
      }
    }
  }

  for (int e = 0; e < E; ++e) {
    const std::vector<double> o = sim::assemble_observation(envs_[e].state(), envs_[e].actuator(), envs_[e].command());
    raw.col(e) = Eigen::Map<const nets::Vec<double>>(o.data(), obs_dim);
  }
  const nets::Mat<float> last = bundle.critic.forward(bundle.obs_scaling.apply(raw));
  for (int e = 0; e < E; ++e) buffer.last_values[e] = last(0, e);
  return stats;
}

}  // namespace sata::ppo
