#include "sata/ppo/trainer.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sata/error.hpp"
#include "sata/ppo/gae.hpp"

namespace sata::ppo {

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("run.iterations must be >= 0");
  if (rollout.num_envs <= 0 || rollout.horizon <= 0) throw ConfigError("ppo.num_envs and ppo.horizon must be positive");
  if (estimator_interval <= 0 || checkpoint_interval <= 0 || reward_window <= 0) {
    throw ConfigError("intervals and reward window must be positive");
  }
  growth.validate();
  env.validate();
  nets.validate();
  ppo.validate();
  estimator.validate();
  if (!(rollout.estimator_sample_prob >= 0.0 && rollout.estimator_sample_prob <= 1.0) || rollout.estimator_capacity == 0) {
    throw ConfigError("estimator sampling needs a probability in [0, 1] and a positive capacity");
  }
}

std::vector<std::string> metrics_columns() {
  std::vector<std::string> c = {"iteration", "t", "G", "tau_limit", "f_policy", "mean_episode_reward",
                                "mean_episode_reward_base", "episode_length"};
  for (int i = 0; i < rewards::kTermCount; ++i) c.push_back("rew_" + std::string(rewards::term_name(i)));
  for (const char* s : {"step_reward", "episodes", "failures", "kl", "surrogate_loss", "value_loss", "entropy",
                        "learning_rate", "estimator_rmse", "estimator_holdout_rmse"}) {
    c.emplace_back(s);
  }
  return c;
}

std::string metrics_header_line() {
  std::string out;
  for (const auto& c : metrics_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{:.10g}", x);
}

}  // namespace

std::string format_metrics_row(const IterationMetrics& m) {
  std::string out = fmt::format("{},{},{},{},{},{},{},{}", m.iteration, num(m.t), num(m.g), num(m.tau_limit),
                                num(m.f_policy), num(m.mean_episode_reward), num(m.mean_episode_reward_base),
                                num(m.mean_episode_length));
  for (double v : m.term_means) out += "," + num(v);
  out += fmt::format(",{},{},{},{},{},{},{},{},{},{}", num(m.step_reward), m.episodes, m.failures, num(m.kl),
                     num(m.surrogate_loss), num(m.value_loss), num(m.entropy), num(m.learning_rate),
                     num(m.estimator_rmse), num(m.estimator_holdout_rmse));
  return out;
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  const sim::RobotModel model = sim::RobotModel::desk_quadruped();
  if (config.nets.joints != model.joint_count()) throw ConfigError("nets joint count does not match the robot");

  Rng init_rng(derive_seed(config.seed, 104));
  Rng policy_rng(derive_seed(config.seed, 101));
  Rng update_rng(derive_seed(config.seed, 102));
  Rng estimator_rng(derive_seed(config.seed, 103));

  TrainResult result;
  result.bundle = nets::PolicyBundle::create(config.nets, model.q_default, config.growth.tau_end, init_rng);
  nets::PolicyBundle& bundle = result.bundle;
  bundle.learning_rate = config.ppo.learning_rate;

  RolloutConfig rollout = config.rollout;
  rollout.gamma = config.ppo.gamma;
  RolloutCollector collector(rollout, config.env, model, derive_seed(config.seed, 100));
  RolloutBuffer buffer = RolloutBuffer::create(config.rollout.num_envs, config.rollout.horizon,
                                               config.nets.observation_width(), config.nets.joints);
  growth::GrowthState gstate = growth::initial_state(config.growth);

  struct EpisodeRecord {
    double reward;
    double reward_base;
    double length;
    std::array<double, rewards::kTermCount> terms;
  };
  std::deque<EpisodeRecord> recent;
  const double episode_limit = config.env.termination.episode_length;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double est_rmse = nan;
  double est_holdout = nan;

  if (hooks.on_checkpoint) hooks.on_checkpoint(bundle, 0);

  for (int it = 1; it <= config.iterations; ++it) {
    gstate = growth::advance(gstate, static_cast<std::uint64_t>(config.rollout.horizon), config.growth);
    const growth::Broadcast bc = growth::broadcast(gstate, config.growth);

    const CollectStats cs = collector.collect(bundle, bc, buffer, policy_rng);
    GaeResult gae = compute_gae(buffer.rewards, buffer.values, buffer.dones, buffer.last_values, buffer.num_envs,
                                buffer.horizon, config.ppo.gamma, config.ppo.lambda);
    buffer.returns = std::move(gae.returns);
    normalize_advantages(gae.advantages);
    buffer.advantages = std::move(gae.advantages);
    const UpdateStats us = ppo_update(bundle, buffer, config.ppo, update_rng);
    if (us.aborted) spdlog::warn("iteration {}: update aborted, parameters kept: {}", it, us.error);
    bundle.iteration = static_cast<std::uint64_t>(it);

    if (it % config.estimator_interval == 0 || it == config.iterations) {
      if (!collector.estimator_data().empty() && collector.estimator_data().size() >= 2 * static_cast<std::size_t>(
                                                                                           config.estimator.holdout_every)) {
        const EstimatorReport rep = train_estimator(bundle, collector.estimator_data(), config.estimator, estimator_rng);
        est_rmse = rep.train_rmse.back();
        est_holdout = rep.holdout_rmse;
        result.estimator = rep;
      }
    }

    IterationMetrics m;
    m.iteration = it;
    m.t = gstate.t;
    m.g = bc.g;
    m.tau_limit = bc.tau_limit;
    m.f_policy = bc.f_policy;
    for (const auto& ep : cs.episodes) {
      ++m.episodes;
      if (sim::is_failure(ep.stats.termination)) ++m.failures;
      if (ep.partial) continue;
      recent.push_back({ep.stats.reward, ep.stats.reward_base, ep.stats.duration, ep.terms});
      if (static_cast<int>(recent.size()) > config.reward_window) recent.pop_front();
    }
    if (recent.empty()) {
      m.mean_episode_reward = m.mean_episode_reward_base = m.mean_episode_length = nan;
      m.term_means.fill(nan);
    } else {
      const double inv = 1.0 / static_cast<double>(recent.size());
      m.mean_episode_reward = m.mean_episode_reward_base = m.mean_episode_length = 0.0;
      m.term_means.fill(0.0);
      for (const auto& r : recent) {
        m.mean_episode_reward += r.reward * inv;
        m.mean_episode_reward_base += r.reward_base * inv;
        m.mean_episode_length += r.length * inv;
        for (int k = 0; k < rewards::kTermCount; ++k) m.term_means[k] += r.terms[k] / episode_limit * inv;
      }
    }
    double step_sum = 0.0;
    for (double r : buffer.rewards) step_sum += r;
    m.step_reward = step_sum / static_cast<double>(buffer.size());
    m.kl = us.kl;
    m.surrogate_loss = us.surrogate;
    m.value_loss = us.value;
    m.entropy = us.entropy;
    m.learning_rate = us.learning_rate;
    m.estimator_rmse = est_rmse;
    m.estimator_holdout_rmse = est_holdout;
    result.metrics.push_back(m);
    if (hooks.on_iteration) hooks.on_iteration(m);

    if (it % 50 == 0 || it == 1) {
      spdlog::info("iter {:5d}  G {:.3f}  tau {:.2f}  f {:.1f}  R {:8.3f}  Rbase {:8.3f}  len {:5.2f}  kl {:.4f}  lr {:.2e}",
                   it, bc.g, bc.tau_limit, bc.f_policy, m.mean_episode_reward, m.mean_episode_reward_base,
                   m.mean_episode_length, m.kl, m.learning_rate);
    }
    if (hooks.on_checkpoint && (it % config.checkpoint_interval == 0 || it == config.iterations)) {
      hooks.on_checkpoint(bundle, it);
    }
  }
  return result;
}

}  // namespace sata::ppo
