#include "sata/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sata/error.hpp"

namespace sata::ppo {

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo.clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda must lie in [0, 1]");
  if (epochs <= 0 || minibatches <= 0) throw ConfigError("ppo.epochs and ppo.minibatches must be positive");
  if (!(entropy_coef >= 0.0) || !(value_coef >= 0.0)) throw ConfigError("loss coefficients must be >= 0");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("ppo.lr_min must be positive and <= ppo.lr_max");
  if (!(learning_rate >= lr_min && learning_rate <= lr_max)) {
    throw ConfigError("ppo.learning_rate must lie in [lr_min, lr_max]");
  }
  if (!(desired_kl > 0.0)) throw ConfigError("ppo.desired_kl must be positive");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be positive");
}

double adapt_learning_rate(double lr, double kl, const PpoConfig& config) {
  if (!config.adaptive_lr) return lr;
  if (kl > 2.0 * config.desired_kl) {
    lr /= 1.5;
  } else if (kl > 0.0 && kl < 0.5 * config.desired_kl) {
    lr *= 1.5;
  }
  return std::clamp(lr, config.lr_min, config.lr_max);
}

template <typename S>
PpoLoss<S> ppo_loss(const nets::Mlp<S>& actor, const nets::Vec<S>& log_std, const nets::Mlp<S>& critic,
                    const PpoBatch<S>& b, const PpoConfig& cfg) {
  using Mat = nets::Mat<S>;
  using Vec = nets::Vec<S>;
  const auto n = b.obs.cols();
  if (b.actions.cols() != n || b.old_mean.cols() != n || b.old_log_prob.size() != n || b.old_values.size() != n ||
      b.advantages.size() != n || b.returns.size() != n || b.actions.rows() != log_std.size() ||
      b.old_log_std.size() != log_std.size()) {
    throw ShapeError("ppo batch fields disagree in size");
  }
  const S inv_n = S(1) / S(n);
  const S clip = S(cfg.clip);

  typename nets::Mlp<S>::Tape actor_tape;
  const Mat mean = actor.forward(b.obs, actor_tape);
  const Vec logp = nets::gaussian_log_prob<S>(mean, log_std, b.actions);
  const Vec inv_var = (S(-2) * log_std.array()).exp().matrix();
  const Mat d = b.actions - mean;

  PpoLoss<S> out;
  Vec d_logp(n);  // dLoss/dlogp per sample
  for (Eigen::Index i = 0; i < n; ++i) {
    const S ratio = std::exp(logp[i] - b.old_log_prob[i]);
    const S clipped = std::clamp(ratio, S(1) - clip, S(1) + clip);
    const S a = b.advantages[i];
    const S unclipped_obj = -a * ratio;
    const S clipped_obj = -a * clipped;
    if (unclipped_obj >= clipped_obj) {
      out.surrogate += unclipped_obj;
      d_logp[i] = unclipped_obj * inv_n;
    } else {
      out.surrogate += clipped_obj;
      d_logp[i] = S(0);
    }
  }
  out.surrogate *= inv_n;

  // Entropy of the diagonal Gaussian does not depend on the observation.
  const S half_log_2pie = S(0.5 * std::log(2.0 * M_PI * std::exp(1.0)));
  out.entropy = log_std.sum() + half_log_2pie * S(log_std.size());

  typename nets::Mlp<S>::Tape critic_tape;
  const Mat v = critic.forward(b.obs, critic_tape);
  Mat d_v(1, n);
  const S vc = S(cfg.value_coef);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S err = v(0, i) - b.returns[i];
    if (!cfg.clipped_value_loss) {
      out.value += err * err;
      d_v(0, i) = vc * S(2) * err * inv_n;
      continue;
    }
    const S delta = v(0, i) - b.old_values[i];
    const S delta_c = std::clamp(delta, -clip, clip);
    const S err_c = b.old_values[i] + delta_c - b.returns[i];
    if (err * err >= err_c * err_c) {
      out.value += err * err;
      d_v(0, i) = vc * S(2) * err * inv_n;
    } else {
      out.value += err_c * err_c;
      d_v(0, i) = (delta_c == delta) ? vc * S(2) * err_c * inv_n : S(0);
    }
  }
  out.value *= inv_n;

  out.total = out.surrogate + vc * out.value - S(cfg.entropy_coef) * out.entropy;

  // d logp / d mean = (a - mean) / sigma^2; d logp / d log_std = z^2 - 1.
  const Mat d_mean = ((d.array().colwise() * inv_var.array()).rowwise() * d_logp.transpose().array()).matrix();
  out.grad_actor = Vec::Zero(static_cast<Eigen::Index>(actor.size()));
  actor.backward(actor_tape, d_mean, out.grad_actor);
  const Mat z2 = d.array().square().colwise() * inv_var.array();
  out.grad_log_std = ((z2.array() - S(1)).rowwise() * d_logp.transpose().array()).rowwise().sum().matrix();
  out.grad_log_std.array() -= S(cfg.entropy_coef);
  out.grad_critic = Vec::Zero(static_cast<Eigen::Index>(critic.size()));
  critic.backward(critic_tape, d_v, out.grad_critic);

  // KL(old || new) for diagonal Gaussians, summed over action dims.
  const Vec old_var = (S(2) * b.old_log_std.array()).exp().matrix();
  const Mat dm = b.old_mean - mean;
  S kl = S(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < log_std.size(); ++k) {
      kl += log_std[k] - b.old_log_std[k] + (old_var[k] + dm(k, i) * dm(k, i)) * inv_var[k] * S(0.5) - S(0.5);
    }
  }
  out.kl = kl * inv_n;

  if (!std::isfinite(static_cast<double>(out.total)) || !out.grad_actor.allFinite() || !out.grad_critic.allFinite() ||
      !out.grad_log_std.allFinite()) {
    throw GradientExplosionError("non-finite ppo loss or gradient");
  }
  return out;
}

template PpoLoss<float> ppo_loss(const nets::Mlp<float>&, const nets::Vec<float>&, const nets::Mlp<float>&,
                                 const PpoBatch<float>&, const PpoConfig&);
template PpoLoss<double> ppo_loss(const nets::Mlp<double>&, const nets::Vec<double>&, const nets::Mlp<double>&,
                                  const PpoBatch<double>&, const PpoConfig&);

UpdateStats ppo_update(nets::PolicyBundle& bundle, const RolloutBuffer& buffer, const PpoConfig& config, Rng& rng) {
  if (!buffer.complete()) throw ConfigError("ppo update on an incompletely written buffer");
  const nets::PolicyBundle snapshot = bundle;
  const auto n = static_cast<Eigen::Index>(buffer.size());
  const Eigen::Index mb = std::max<Eigen::Index>(1, n / config.minibatches);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  const auto na = static_cast<Eigen::Index>(bundle.actor.size());
  const auto ns = static_cast<Eigen::Index>(bundle.log_std.size());
  const auto nc = static_cast<Eigen::Index>(bundle.critic.size());
  nets::Vec<float> params(na + ns + nc);
  nets::Vec<float> grad(na + ns + nc);

  UpdateStats stats;
  int updates = 0;
  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (int m = 0; m < config.minibatches; ++m) {
        const Eigen::Index begin = m * mb;
        const Eigen::Index count = (m + 1 == config.minibatches) ? n - begin : mb;
        if (count <= 0) continue;
        PpoBatch<float> batch;
        batch.obs.resize(buffer.obs_dim, count);
        batch.actions.resize(buffer.act_dim, count);
        batch.old_mean.resize(buffer.act_dim, count);
        batch.old_log_std = buffer.log_std;
        batch.old_log_prob.resize(count);
        batch.old_values.resize(count);
        batch.advantages.resize(count);
        batch.returns.resize(count);
        for (Eigen::Index c = 0; c < count; ++c) {
          const Eigen::Index src = order[static_cast<std::size_t>(begin + c)];
          const auto s = static_cast<std::size_t>(src);
          batch.obs.col(c) = buffer.obs.col(src);
          batch.actions.col(c) = buffer.actions.col(src);
          batch.old_mean.col(c) = buffer.mean.col(src);
          batch.old_log_prob[c] = static_cast<float>(buffer.log_prob[s]);
          batch.old_values[c] = static_cast<float>(buffer.values[s]);
          batch.advantages[c] = static_cast<float>(buffer.advantages[s]);
          batch.returns[c] = static_cast<float>(buffer.returns[s]);
        }

        const PpoLoss<float> loss = ppo_loss<float>(bundle.actor, bundle.log_std, bundle.critic, batch, config);
        bundle.learning_rate = adapt_learning_rate(bundle.learning_rate, loss.kl, config);

        grad << loss.grad_actor, loss.grad_log_std, loss.grad_critic;
        const double norm = grad.norm();
        if (norm > config.max_grad_norm) grad *= static_cast<float>(config.max_grad_norm / (norm + 1e-6));
        params << bundle.actor.params(), bundle.log_std, bundle.critic.params();
        nets::adam_step(params, grad, bundle.policy_adam, bundle.learning_rate);
        bundle.actor.params() = params.head(na);
        bundle.log_std = params.segment(na, ns);
        bundle.critic.params() = params.tail(nc);
        bundle.clamp_log_std();
        bundle.check_finite();

        stats.surrogate += loss.surrogate;
        stats.value += loss.value;
        stats.entropy += loss.entropy;
        stats.kl += loss.kl;
        stats.grad_norm += norm;
        ++updates;
      }
    }
  } catch (const GradientExplosionError& e) {
    bundle = snapshot;
    UpdateStats aborted;
    aborted.aborted = true;
    aborted.error = e.what();
    aborted.learning_rate = bundle.learning_rate;
    return aborted;
  }
  if (updates > 0) {
    const double inv = 1.0 / updates;
    stats.surrogate *= inv;
    stats.value *= inv;
    stats.entropy *= inv;
    stats.kl *= inv;
    stats.grad_norm *= inv;
  }
  stats.learning_rate = bundle.learning_rate;
  return stats;
}

}  // namespace sata::ppo
