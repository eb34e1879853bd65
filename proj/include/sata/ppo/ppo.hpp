#pragma once

#include <string>

#include "sata/nets/policy.hpp"
#include "sata/ppo/rollout.hpp"
#include "sata/rng.hpp"

namespace sata::ppo {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 5;
  int minibatches = 4;
  double entropy_coef = 0.01;
  double value_coef = 1.0;
  double learning_rate = 1e-3;
  bool adaptive_lr = true;
  double desired_kl = 0.01;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double max_grad_norm = 1.0;
  bool clipped_value_loss = true;

  /// Throws ConfigError.
  void validate() const;
};

template <typename S>
struct PpoBatch {
  nets::Mat<S> obs;       // scaled observations, one column per sample
  nets::Mat<S> actions;
  nets::Mat<S> old_mean;
  nets::Vec<S> old_log_std;
  nets::Vec<S> old_log_prob;
  nets::Vec<S> old_values;
  nets::Vec<S> advantages;
  nets::Vec<S> returns;
};

template <typename S>
struct PpoLoss {
  S total = S(0);
  S surrogate = S(0);
  S value = S(0);
  S entropy = S(0);
  S kl = S(0);  // mean KL(old || new) over the batch
  nets::Vec<S> grad_actor;
  nets::Vec<S> grad_log_std;
  nets::Vec<S> grad_critic;
};

/// surrogate + value_coef * value - entropy_coef * entropy, with its exact
/// gradient. Throws GradientExplosionError on a non-finite result.
template <typename S>
PpoLoss<S> ppo_loss(const nets::Mlp<S>& actor, const nets::Vec<S>& log_std, const nets::Mlp<S>& critic,
                    const PpoBatch<S>& batch, const PpoConfig& config);

struct UpdateStats {
  double surrogate = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm
  bool aborted = false;
  std::string error;
};

/// Epochs x minibatches of clipped-surrogate updates on a buffer whose
/// advantages and returns are filled. On a non-finite loss the bundle is
/// restored to its state before the call and the stats report the abort.
UpdateStats ppo_update(nets::PolicyBundle& bundle, const RolloutBuffer& buffer, const PpoConfig& config, Rng& rng);

/// Learning-rate rule driven by the measured KL, clamped to [lr_min, lr_max].
double adapt_learning_rate(double lr, double kl, const PpoConfig& config);

}  // namespace sata::ppo
