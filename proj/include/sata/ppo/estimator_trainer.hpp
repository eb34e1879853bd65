#pragma once

#include <vector>

#include "sata/nets/policy.hpp"
#include "sata/ppo/rollout.hpp"
#include "sata/rng.hpp"

namespace sata::ppo {

struct EstimatorTrainConfig {
  int epochs = 8;
  int minibatch = 256;
  double learning_rate = 1e-3;
  int holdout_every = 5;  // every 5th sample is held out

  void validate() const;
};

struct EstimatorReport {
  std::vector<double> train_rmse;  // per epoch, m/s, norm of the 3-vector error
  double holdout_rmse = 0.0;
  double baseline_rmse = 0.0;      // holdout error of predicting the training mean
  std::size_t train_samples = 0;
  std::size_t holdout_samples = 0;
};

/// RMSE of the velocity-vector error over the columns of scaled inputs.
double estimator_rmse(const nets::Mlp<float>& estimator, const nets::Mat<float>& inputs,
                      const nets::Mat<float>& targets);

/// Minibatch MSE regression of bundle.estimator. Throws ConfigError on an
/// empty dataset or one too small to hold out a sample.
EstimatorReport train_estimator(nets::PolicyBundle& bundle, const nets::Mat<float>& inputs,
                                const nets::Mat<float>& targets, const EstimatorTrainConfig& config, Rng& rng);

inline EstimatorReport train_estimator(nets::PolicyBundle& bundle, const EstimatorDataset& data,
                                       const EstimatorTrainConfig& config, Rng& rng) {
  return train_estimator(bundle, data.inputs(), data.targets(), config, rng);
}

}  // namespace sata::ppo
