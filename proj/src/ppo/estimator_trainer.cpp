#include "sata/ppo/estimator_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sata/error.hpp"

namespace sata::ppo {

void EstimatorTrainConfig::validate() const {
  if (epochs <= 0 || minibatch <= 0) throw ConfigError("estimator epochs and minibatch must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("estimator learning rate must be positive");
  if (holdout_every < 2) throw ConfigError("estimator holdout_every must be >= 2");
}

double estimator_rmse(const nets::Mlp<float>& estimator, const nets::Mat<float>& inputs,
                      const nets::Mat<float>& targets) {
  if (inputs.cols() == 0) return 0.0;
  double sum = 0.0;
  constexpr Eigen::Index kChunk = 2048;
  for (Eigen::Index at = 0; at < inputs.cols(); at += kChunk) {
    const Eigen::Index n = std::min(kChunk, inputs.cols() - at);
    const nets::Mat<float> y = estimator.forward(inputs.middleCols(at, n));
    sum += (y - targets.middleCols(at, n)).cast<double>().squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(inputs.cols()));
}

EstimatorReport train_estimator(nets::PolicyBundle& bundle, const nets::Mat<float>& inputs,
                                const nets::Mat<float>& targets, const EstimatorTrainConfig& config, Rng& rng) {
  config.validate();
  if (inputs.cols() == 0) throw ConfigError("estimator dataset is empty");
  if (inputs.cols() != targets.cols() || targets.rows() != 3) throw ShapeError("estimator dataset shape mismatch");
  if (inputs.rows() != bundle.estimator.spec().input) throw ShapeError("estimator input width mismatch");

  std::vector<Eigen::Index> train_idx;
  std::vector<Eigen::Index> hold_idx;
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    ((i % config.holdout_every) == config.holdout_every - 1 ? hold_idx : train_idx).push_back(i);
  }
  if (train_idx.empty() || hold_idx.empty()) throw ConfigError("estimator dataset is too small to hold out samples");

  auto gather = [&](const std::vector<Eigen::Index>& idx, const nets::Mat<float>& src) {
    nets::Mat<float> out(src.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = src.col(idx[c]);
    return out;
  };
  const nets::Mat<float> hold_x = gather(hold_idx, inputs);
  const nets::Mat<float> hold_y = gather(hold_idx, targets);

  EstimatorReport report;
  report.train_samples = train_idx.size();
  report.holdout_samples = hold_idx.size();
  {
    nets::Vec<double> mean = nets::Vec<double>::Zero(3);
    for (auto i : train_idx) mean += targets.col(i).cast<double>();
    mean /= static_cast<double>(train_idx.size());
    report.baseline_rmse =
        std::sqrt((hold_y.cast<double>().colwise() - mean).squaredNorm() / static_cast<double>(hold_idx.size()));
  }

  const auto batch = static_cast<std::size_t>(config.minibatch);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng.engine());
    double sq = 0.0;
    for (std::size_t at = 0; at < train_idx.size(); at += batch) {
      const std::size_t n = std::min(batch, train_idx.size() - at);
      const std::vector<Eigen::Index> slice(train_idx.begin() + static_cast<long>(at),
                                            train_idx.begin() + static_cast<long>(at + n));
      const nets::Mat<float> x = gather(slice, inputs);
      const nets::Mat<float> y = gather(slice, targets);
      const nets::LossGrad<float> lg = nets::estimator_mse_loss<float>(bundle.estimator, x, y);
      sq += static_cast<double>(lg.loss) * 3.0 * static_cast<double>(n);
      nets::adam_step(bundle.estimator.params(), lg.grad, bundle.estimator_adam, config.learning_rate);
    }
    report.train_rmse.push_back(std::sqrt(sq / static_cast<double>(train_idx.size())));
  }
  report.holdout_rmse = estimator_rmse(bundle.estimator, hold_x, hold_y);
  return report;
}

}  // namespace sata::ppo
