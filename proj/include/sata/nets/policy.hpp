#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "sata/nets/mlp.hpp"
#include "sata/rng.hpp"

namespace sata::nets {

inline constexpr double kLogStdMin = -4.0;
inline constexpr double kLogStdMax = 1.0;
inline constexpr int kEstimatorFrames = 11;

/// Frame width of the estimator input: [q (J), qdot (J), a (3), w (3), g (3)].
inline int estimator_frame_width(int joints) { return 2 * joints + 9; }

/// Fixed affine input map x' = (x - offset) * scale, stored with the weights.
struct InputScaling {
  Vec<float> offset;
  Vec<float> scale;

  static InputScaling identity(int width);
  int width() const { return static_cast<int>(offset.size()); }
  Mat<float> apply(const Mat<double>& raw) const;
  Mat<float> apply(std::span<const double> raw) const;
};

/// Observation scaling for the layout [v, w, g, q, qdot, cmd, tau, zeta].
InputScaling observation_scaling(std::span<const double> q_default, double tau_end);
/// Scaling for an 11-frame estimator window.
InputScaling estimator_scaling(std::span<const double> q_default);

struct AdamState {
  Vec<float> m;
  Vec<float> v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n);
};

/// One Adam step on `params` in place.
void adam_step(Eigen::Ref<Vec<float>> params, const Vec<float>& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct BundleSpec {
  int joints = 8;
  std::vector<int> actor_hidden{128, 64, 32};
  std::vector<int> critic_hidden{128, 64, 32};
  std::vector<int> estimator_hidden{128, 64, 32};
  Activation activation = Activation::Elu;
  double init_log_std = 0.0;
  double hidden_gain = 1.0;  // orthogonal init gain of the hidden layers
  double actor_output_gain = 0.01;

  int observation_width() const { return 12 + 4 * joints; }
  int estimator_width() const { return kEstimatorFrames * estimator_frame_width(joints); }
  /// Throws ConfigError.
  void validate() const;
};

/// Actor, critic, estimator and optimizer state for one run.
struct PolicyBundle {
  int joints = 0;
  Mlp<float> actor;
  Vec<float> log_std;
  Mlp<float> critic;
  Mlp<float> estimator;
  AdamState policy_adam;     // over [actor, log_std, critic]
  AdamState estimator_adam;
  double learning_rate = 1e-3;
  std::uint64_t iteration = 0;
  InputScaling obs_scaling;
  InputScaling est_scaling;

  static PolicyBundle create(const BundleSpec& spec, std::span<const double> q_default, double tau_end, Rng& rng);

  std::size_t policy_parameter_count() const { return actor.size() + log_std.size() + critic.size(); }
  void clamp_log_std();
  /// Throws GradientExplosionError when any parameter is non-finite.
  void check_finite() const;
};

/// Sum over action dimensions of the diagonal Gaussian log density.
template <typename S>
Vec<S> gaussian_log_prob(const Mat<S>& mean, const Vec<S>& log_std, const Mat<S>& actions) {
  const S half_log_2pi = S(0.5 * std::log(2.0 * M_PI));
  const Vec<S> inv_var = (S(-2) * log_std.array()).exp().matrix();
  const Mat<S> d = actions - mean;
  Vec<S> out = (d.array().square().colwise() * inv_var.array()).colwise().sum().transpose() * S(-0.5);
  out.array() -= log_std.sum() + half_log_2pi * S(log_std.size());
  return out;
}

struct BatchSample {
  Mat<float> actions;
  Mat<float> mean;
  Vec<float> log_prob;
};

/// Samples one action per column of already-scaled observations.
BatchSample sample_actions(const Mlp<float>& actor, const Vec<float>& log_std, const Mat<float>& obs, Rng& rng);

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

/// mean + exp(log_std) * N(0, 1), evaluated in double on an unscaled input.
ActionSample sample_action(const Mlp<double>& actor, const Vec<double>& log_std, std::span<const double> obs,
                           Rng& rng);

// ---------------------------------------------------------------------------
// Losses with exact gradients. Every function throws GradientExplosionError
// when the loss or gradient is non-finite.

template <typename S>
struct LossGrad {
  S loss = S(0);
  Vec<S> grad;          // network parameters
  Vec<S> grad_log_std;  // actor losses only
};

/// -(1/N) sum_i w_i log pi(a_i | o_i).
template <typename S>
LossGrad<S> actor_log_prob_loss(const Mlp<S>& actor, const Vec<S>& log_std, const Mat<S>& obs,
                                const Mat<S>& actions, const Vec<S>& weights);

/// (1/2N) sum_i (V(o_i) - y_i)^2.
template <typename S>
LossGrad<S> critic_value_loss(const Mlp<S>& critic, const Mat<S>& obs, const Vec<S>& targets);

/// Mean over samples and components of (f(x) - y)^2.
template <typename S>
LossGrad<S> estimator_mse_loss(const Mlp<S>& estimator, const Mat<S>& inputs, const Mat<S>& targets);

// ---------------------------------------------------------------------------
// Estimator input

/// Rolling window of the last 11 estimator frames, oldest first. Histories
/// shorter than 11 frames are front-padded with the oldest frame.
class EstimatorWindow {
 public:
  explicit EstimatorWindow(int joints, int frames = kEstimatorFrames);

  void push(std::span<const double> frame);
  void clear() { frames_.clear(); }
  bool empty() const { return frames_.empty(); }
  std::size_t filled() const { return frames_.size(); }
  int frame_width() const { return frame_width_; }
  int width() const { return frame_width_ * capacity_; }

  /// Throws InvalidInputError when empty.
  std::vector<double> flatten() const;
  void flatten_into(std::span<double> out) const;

 private:
  int frame_width_;
  int capacity_;
  std::deque<std::vector<double>> frames_;
};

std::array<double, 3> estimate_velocity(const PolicyBundle& bundle, const EstimatorWindow& window);

}  // namespace sata::nets
