#include "sata/nets/policy.hpp"

#include <algorithm>
#include <cmath>

namespace sata::nets {

Activation parse_activation(const std::string& name) {
  if (name == "elu") return Activation::Elu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + name + "' (expected elu, tanh or relu)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "elu";
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l) n += static_cast<std::size_t>(layer_in(l) + 1) * layer_out(l);
  return n;
}

void MlpSpec::validate() const {
  if (input <= 0 || output <= 0) throw ConfigError("network input and output widths must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden widths must be positive");
  }
  if (init != "orthogonal") throw ConfigError("unknown initialization scheme '" + init + "'");
  if (!(output_gain >= 0.0) || !std::isfinite(output_gain)) throw ConfigError("output gain must be finite and >= 0");
}

// ---------------------------------------------------------------------------

InputScaling InputScaling::identity(int width) {
  return InputScaling{Vec<float>::Zero(width), Vec<float>::Ones(width)};
}

Mat<float> InputScaling::apply(const Mat<double>& raw) const {
  if (raw.rows() != offset.size()) throw ShapeError("input scaling width mismatch");
  return ((raw.cast<float>().colwise() - offset).array().colwise() * scale.array()).matrix();
}

Mat<float> InputScaling::apply(std::span<const double> raw) const {
  const Eigen::Map<const Mat<double>> m(raw.data(), static_cast<Eigen::Index>(raw.size()), 1);
  return apply(Mat<double>(m));
}

InputScaling observation_scaling(std::span<const double> q_default, double tau_end) {
  const int J = static_cast<int>(q_default.size());
  const int n = 12 + 4 * J;
  InputScaling s = InputScaling::identity(n);
  for (int i = 0; i < 3; ++i) s.scale[i] = 2.0f;
  for (int i = 3; i < 6; ++i) s.scale[i] = 0.25f;
  for (int j = 0; j < J; ++j) {
    s.offset[9 + j] = static_cast<float>(q_default[j]);
    s.scale[9 + J + j] = 0.05f;
    s.scale[12 + 2 * J + j] = static_cast<float>(1.0 / tau_end);
  }
  s.scale[9 + 2 * J] = 2.0f;
  s.scale[10 + 2 * J] = 2.0f;
  s.scale[11 + 2 * J] = 0.25f;
  return s;
}

InputScaling estimator_scaling(std::span<const double> q_default) {
  const int J = static_cast<int>(q_default.size());
  const int fw = estimator_frame_width(J);
  InputScaling s = InputScaling::identity(fw * kEstimatorFrames);
  for (int f = 0; f < kEstimatorFrames; ++f) {
    const int base = f * fw;
    for (int j = 0; j < J; ++j) {
      s.offset[base + j] = static_cast<float>(q_default[j]);
      s.scale[base + J + j] = 0.05f;
    }
    for (int i = 0; i < 3; ++i) {
      s.scale[base + 2 * J + i] = 0.1f;
      s.scale[base + 2 * J + 3 + i] = 0.25f;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

AdamState AdamState::zeros(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return AdamState{Vec<float>::Zero(m), Vec<float>::Zero(m), 0};
}

void adam_step(Eigen::Ref<Vec<float>> params, const Vec<float>& grad, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (grad.size() != params.size() || state.m.size() != params.size()) throw ShapeError("adam width mismatch");
  ++state.step;
  const auto b1 = static_cast<float>(beta1);
  const auto b2 = static_cast<float>(beta2);
  state.m = b1 * state.m + (1.0f - b1) * grad;
  state.v = b2 * state.v + (1.0f - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const auto step = static_cast<float>(lr / c1);
  const auto root_c2 = static_cast<float>(std::sqrt(c2));
  params.array() -= step * state.m.array() / (state.v.array().sqrt() / root_c2 + static_cast<float>(eps));
}

// ---------------------------------------------------------------------------

void BundleSpec::validate() const {
  if (joints <= 0) throw ConfigError("nets.joints must be positive");
  for (const auto* widths : {&actor_hidden, &critic_hidden, &estimator_hidden}) {
    if (widths->empty()) throw ConfigError("each network needs at least one hidden layer");
    for (int h : *widths) {
      if (h <= 0) throw ConfigError("hidden widths must be positive");
    }
  }
  if (!(init_log_std >= kLogStdMin && init_log_std <= kLogStdMax)) {
    throw ConfigError("nets.init_log_std must lie in [" + std::to_string(kLogStdMin) + ", " +
                      std::to_string(kLogStdMax) + "]");
  }
  if (!(hidden_gain > 0.0) || !std::isfinite(hidden_gain)) throw ConfigError("nets.hidden_gain must be positive");
  if (!(actor_output_gain >= 0.0) || !std::isfinite(actor_output_gain)) {
    throw ConfigError("nets.actor_output_gain must be finite and >= 0");
  }
}

PolicyBundle PolicyBundle::create(const BundleSpec& spec, std::span<const double> q_default, double tau_end,
                                  Rng& rng) {
  if (spec.joints <= 0 || static_cast<int>(q_default.size()) != spec.joints) {
    throw ConfigError("bundle joint count does not match the default posture");
  }
  spec.validate();
  PolicyBundle b;
  b.joints = spec.joints;

  MlpSpec actor{spec.observation_width(), spec.actor_hidden, spec.joints, spec.activation, "orthogonal",
                spec.actor_output_gain};
  MlpSpec critic{spec.observation_width(), spec.critic_hidden, 1, spec.activation, "orthogonal", 1.0};
  MlpSpec estimator{spec.estimator_width(), spec.estimator_hidden, 3, spec.activation, "orthogonal", 0.0};
  b.actor = Mlp<float>(actor);
  b.critic = Mlp<float>(critic);
  b.estimator = Mlp<float>(estimator);
  Rng actor_rng = rng.split(1);
  Rng critic_rng = rng.split(2);
  Rng estimator_rng = rng.split(3);
  b.actor.initialize(actor_rng, spec.hidden_gain);
  b.critic.initialize(critic_rng, spec.hidden_gain);
  b.estimator.initialize(estimator_rng, spec.hidden_gain);
  b.log_std = Vec<float>::Constant(spec.joints, static_cast<float>(spec.init_log_std));
  b.clamp_log_std();
  b.policy_adam = AdamState::zeros(b.policy_parameter_count());
  b.estimator_adam = AdamState::zeros(b.estimator.size());
  b.obs_scaling = observation_scaling(q_default, tau_end);
  b.est_scaling = estimator_scaling(q_default);
  return b;
}

void PolicyBundle::clamp_log_std() {
  log_std = log_std.cwiseMax(static_cast<float>(kLogStdMin)).cwiseMin(static_cast<float>(kLogStdMax));
}

void PolicyBundle::check_finite() const {
  if (!actor.params().allFinite() || !critic.params().allFinite() || !estimator.params().allFinite() ||
      !log_std.allFinite()) {
    throw GradientExplosionError("non-finite network parameter");
  }
}

// ---------------------------------------------------------------------------

BatchSample sample_actions(const Mlp<float>& actor, const Vec<float>& log_std, const Mat<float>& obs, Rng& rng) {
  BatchSample out;
  out.mean = actor.forward(obs);
  out.actions = out.mean;
  const Vec<float> std = log_std.array().exp().matrix();
  for (Eigen::Index c = 0; c < out.actions.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.actions.rows(); ++r) {
      out.actions(r, c) += std[r] * static_cast<float>(rng.normal());
    }
  }
  out.log_prob = gaussian_log_prob<float>(out.mean, log_std, out.actions);
  return out;
}

ActionSample sample_action(const Mlp<double>& actor, const Vec<double>& log_std, std::span<const double> obs,
                           Rng& rng) {
  for (double x : obs) {
    if (!std::isfinite(x)) throw InvalidInputError("observation is not finite");
  }
  const Eigen::Map<const Mat<double>> x(obs.data(), static_cast<Eigen::Index>(obs.size()), 1);
  const Mat<double> mean = actor.forward(Mat<double>(x));
  Mat<double> action = mean;
  for (Eigen::Index r = 0; r < action.rows(); ++r) action(r, 0) += std::exp(log_std[r]) * rng.normal();
  ActionSample s;
  s.action.assign(action.data(), action.data() + action.size());
  s.log_prob = gaussian_log_prob<double>(mean, log_std, action)[0];
  return s;
}

// ---------------------------------------------------------------------------

namespace {

template <typename S>
void require_finite(const LossGrad<S>& lg, const char* what) {
  if (!std::isfinite(static_cast<double>(lg.loss)) || !lg.grad.allFinite() ||
      (lg.grad_log_std.size() && !lg.grad_log_std.allFinite())) {
    throw GradientExplosionError(std::string("non-finite ") + what + " loss or gradient");
  }
}

}  // namespace

template <typename S>
LossGrad<S> actor_log_prob_loss(const Mlp<S>& actor, const Vec<S>& log_std, const Mat<S>& obs,
                                const Mat<S>& actions, const Vec<S>& weights) {
  const auto n = obs.cols();
  if (actions.cols() != n || weights.size() != n || actions.rows() != log_std.size()) {
    throw ShapeError("actor loss batch mismatch");
  }
  typename Mlp<S>::Tape tape;
  const Mat<S> mean = actor.forward(obs, tape);
  const Vec<S> logp = gaussian_log_prob<S>(mean, log_std, actions);
  const S inv_n = S(1) / S(n);
  LossGrad<S> out;
  out.loss = -(weights.array() * logp.array()).sum() * inv_n;

  const Vec<S> inv_var = (S(-2) * log_std.array()).exp().matrix();
  const Mat<S> d = actions - mean;
  // dL/dmean = -(w/N) (a - mean) / sigma^2
  const Mat<S> d_mean = -((d.array().colwise() * inv_var.array()).rowwise() * weights.transpose().array()).matrix() * inv_n;
  out.grad = Vec<S>::Zero(static_cast<Eigen::Index>(actor.size()));
  actor.backward(tape, d_mean, out.grad);
  const Mat<S> z2 = d.array().square().colwise() * inv_var.array();
  out.grad_log_std = -(((z2.array() - S(1)).rowwise() * weights.transpose().array()).rowwise().sum()).matrix() * inv_n;
  require_finite(out, "actor");
  return out;
}

template <typename S>
LossGrad<S> critic_value_loss(const Mlp<S>& critic, const Mat<S>& obs, const Vec<S>& targets) {
  if (targets.size() != obs.cols()) throw ShapeError("critic loss batch mismatch");
  typename Mlp<S>::Tape tape;
  const Mat<S> v = critic.forward(obs, tape);
  const Mat<S> err = v - targets.transpose();
  const S inv_n = S(1) / S(obs.cols());
  LossGrad<S> out;
  out.loss = S(0.5) * err.squaredNorm() * inv_n;
  out.grad = Vec<S>::Zero(static_cast<Eigen::Index>(critic.size()));
  critic.backward(tape, Mat<S>(err * inv_n), out.grad);
  require_finite(out, "critic");
  return out;
}

template <typename S>
LossGrad<S> estimator_mse_loss(const Mlp<S>& estimator, const Mat<S>& inputs, const Mat<S>& targets) {
  if (targets.cols() != inputs.cols() || targets.rows() != estimator.spec().output) {
    throw ShapeError("estimator loss batch mismatch");
  }
  typename Mlp<S>::Tape tape;
  const Mat<S> y = estimator.forward(inputs, tape);
  const Mat<S> err = y - targets;
  const S inv = S(1) / S(err.size());
  LossGrad<S> out;
  out.loss = err.squaredNorm() * inv;
  out.grad = Vec<S>::Zero(static_cast<Eigen::Index>(estimator.size()));
  estimator.backward(tape, Mat<S>(err * (S(2) * inv)), out.grad);
  require_finite(out, "estimator");
  return out;
}

template LossGrad<float> actor_log_prob_loss(const Mlp<float>&, const Vec<float>&, const Mat<float>&,
                                             const Mat<float>&, const Vec<float>&);
template LossGrad<double> actor_log_prob_loss(const Mlp<double>&, const Vec<double>&, const Mat<double>&,
                                              const Mat<double>&, const Vec<double>&);
template LossGrad<float> critic_value_loss(const Mlp<float>&, const Mat<float>&, const Vec<float>&);
template LossGrad<double> critic_value_loss(const Mlp<double>&, const Mat<double>&, const Vec<double>&);
template LossGrad<float> estimator_mse_loss(const Mlp<float>&, const Mat<float>&, const Mat<float>&);
template LossGrad<double> estimator_mse_loss(const Mlp<double>&, const Mat<double>&, const Mat<double>&);

// ---------------------------------------------------------------------------

EstimatorWindow::EstimatorWindow(int joints, int frames)
    : frame_width_(estimator_frame_width(joints)), capacity_(frames) {
  if (joints <= 0 || frames <= 0) throw ConfigError("estimator window needs positive joints and frames");
}

void EstimatorWindow::push(std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != frame_width_) throw ShapeError("estimator frame width mismatch");
  if (static_cast<int>(frames_.size()) == capacity_) {
    // Reuse the evicted buffer.
    std::vector<double> buf = std::move(frames_.front());
    frames_.pop_front();
    buf.assign(frame.begin(), frame.end());
    frames_.push_back(std::move(buf));
  } else {
    frames_.emplace_back(frame.begin(), frame.end());
  }
}

void EstimatorWindow::flatten_into(std::span<double> out) const {
  if (frames_.empty()) throw InvalidInputError("estimator window is empty");
  if (static_cast<int>(out.size()) != width()) throw ShapeError("estimator window output width mismatch");
  const int pad = capacity_ - static_cast<int>(frames_.size());
  auto it = out.begin();
  for (int i = 0; i < pad; ++i) it = std::copy(frames_.front().begin(), frames_.front().end(), it);
  for (const auto& f : frames_) it = std::copy(f.begin(), f.end(), it);
}

std::vector<double> EstimatorWindow::flatten() const {
  std::vector<double> out(static_cast<std::size_t>(width()));
  flatten_into(out);
  return out;
}

std::array<double, 3> estimate_velocity(const PolicyBundle& bundle, const EstimatorWindow& window) {
  if (window.width() != bundle.estimator.spec().input) throw ShapeError("estimator window width mismatch");
  const std::vector<double> flat = window.flatten();
  const Mat<float> y = bundle.estimator.forward(bundle.est_scaling.apply(flat));
  return {y(0, 0), y(1, 0), y(2, 0)};
}

}  // namespace sata::nets
