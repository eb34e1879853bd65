#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sata/error.hpp"
#include "sata/rng.hpp"

namespace sata::nets {

enum class Activation { Elu, Tanh, Relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MlpSpec {
  int input = 0;
  std::vector<int> hidden{128, 64, 32};
  int output = 0;
  Activation activation = Activation::Elu;
  std::string init = "orthogonal";
  double output_gain = 0.01;  // 0 zero-initializes the output layer

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int l) const { return l == 0 ? input : hidden[l - 1]; }
  int layer_out(int l) const { return l == layer_count() - 1 ? output : hidden[l]; }
  std::size_t parameter_count() const;

  /// Throws ConfigError.
  void validate() const;
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Dense network over a single flat parameter vector. Layer l stores its
/// weight (out x in, column-major) followed by its bias. Batches are columns.
template <typename S>
class Mlp {
 public:
  using MatS = Mat<S>;
  using VecS = Vec<S>;
  using WeightMap = Eigen::Map<const MatS>;
  using BiasMap = Eigen::Map<const VecS>;

  struct Tape {
    std::vector<MatS> pre;  // pre-activations per layer
    std::vector<MatS> act;  // act[0] = input, act[l + 1] = output of layer l
  };

  Mlp() = default;
  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_ = VecS::Zero(static_cast<Eigen::Index>(spec_.parameter_count()));
    offsets_.reserve(spec_.layer_count());
    std::size_t at = 0;
    for (int l = 0; l < spec_.layer_count(); ++l) {
      offsets_.push_back(at);
      at += static_cast<std::size_t>(spec_.layer_in(l) + 1) * spec_.layer_out(l);
    }
  }

  const MlpSpec& spec() const { return spec_; }
  VecS& params() { return params_; }
  const VecS& params() const { return params_; }
  std::size_t size() const { return static_cast<std::size_t>(params_.size()); }

  WeightMap weight(int l) const {
    return WeightMap(params_.data() + offsets_[l], spec_.layer_out(l), spec_.layer_in(l));
  }
  BiasMap bias(int l) const {
    return BiasMap(params_.data() + offsets_[l] + static_cast<std::size_t>(spec_.layer_out(l)) * spec_.layer_in(l),
                   spec_.layer_out(l));
  }
  Eigen::Map<MatS> weight_mut(int l) {
    return Eigen::Map<MatS>(params_.data() + offsets_[l], spec_.layer_out(l), spec_.layer_in(l));
  }
  Eigen::Map<VecS> bias_mut(int l) {
    return Eigen::Map<VecS>(
        params_.data() + offsets_[l] + static_cast<std::size_t>(spec_.layer_out(l)) * spec_.layer_in(l),
        spec_.layer_out(l));
  }

  MatS forward(const MatS& x) const {
    check_input(x);
    MatS a = x;
    for (int l = 0; l < spec_.layer_count(); ++l) {
      MatS z = weight(l) * a;
      z.colwise() += bias(l);
      if (l + 1 < spec_.layer_count()) activate(z);
      a = std::move(z);
    }
    return a;
  }

  MatS forward(const MatS& x, Tape& tape) const {
    check_input(x);
    const int L = spec_.layer_count();
    tape.pre.resize(L);
    tape.act.resize(L + 1);
    tape.act[0] = x;
    for (int l = 0; l < L; ++l) {
      tape.pre[l].noalias() = weight(l) * tape.act[l];
      tape.pre[l].colwise() += bias(l);
      tape.act[l + 1] = tape.pre[l];
      if (l + 1 < L) activate(tape.act[l + 1]);
    }
    return tape.act[L];
  }

  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput. Returns dLoss/dinput.
  MatS backward(const Tape& tape, const MatS& d_out, VecS& grad) const {
    if (grad.size() != params_.size()) grad = VecS::Zero(params_.size());
    MatS delta = d_out;
    for (int l = spec_.layer_count() - 1; l >= 0; --l) {
      if (l + 1 < spec_.layer_count()) delta.array() *= derivative(tape.pre[l], tape.act[l + 1]).array();
      Eigen::Map<MatS> gw(grad.data() + offsets_[l], spec_.layer_out(l), spec_.layer_in(l));
      Eigen::Map<VecS> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(spec_.layer_out(l)) * spec_.layer_in(l),
                          spec_.layer_out(l));
      gw.noalias() += delta * tape.act[l].transpose();
      gb += delta.rowwise().sum();
      MatS next = weight(l).transpose() * delta;
      delta = std::move(next);
    }
    return delta;
  }

  /// Orthogonal weights scaled by `hidden_gain` (hidden layers) and
  /// spec().output_gain (last layer); zero biases.
  void initialize(Rng& rng, double hidden_gain = 1.0) {
    params_.setZero();
    for (int l = 0; l < spec_.layer_count(); ++l) {
      const bool last = l + 1 == spec_.layer_count();
      const double gain = last ? spec_.output_gain : hidden_gain;
      if (gain == 0.0) continue;
      const int rows = spec_.layer_out(l);
      const int cols = spec_.layer_in(l);
      Eigen::MatrixXd w = orthogonal(rows, cols, rng) * gain;
      weight_mut(l) = w.cast<S>();
    }
  }

  template <typename T>
  Mlp<T> cast() const {
    Mlp<T> out(spec_);
    out.params() = params_.template cast<T>();
    return out;
  }

 private:
  void check_input(const MatS& x) const {
    if (x.rows() != spec_.input) {
      throw ShapeError("network input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(spec_.input));
    }
  }

  void activate(MatS& z) const {
    switch (spec_.activation) {
      case Activation::Elu: z = z.unaryExpr([](S v) { return v > S(0) ? v : std::expm1(v); }); break;
      case Activation::Tanh: z = z.array().tanh().matrix(); break;
      case Activation::Relu: z = z.cwiseMax(S(0)); break;
    }
  }

  MatS derivative(const MatS& pre, const MatS& post) const {
    switch (spec_.activation) {
      case Activation::Elu:
        return pre.binaryExpr(post, [](S z, S y) { return z > S(0) ? S(1) : y + S(1); });
      case Activation::Tanh: return (S(1) - post.array().square()).matrix();
      case Activation::Relu: return pre.unaryExpr([](S z) { return z > S(0) ? S(1) : S(0); });
    }
    return MatS();
  }

  static Eigen::MatrixXd orthogonal(int rows, int cols, Rng& rng) {
    const bool flip = rows < cols;
    const int r = flip ? cols : rows;
    const int c = flip ? rows : cols;
    Eigen::MatrixXd a(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
    const Eigen::MatrixXd rr = qr.matrixQR().topLeftCorner(c, c);
    for (int j = 0; j < c; ++j) {
      if (rr(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return flip ? Eigen::MatrixXd(q.transpose()) : q;
  }

  MlpSpec spec_;
  VecS params_;
  std::vector<std::size_t> offsets_;
};

}  // namespace sata::nets
