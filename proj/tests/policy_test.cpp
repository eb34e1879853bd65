#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sata/error.hpp"
#include "sata/nets/checkpoint.hpp"
#include "sata/nets/policy.hpp"

namespace sn = sata::nets;
using MatD = sn::Mat<double>;
using VecD = sn::Vec<double>;

namespace {

const std::vector<double> kQDefault{0.1, -0.8, 0.1, -0.8, -0.1, 0.8, -0.1, 0.8};

sn::MlpSpec small(int in, int out, double gain) {
  sn::MlpSpec s;
  s.input = in;
  s.hidden = {6, 5};
  s.output = out;
  s.output_gain = gain;
  return s;
}

MatD gaussian(int rows, int cols, sata::Rng& rng) {
  MatD m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Fraction of coordinates whose analytic and central-difference gradients
// agree to 1e-4 relative (absolute below unit magnitude).
template <typename LossFn>
double agreement(sn::Mlp<double> net, const VecD& grad, LossFn loss) {
  const double h = 1e-6;
  int ok = 0;
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    const double p0 = net.params()(i);
    net.params()(i) = p0 + h;
    const double lp = loss(net);
    net.params()(i) = p0 - h;
    const double lm = loss(net);
    net.params()(i) = p0;
    const double fd = (lp - lm) / (2 * h);
    if (std::abs(fd - grad(i)) <= 1e-4 * std::max(1.0, std::abs(fd))) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(net.params().size());
}

sn::PolicyBundle bundle(unsigned seed = 1) {
  sn::BundleSpec spec;
  spec.actor_hidden = {16, 8};
  spec.critic_hidden = {16, 8};
  spec.estimator_hidden = {16};
  spec.init_log_std = -0.5;
  sata::Rng rng(seed);
  return sn::PolicyBundle::create(spec, kQDefault, 23.5, rng);
}

}  // namespace

TEST(Sampling, TinyStdReturnsMean) {
  sata::Rng rng(1);
  sn::Mlp<double> actor(small(4, 3, 1.0));
  actor.initialize(rng);
  const VecD log_std = VecD::Constant(3, -10.0);
  const std::vector<double> obs{0.3, -0.2, 1.0, 0.5};
  const auto s = sn::sample_action(actor, log_std, obs, rng);
  const MatD mean = actor.forward(Eigen::Map<const MatD>(obs.data(), 4, 1));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.action[i], mean(i, 0), 1e-3);
}

TEST(Sampling, LogProbAtMean) {
  const VecD log_std = (VecD(3) << -0.3, 0.2, 0.7).finished();
  const MatD mean = (MatD(3, 1) << 0.4, -1.0, 2.0).finished();
  const double expected = -(log_std.sum() + 3 * 0.5 * std::log(2 * M_PI));
  EXPECT_NEAR(sn::gaussian_log_prob<double>(mean, log_std, mean)[0], expected, 1e-12);
  // One standard deviation away in one dimension costs exactly 1/2.
  MatD a = mean;
  a(1, 0) += std::exp(0.2);
  EXPECT_NEAR(sn::gaussian_log_prob<double>(mean, log_std, a)[0], expected - 0.5, 1e-12);
}

TEST(Sampling, EmpiricalStdMatchesLogStd) {
  sata::Rng rng(2);
  sn::Mlp<double> actor(small(2, 2, 0.0));
  const VecD log_std = (VecD(2) << -1.0, 0.5).finished();
  const std::vector<double> obs{0.0, 0.0};
  const int n = 100000;
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  for (int i = 0; i < n; ++i) {
    const auto a = sn::sample_action(actor, log_std, obs, rng);
    s0 += a.action[0];
    s1 += a.action[1];
    q0 += a.action[0] * a.action[0];
    q1 += a.action[1] * a.action[1];
  }
  const double sd0 = std::sqrt(q0 / n - (s0 / n) * (s0 / n));
  const double sd1 = std::sqrt(q1 / n - (s1 / n) * (s1 / n));
  EXPECT_NEAR(sd0 / std::exp(-1.0), 1.0, 0.02);
  EXPECT_NEAR(sd1 / std::exp(0.5), 1.0, 0.02);
}

TEST(Sampling, RejectsNonFiniteObservation) {
  sata::Rng rng(3);
  sn::Mlp<double> actor(small(2, 2, 1.0));
  const std::vector<double> obs{0.0, std::nan("")};
  EXPECT_THROW(sn::sample_action(actor, VecD::Zero(2), obs, rng), sata::InvalidInputError);
}

TEST(Sampling, BatchLogProbMatchesDensity) {
  auto b = bundle();
  sata::Rng rng(4);
  const sn::Mat<float> obs = gaussian(b.actor.spec().input, 5, rng).cast<float>();
  const auto s = sn::sample_actions(b.actor, b.log_std, obs, rng);
  const VecD lp = sn::gaussian_log_prob<double>(s.mean.cast<double>(), b.log_std.cast<double>(),
                                                s.actions.cast<double>());
  EXPECT_LT((s.log_prob.cast<double>() - lp).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Gradients, ActorLogProbMatchesFiniteDifferences) {
  sata::Rng rng(5);
  sn::Mlp<double> actor(small(4, 3, 1.0));
  actor.initialize(rng);
  const VecD log_std = (VecD(3) << -0.4, 0.1, 0.3).finished();
  const MatD obs = gaussian(4, 7, rng);
  const MatD act = gaussian(3, 7, rng);
  const VecD w = gaussian(7, 1, rng);
  const auto lg = sn::actor_log_prob_loss<double>(actor, log_std, obs, act, w);
  EXPECT_GE(agreement(actor, lg.grad,
                      [&](const sn::Mlp<double>& n) {
                        return sn::actor_log_prob_loss<double>(n, log_std, obs, act, w).loss;
                      }),
            0.99);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    VecD p = log_std;
    VecD m = log_std;
    p[i] += h;
    m[i] -= h;
    const double fd = (sn::actor_log_prob_loss<double>(actor, p, obs, act, w).loss -
                       sn::actor_log_prob_loss<double>(actor, m, obs, act, w).loss) /
                      (2 * h);
    EXPECT_NEAR(lg.grad_log_std[i], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Gradients, CriticValueLossMatchesFiniteDifferences) {
  sata::Rng rng(6);
  sn::Mlp<double> critic(small(5, 1, 1.0));
  critic.initialize(rng);
  const MatD obs = gaussian(5, 9, rng);
  const VecD y = gaussian(9, 1, rng);
  const auto lg = sn::critic_value_loss<double>(critic, obs, y);
  EXPECT_GE(agreement(critic, lg.grad,
                      [&](const sn::Mlp<double>& n) { return sn::critic_value_loss<double>(n, obs, y).loss; }),
            0.99);
}

TEST(Gradients, EstimatorLossMatchesFiniteDifferences) {
  sata::Rng rng(7);
  sn::Mlp<double> est(small(6, 3, 1.0));
  est.initialize(rng);
  const MatD x = gaussian(6, 8, rng);
  const MatD y = gaussian(3, 8, rng);
  const auto lg = sn::estimator_mse_loss<double>(est, x, y);
  EXPECT_GE(agreement(est, lg.grad,
                      [&](const sn::Mlp<double>& n) { return sn::estimator_mse_loss<double>(n, x, y).loss; }),
            0.99);
}

TEST(Gradients, ZeroWeightsGiveZeroActorGradient) {
  sata::Rng rng(8);
  sn::Mlp<double> actor(small(4, 2, 1.0));
  actor.initialize(rng);
  const auto lg = sn::actor_log_prob_loss<double>(actor, VecD::Zero(2), gaussian(4, 3, rng), gaussian(2, 3, rng),
                                                  VecD::Zero(3));
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grad.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(lg.grad_log_std.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, ActorGradientIsLinearInWeights) {
  sata::Rng rng(9);
  sn::Mlp<double> actor(small(4, 2, 1.0));
  actor.initialize(rng);
  const MatD obs = gaussian(4, 6, rng);
  const MatD act = gaussian(2, 6, rng);
  const VecD w = gaussian(6, 1, rng);
  const auto a = sn::actor_log_prob_loss<double>(actor, VecD::Zero(2), obs, act, w);
  const auto b = sn::actor_log_prob_loss<double>(actor, VecD::Zero(2), obs, act, VecD(-2.0 * w));
  EXPECT_NEAR(b.loss, -2.0 * a.loss, 1e-12);
  EXPECT_LT((b.grad + 2.0 * a.grad).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradients, BatchMismatchThrows) {
  sn::Mlp<double> critic(small(5, 1, 1.0));
  EXPECT_THROW(sn::critic_value_loss<double>(critic, MatD::Zero(5, 4), VecD::Zero(3)), sata::ShapeError);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradient) {
  sn::Vec<float> p = sn::Vec<float>::Zero(3);
  const sn::Vec<float> g = (sn::Vec<float>(3) << 2.0f, -0.5f, 0.0f).finished();
  auto st = sn::AdamState::zeros(3);
  sn::adam_step(p, g, st, 0.01);
  EXPECT_NEAR(p[0], -0.01, 1e-7);
  EXPECT_NEAR(p[1], 0.01, 1e-7);
  EXPECT_EQ(p[2], 0.0f);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, MinimizesQuadratic) {
  sn::Vec<float> p = (sn::Vec<float>(2) << 3.0f, -2.0f).finished();
  auto st = sn::AdamState::zeros(2);
  for (int i = 0; i < 3000; ++i) {
    const sn::Vec<float> g = 2.0f * p;
    sn::adam_step(p, g, st, 0.01);
  }
  EXPECT_LT(p.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(EstimatorWindow, FrontPadsWithOldestFrame) {
  sn::EstimatorWindow w(1, 3);
  EXPECT_EQ(w.frame_width(), 11);
  EXPECT_THROW(w.flatten(), sata::InvalidInputError);
  std::vector<double> a(11, 1.0), b(11, 2.0), c(11, 3.0), d(11, 4.0);
  w.push(a);
  w.push(b);
  auto flat = w.flatten();
  EXPECT_EQ(flat[0], 1.0);
  EXPECT_EQ(flat[11], 1.0);
  EXPECT_EQ(flat[22], 2.0);
  w.push(c);
  w.push(d);
  flat = w.flatten();
  EXPECT_EQ(flat[0], 2.0);
  EXPECT_EQ(flat[32], 4.0);
  EXPECT_THROW(w.push(std::vector<double>(10, 0.0)), sata::ShapeError);
}

TEST(Bundle, FreshEstimatorPredictsZero) {
  const auto b = bundle();
  sn::EstimatorWindow w(8);
  w.push(std::vector<double>(25, 0.7));
  const auto v = sn::estimate_velocity(b, w);
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
}

TEST(Bundle, ShapesAndLogStd) {
  const auto b = bundle();
  EXPECT_EQ(b.actor.spec().input, 44);
  EXPECT_EQ(b.actor.spec().output, 8);
  EXPECT_EQ(b.critic.spec().output, 1);
  EXPECT_EQ(b.estimator.spec().input, 11 * 25);
  EXPECT_EQ(b.log_std.size(), 8);
  EXPECT_FLOAT_EQ(b.log_std[3], -0.5f);
  EXPECT_EQ(b.policy_adam.m.size(), static_cast<Eigen::Index>(b.policy_parameter_count()));
  auto c = b;
  c.log_std[0] = 5.0f;
  c.log_std[1] = -9.0f;
  c.clamp_log_std();
  EXPECT_EQ(c.log_std[0], static_cast<float>(sn::kLogStdMax));
  EXPECT_EQ(c.log_std[1], static_cast<float>(sn::kLogStdMin));
  c.critic.params()[0] = std::nanf("");
  EXPECT_THROW(c.check_finite(), sata::GradientExplosionError);
}

TEST(Bundle, SpecValidation) {
  sn::BundleSpec s;
  EXPECT_NO_THROW(s.validate());
  s.joints = 0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
  s = {};
  s.init_log_std = 3.0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
  sata::Rng rng(1);
  EXPECT_THROW(sn::PolicyBundle::create(sn::BundleSpec{}, std::vector<double>(4, 0.0), 23.5, rng),
               sata::ConfigError);
}

TEST(Scaling, ObservationMap) {
  const auto s = sn::observation_scaling(kQDefault, 23.5);
  ASSERT_EQ(s.width(), 44);
  std::vector<double> raw(44, 1.0);
  const auto x = s.apply(raw);
  EXPECT_FLOAT_EQ(x(0, 0), 2.0f);                   // v
  EXPECT_FLOAT_EQ(x(3, 0), 0.25f);                  // w
  EXPECT_FLOAT_EQ(x(6, 0), 1.0f);                   // g
  EXPECT_FLOAT_EQ(x(9, 0), 0.9f);                   // q - q_default
  EXPECT_FLOAT_EQ(x(10, 0), 1.8f);
  EXPECT_FLOAT_EQ(x(17, 0), 0.05f);                 // qdot
  EXPECT_FLOAT_EQ(x(25, 0), 2.0f);                  // cmd
  EXPECT_FLOAT_EQ(x(27, 0), 0.25f);
  EXPECT_FLOAT_EQ(x(28, 0), static_cast<float>(1.0 / 23.5));  // tau
  EXPECT_FLOAT_EQ(x(36, 0), 1.0f);                  // zeta
  EXPECT_THROW(s.apply(std::vector<double>(43, 0.0)), sata::ShapeError);
  const auto id = sn::InputScaling::identity(3);
  EXPECT_FLOAT_EQ(id.apply(std::vector<double>{1.5, -2.0, 0.0})(1, 0), -2.0f);
}

TEST(Checkpoint, RoundTripIsExact) {
  auto b = bundle(3);
  b.iteration = 77;
  b.learning_rate = 4e-4;
  b.policy_adam.step = 12;
  b.policy_adam.m.setConstant(0.25f);
  const std::string bytes = sn::serialize_checkpoint(b);
  const auto r = sn::parse_checkpoint(bytes, 8);
  EXPECT_EQ(r.iteration, 77u);
  EXPECT_EQ(r.learning_rate, 4e-4);
  EXPECT_EQ(r.policy_adam.step, 12u);
  EXPECT_EQ(r.actor.params(), b.actor.params());
  EXPECT_EQ(r.critic.params(), b.critic.params());
  EXPECT_EQ(r.estimator.params(), b.estimator.params());
  EXPECT_EQ(r.log_std, b.log_std);
  EXPECT_EQ(r.policy_adam.m, b.policy_adam.m);
  EXPECT_EQ(r.obs_scaling.scale, b.obs_scaling.scale);
  EXPECT_EQ(r.actor.spec().hidden, b.actor.spec().hidden);
  EXPECT_EQ(sn::serialize_checkpoint(r), bytes);
}

TEST(Checkpoint, MalformedInputsRejected) {
  const std::string bytes = sn::serialize_checkpoint(bundle());
  EXPECT_THROW(sn::parse_checkpoint("NOTACKPT" + bytes.substr(8)), sata::FormatError);
  EXPECT_THROW(sn::parse_checkpoint(bytes.substr(0, bytes.size() - 3)), sata::FormatError);
  EXPECT_THROW(sn::parse_checkpoint(bytes, 12), sata::FormatError);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_THROW(sn::parse_checkpoint(wrong_version), sata::FormatError);
  EXPECT_THROW(sn::parse_checkpoint(""), sata::FormatError);
}
