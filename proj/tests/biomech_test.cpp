#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "sata/biomech.hpp"
#include "sata/error.hpp"

namespace sb = sata::biomech;

namespace {

constexpr double kKappa = 5.0;
constexpr double kGamma = 0.6;
constexpr double kBeta = 0.9;
constexpr double kTauEnd = 23.5;
constexpr double kDt = 0.005;

sb::ActuatorParams params(std::size_t joints, double tau = kTauEnd, double qdot = 30.0) {
  return sb::ActuatorParams::uniform(joints, tau, qdot);
}

}  // namespace

TEST(Activation, ZeroActionGivesZero) { EXPECT_EQ(sb::compute_activation(0.0, kKappa, kTauEnd), 0.0); }

TEST(Activation, UnitArgumentMatchesLongDoubleTanh) {
  // 4.7 * 5 / 23.5 == 1 exactly in the argument's intent.
  const long double ref = std::tanh(1.0L);
  EXPECT_NEAR(sb::compute_activation(4.7, kKappa, kTauEnd), static_cast<double>(ref), 1e-15);
}

TEST(Activation, SaturatesBelowOne) {
  for (double a : {10.0, 100.0, 1e3}) {
    const double v = sb::compute_activation(a, kKappa, kTauEnd);
    EXPECT_LE(v, 1.0);
    EXPECT_GT(v, 0.0);
  }
  EXPECT_LT(sb::compute_activation(10.0, kKappa, kTauEnd), 1.0);
}

TEST(Activation, RejectsNonFiniteAction) {
  EXPECT_THROW(sb::compute_activation(std::numeric_limits<double>::quiet_NaN(), kKappa, kTauEnd),
               sata::InvalidInputError);
  EXPECT_THROW(sb::compute_activation(std::numeric_limits<double>::infinity(), kKappa, kTauEnd),
               sata::InvalidInputError);
  const auto p = params(2);
  const std::vector<double> a{0.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(sb::compute_activation(a, p), sata::InvalidInputError);
}

TEST(Smoothing, FixedPoint) {
  for (double c : {-0.9, -0.1, 0.0, 0.3, 0.99}) EXPECT_DOUBLE_EQ(sb::smooth_activation(c, c, kGamma), c);
}

TEST(Smoothing, StepFromZero) { EXPECT_DOUBLE_EQ(sb::smooth_activation(1.0, 0.0, kGamma), 0.6); }

TEST(Smoothing, IteratedConstantInputMatchesClosedForm) {
  const double c = 0.7;
  double alpha = 0.0;
  for (int n = 1; n <= 40; ++n) {
    alpha = sb::smooth_activation(c, alpha, kGamma);
    EXPECT_NEAR(alpha, c * (1.0 - std::pow(1.0 - kGamma, n)), 1e-14) << n;
  }
}

TEST(Smoothing, RejectsBadGamma) {
  EXPECT_THROW(sb::smooth_activation(0.1, 0.0, 0.0), sata::ConfigError);
  EXPECT_THROW(sb::smooth_activation(0.1, 0.0, 1.5), sata::ConfigError);
  EXPECT_NO_THROW(sb::smooth_activation(0.1, 0.0, 1.0));
}

TEST(Smoothing, ContractionProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.999, 0.999);
  for (int i = 0; i < 10000; ++i) {
    const double cur = u(rng);
    const double prev = u(rng);
    const double out = sb::smooth_activation(cur, prev, kGamma);
    EXPECT_LE(std::abs(out - prev), kGamma * std::abs(cur - prev) + 1e-15);
    EXPECT_LT(std::abs(out), 1.0);
  }
}

TEST(Muscle, ZeroActivation) {
  for (double qd : {-100.0, -1.0, 0.0, 5.0, 100.0}) EXPECT_EQ(sb::muscle_torque(0.0, qd, kTauEnd, 30.0), 0.0);
}

TEST(Muscle, StaticHalfActivation) { EXPECT_DOUBLE_EQ(sb::muscle_torque(0.5, 0.0, kTauEnd, 30.0), 0.5 * kTauEnd); }

TEST(Muscle, SpeedLimitEndpoints) {
  EXPECT_DOUBLE_EQ(sb::muscle_torque(0.5, -30.0, kTauEnd, 30.0), kTauEnd);
  EXPECT_DOUBLE_EQ(sb::muscle_torque(0.5, 30.0, kTauEnd, 30.0), 0.0);
  // Beyond the limit the ratio is clamped, so the torque never flips sign.
  EXPECT_DOUBLE_EQ(sb::muscle_torque(0.5, 90.0, kTauEnd, 30.0), 0.0);
  EXPECT_DOUBLE_EQ(sb::muscle_torque(0.5, -90.0, kTauEnd, 30.0), kTauEnd);
  EXPECT_DOUBLE_EQ(sb::muscle_torque(-0.5, -30.0, kTauEnd, 30.0), 0.0);
  EXPECT_DOUBLE_EQ(sb::muscle_torque(-0.5, 30.0, kTauEnd, 30.0), -kTauEnd);
}

TEST(Muscle, AgreesWithIndependentEvaluation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(-0.999, 0.999);
  std::uniform_real_distribution<double> uq(-60.0, 60.0);
  for (int i = 0; i < 5000; ++i) {
    const double a = ua(rng);
    const double qd = uq(rng);
    long double r = static_cast<long double>(qd) / 30.0L;
    if (r > 1) r = 1;
    if (r < -1) r = -1;
    const long double s = a > 0 ? 1 : (a < 0 ? -1 : 0);
    const long double ref = kTauEnd * static_cast<long double>(a) * (1 - s * r);
    EXPECT_NEAR(sb::muscle_torque(a, qd, kTauEnd, 30.0), static_cast<double>(ref), 1e-12);
  }
}

TEST(Fatigue, Examples) {
  EXPECT_EQ(sb::update_fatigue(0.0, 0.0, kDt, kBeta), 0.0);
  EXPECT_DOUBLE_EQ(sb::update_fatigue(1.0, 0.0, kDt, kBeta), 0.9);
  EXPECT_NEAR(sb::update_fatigue(0.0, 20.0, kDt, kBeta), 0.09, 1e-15);
  EXPECT_NEAR(sb::update_fatigue(0.0, -20.0, kDt, kBeta), 0.09, 1e-15);
}

TEST(Fatigue, GeometricDecay) {
  double z = 2.0;
  for (int n = 1; n <= 50; ++n) {
    z = sb::update_fatigue(z, 0.0, kDt, kBeta);
    EXPECT_NEAR(z, 2.0 * std::pow(kBeta, n), 1e-14);
  }
}

TEST(Fatigue, SteadyStateUnderConstantTorque) {
  const double tau = 12.0;
  double z = 0.0;
  for (int n = 0; n < 2000; ++n) z = sb::update_fatigue(z, tau, kDt, kBeta);
  EXPECT_NEAR(z, tau * kDt * kBeta / (1.0 - kBeta), 1e-12);
}

TEST(Fatigue, MonotoneInTorqueMagnitude) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  double lo = 0.0;
  double hi = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double t = u(rng);
    lo = sb::update_fatigue(lo, t, kDt, kBeta);
    hi = sb::update_fatigue(hi, -(t + u(rng)), kDt, kBeta);
    EXPECT_GE(hi, lo);
  }
}

TEST(ActuatorStep, ZeroActionFromZeroState) {
  const auto p = params(8);
  const std::vector<double> a(8, 0.0);
  const std::vector<double> qd(8, 0.3);
  const auto r = sb::actuator_step(a, qd, sb::ActuatorState::zeros(8), p);
  for (int j = 0; j < 8; ++j) {
    EXPECT_EQ(r.torques[j], 0.0);
    EXPECT_EQ(r.state.zeta[j], 0.0);
    EXPECT_EQ(r.state.alpha[j], 0.0);
  }
}

TEST(ActuatorStep, SingleStepComposesScalarKernels) {
  const auto p = params(1);
  const std::vector<double> a{4.7};
  const std::vector<double> qd{0.0};
  const auto r = sb::actuator_step(a, qd, sb::ActuatorState::zeros(1), p);
  const double expected = 23.5 * 0.6 * static_cast<double>(std::tanh(1.0L));
  EXPECT_NEAR(r.torques[0], expected, 1e-12);
  EXPECT_NEAR(r.state.alpha[0], 0.6 * std::tanh(1.0), 1e-15);
  EXPECT_NEAR(r.state.zeta[0], std::abs(expected) * kDt * kBeta, 1e-15);
  EXPECT_DOUBLE_EQ(r.state.tau[0], r.torques[0]);
}

TEST(ActuatorStep, ConvergesToStaticFixedPoint) {
  const auto p = params(2, 10.0);
  const std::vector<double> a{1.3, -0.8};
  const std::vector<double> qd{0.0, 0.0};
  sb::ActuatorState s = sb::ActuatorState::zeros(2);
  std::vector<double> tau(2);
  for (int n = 0; n < 200; ++n) sb::actuator_step_inplace(a, qd, s, p, tau);
  for (int j = 0; j < 2; ++j) {
    const double alpha = std::tanh(a[j] * kKappa / 10.0);
    EXPECT_NEAR(s.alpha[j], alpha, 1e-12);
    EXPECT_NEAR(tau[j], 10.0 * alpha, 1e-11);
  }
}

TEST(ActuatorStep, InPlaceMatchesFunctionalForm) {
  const auto p = params(4, 15.0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 3.0);
  sb::ActuatorState s = sb::ActuatorState::zeros(4);
  std::vector<double> tau(4);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> a(4), qd(4);
    for (int j = 0; j < 4; ++j) {
      a[j] = n(rng);
      qd[j] = 5.0 * n(rng);
    }
    const auto r = sb::actuator_step(a, qd, s, p);
    sb::actuator_step_inplace(a, qd, s, p, tau);
    EXPECT_EQ(r.torques, tau);
    EXPECT_EQ(r.state.alpha, s.alpha);
    EXPECT_EQ(r.state.zeta, s.zeta);
  }
}

TEST(ActuatorStep, BoundedAndNeverOpposesActivation) {
  const auto p = params(3, 7.05, 20.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ua(-500.0, 500.0);
  std::uniform_real_distribution<double> uq(-80.0, 80.0);
  sb::ActuatorState s = sb::ActuatorState::zeros(3);
  std::vector<double> tau(3);
  for (int k = 0; k < 20000; ++k) {
    const std::vector<double> a{ua(rng), ua(rng) * 1e-3, ua(rng)};
    const std::vector<double> qd{uq(rng), uq(rng), uq(rng)};
    sb::actuator_step_inplace(a, qd, s, p, tau);
    for (int j = 0; j < 3; ++j) {
      ASSERT_LE(std::abs(tau[j]), 2.0 * 7.05);
      ASSERT_GE(tau[j] * s.alpha[j], 0.0);
      ASSERT_LT(std::abs(s.alpha[j]), 1.0);
      ASSERT_GE(s.zeta[j], 0.0);
    }
  }
}

TEST(ActuatorStep, Deterministic) {
  const auto p = params(2);
  const std::vector<double> a{0.37, -2.2};
  const std::vector<double> qd{1.5, -4.0};
  const auto s0 = sb::ActuatorState{{0.1, -0.2}, {0.3, 0.05}, {1.0, -2.0}};
  const auto r1 = sb::actuator_step(a, qd, s0, p);
  const auto r2 = sb::actuator_step(a, qd, s0, p);
  EXPECT_EQ(r1.torques, r2.torques);
  EXPECT_EQ(r1.state.zeta, r2.state.zeta);
}

TEST(ActuatorStep, ShapeMismatchThrows) {
  const auto p = params(3);
  const std::vector<double> a(2, 0.0);
  const std::vector<double> qd(3, 0.0);
  EXPECT_THROW(sb::actuator_step(a, qd, sb::ActuatorState::zeros(3), p), sata::ShapeError);
}

TEST(DirectTorque, ClampsScaledActionAndKeepsStateZero) {
  const auto p = params(3, 10.0);
  const std::vector<double> a{1.0, 5.0, -5.0};
  sb::ActuatorState s = sb::ActuatorState::zeros(3);
  std::vector<double> tau(3);
  sb::direct_torque_inplace(a, s, p, tau);
  EXPECT_DOUBLE_EQ(tau[0], 5.0);
  EXPECT_DOUBLE_EQ(tau[1], 10.0);
  EXPECT_DOUBLE_EQ(tau[2], -10.0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(s.alpha[j], 0.0);
    EXPECT_EQ(s.zeta[j], 0.0);
  }
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(params(8).validate());
  auto p = params(2);
  p.gamma = 0.0;
  EXPECT_THROW(p.validate(), sata::ConfigError);
  p = params(2);
  p.beta = 1.0;
  EXPECT_THROW(p.validate(), sata::ConfigError);
  p = params(2);
  p.tau_limit[1] = 0.0;
  EXPECT_THROW(p.validate(), sata::ConfigError);
  p = params(2);
  p.qdot_limit[0] = -1.0;
  EXPECT_THROW(p.validate(), sata::ConfigError);
  p = params(2);
  p.dt = 0.0;
  EXPECT_THROW(p.validate(), sata::ConfigError);
}
