#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "sata/error.hpp"
#include "sata/growth.hpp"

namespace sg = sata::growth;
using Big = boost::multiprecision::cpp_bin_float_50;

TEST(Gompertz, InflectionValue) {
  const sg::GrowthSchedule s;
  EXPECT_DOUBLE_EQ(sg::gompertz(s.t0, s), std::exp(-1.0));
}

TEST(Gompertz, Asymptotes) {
  const sg::GrowthSchedule s;
  EXPECT_GT(sg::gompertz(1e7, s), 1.0 - 1e-12);
  EXPECT_LE(sg::gompertz(1e7, s), 1.0);
  EXPECT_LT(sg::gompertz(-1e6, s), 1e-12);
  EXPECT_GE(sg::gompertz(-1e6, s), 0.0);
}

TEST(Gompertz, StartValueAgainstHighPrecision) {
  const sg::GrowthSchedule s;
  const Big ref = exp(-exp(Big(0.72)));
  EXPECT_NEAR(sg::gompertz(0.0, s), ref.convert_to<double>(), 1e-15);
  EXPECT_NEAR(sg::gompertz(0.0, s), 0.128165, 1e-6);
}

TEST(Gompertz, StrictlyIncreasingWithPeakSlopeAtT0) {
  const sg::GrowthSchedule s;
  const double h = 10.0;
  double best = -1.0;
  double best_t = -1.0;
  double prev = sg::gompertz(0.0, s);
  for (double t = h; t <= 100000.0; t += h) {
    const double g = sg::gompertz(t, s);
    ASSERT_GT(g, prev);
    if (g - prev > best) {
      best = g - prev;
      best_t = t - 0.5 * h;
    }
    prev = g;
  }
  EXPECT_LE(std::abs(best_t - s.t0), h);
}

TEST(Limits, Anchors) {
  const sg::GrowthSchedule s;
  EXPECT_DOUBLE_EQ(sg::torque_limit(0.0, s), 7.05);
  EXPECT_DOUBLE_EQ(sg::torque_limit(1.0, s), 23.5);
  EXPECT_DOUBLE_EQ(sg::control_frequency(0.0, s), 100.0);
  EXPECT_DOUBLE_EQ(sg::control_frequency(1.0, s), 200.0);
  EXPECT_DOUBLE_EQ(sg::control_frequency(0.5, s), 150.0);
  EXPECT_NEAR(sg::torque_limit(std::exp(-1.0), s), 7.05 + 16.45 * std::exp(-1.0), 1e-14);
}

TEST(Limits, DeploymentPinsEndValues) {
  sg::GrowthSchedule s;
  s.deployment_mode = true;
  for (double g : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(sg::torque_limit(g, s), 23.5);
    EXPECT_EQ(sg::control_frequency(g, s), 200.0);
  }
}

TEST(Limits, StayInsideTrainingRange) {
  const sg::GrowthSchedule s;
  for (double t = 0.0; t <= 72000.0; t += 24.0) {
    const double g = sg::gompertz(t, s);
    EXPECT_GE(sg::torque_limit(g, s), s.tau_start);
    EXPECT_LT(sg::torque_limit(g, s), s.tau_end);
    EXPECT_GE(sg::control_frequency(g, s), s.f_start);
    EXPECT_LT(sg::control_frequency(g, s), s.f_end);
  }
}

TEST(State, AdvanceAndBroadcast) {
  const sg::GrowthSchedule s;
  sg::GrowthState st = sg::initial_state(s);
  EXPECT_EQ(st.t, 0.0);
  for (int i = 0; i < 1000; ++i) st = sg::advance(st, 24, s);
  EXPECT_DOUBLE_EQ(st.t, 24000.0);
  EXPECT_DOUBLE_EQ(st.g, std::exp(-1.0));
  const auto b = sg::broadcast(st, s);
  EXPECT_DOUBLE_EQ(b.g, st.g);
  EXPECT_DOUBLE_EQ(b.tau_limit, sg::torque_limit(st.g, s));
  EXPECT_DOUBLE_EQ(b.f_policy, sg::control_frequency(st.g, s));
}

TEST(State, DisabledGrowthBroadcastsEndValues) {
  sg::GrowthSchedule s;
  s.enabled = false;
  const auto b = sg::broadcast(sg::initial_state(s), s);
  EXPECT_EQ(b.g, 1.0);
  EXPECT_EQ(b.tau_limit, 23.5);
  EXPECT_EQ(b.f_policy, 200.0);
}

TEST(Schedule, Validation) {
  EXPECT_NO_THROW(sg::GrowthSchedule{}.validate());
  sg::GrowthSchedule s;
  s.k = 0.0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
  s = {};
  s.tau_start = 30.0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
  s = {};
  s.f_start = 0.0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
  s = {};
  s.t0 = -1.0;
  EXPECT_THROW(s.validate(), sata::ConfigError);
}
