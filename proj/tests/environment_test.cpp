#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sata/error.hpp"
#include "sata/sim/environment.hpp"

namespace ss = sata::sim;
namespace sg = sata::growth;

namespace {

ss::Dynamics desk() { return ss::Dynamics(ss::RobotModel::desk_quadruped(), ss::Terrain::flat()); }

ss::EnvConfig quiet_config() {
  ss::EnvConfig c;
  c.randomization.enabled = false;
  c.randomization.hold_probability = 0.0;
  c.reset.pose_noise = 0.0;
  return c;
}

const sg::Broadcast kEnd{1.0, 23.5, 200.0};

}  // namespace

TEST(Reset, ZeroNoiseGivesCanonicalPronePose) {
  const auto d = desk();
  sata::Rng rng(1);
  ss::ResetConfig rc;
  rc.pose_noise = 0.0;
  ss::RandomizationConfig off;
  off.enabled = false;
  const auto r = ss::reset(rng, rc, off, d);
  const auto canon = ss::prone_state(d, rc);
  EXPECT_EQ(r.state.q, canon.q);
  EXPECT_EQ(r.state.z, canon.z);
  EXPECT_EQ(r.state.pitch, 0.0);
  double lowest = 1.0;
  for (const auto& c : r.state.contacts) lowest = std::min(lowest, c.gap);
  EXPECT_NEAR(lowest, 0.0, 1e-12);
  for (std::size_t j = 0; j < r.state.q.size(); ++j) {
    EXPECT_GE(r.state.q[j], d.model().q_min[j]);
    EXPECT_LE(r.state.q[j], d.model().q_max[j]);
  }
}

TEST(Reset, FatigueDraws) {
  const auto d = desk();
  sata::Rng rng(2);
  ss::ResetConfig rc;
  rc.zeta_init_max = 0.0;
  const auto r = ss::reset(rng, rc, {}, d);
  for (double z : r.zeta) EXPECT_EQ(z, 0.0);
  rc.zeta_init_max = 1.0;
  for (int i = 0; i < 200; ++i) {
    for (double z : ss::reset(rng, rc, {}, d).zeta) {
      EXPECT_GE(z, 0.0);
      EXPECT_LE(z, 1.0);
    }
  }
}

TEST(Randomization, FrictionIsUniformOverItsRange) {
  // One-sample Kolmogorov-Smirnov statistic against U[0.5, 1.25] at the 1% level.
  sata::Rng rng(7);
  const ss::RandomizationConfig rc;
  const int n = 10000;
  std::vector<double> f(n);
  for (auto& x : f) x = ss::draw_randomization(rng, rc, 1.0).friction;
  std::sort(f.begin(), f.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = (f[i] - 0.5) / 0.75;
    d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
  EXPECT_GE(f.front(), 0.5);
  EXPECT_LE(f.back(), 1.25);
}

TEST(Randomization, DrawsStayInDeclaredRanges) {
  sata::Rng rng(8);
  const ss::RandomizationConfig rc;
  const auto nominal = ss::RobotModel::desk_quadruped();
  for (int i = 0; i < 2000; ++i) {
    const auto d = ss::draw_randomization(rng, rc, 1.0);
    EXPECT_GE(d.added_mass, 0.0);
    EXPECT_LE(d.added_mass, 5.0);
    EXPECT_LE(std::abs(d.com_shift[0]), 0.2);
    EXPECT_LE(std::abs(d.com_shift[1]), 0.1);
    EXPECT_LE(std::abs(d.com_shift[2]), 0.1);
    EXPECT_EQ(d.hold_probability, 0.10);
    const auto m = ss::apply_randomization(nominal, d);
    EXPECT_NEAR(m.total_mass(), nominal.total_mass() + d.added_mass, 1e-12);
  }
  ss::RandomizationConfig off;
  off.enabled = false;
  const auto d = ss::draw_randomization(rng, off, 0.8);
  EXPECT_EQ(d.added_mass, 0.0);
  EXPECT_EQ(d.friction, 0.8);
  EXPECT_EQ(d.hold_probability, 0.0);
}

TEST(Termination, Reasons) {
  const auto d = desk();
  const auto model = d.model();
  const ss::TerminationConfig tc;
  ss::WorldState s = ss::prone_state(d, {});
  EXPECT_EQ(ss::check_termination(s, model, tc), ss::TerminationReason::None);
  s.pitch = M_PI;
  EXPECT_EQ(ss::check_termination(s, model, tc), ss::TerminationReason::Flip);
  s.pitch = 0.0;
  s.q[1] = model.q_min[1] - 0.11;
  EXPECT_EQ(ss::check_termination(s, model, tc), ss::TerminationReason::JointLimit);
  s.q[1] = model.q_min[1] - 0.09;
  EXPECT_EQ(ss::check_termination(s, model, tc), ss::TerminationReason::None);
  s.time = 10.0;
  EXPECT_EQ(ss::check_termination(s, model, tc), ss::TerminationReason::Timeout);
  EXPECT_FALSE(ss::is_failure(ss::TerminationReason::Timeout));
  EXPECT_TRUE(ss::is_failure(ss::TerminationReason::Flip));
}

TEST(Command, ResampleEveryPeriod) {
  sata::Rng rng(3);
  ss::CommandConfig cc;
  ss::CommandState c;
  c.v_cmd = {0.123, 0.0, 0.0};
  c.elapsed = 4.99 - 0.005;
  auto next = ss::sample_command(c, rng, 0.005, cc);
  EXPECT_EQ(next.v_cmd, c.v_cmd);
  EXPECT_NEAR(next.elapsed, 4.99, 1e-12);
  next.elapsed = 4.995;
  next = ss::sample_command(next, rng, 0.005, cc);
  EXPECT_NE(next.v_cmd[0], 0.123);
  EXPECT_EQ(next.elapsed, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const auto s = ss::initial_command(rng, cc);
    EXPECT_GE(s.v_cmd[0], -0.5);
    EXPECT_LE(s.v_cmd[0], 1.5);
    EXPECT_EQ(s.v_cmd[1], 0.0);
    EXPECT_EQ(s.v_cmd[2], 0.0);
  }
  cc.planar = false;
  for (int i = 0; i < 1000; ++i) {
    const auto s = ss::initial_command(rng, cc);
    EXPECT_LE(std::abs(s.v_cmd[1]), 0.5);
    EXPECT_LE(std::abs(s.v_cmd[2]), 1.5);
  }
}

TEST(Command, OverrideIsHeld) {
  sata::Rng rng(4);
  ss::CommandConfig cc;
  cc.override_vx = 1.8;
  auto c = ss::initial_command(rng, cc);
  for (int i = 0; i < 4000; ++i) {
    c = ss::sample_command(c, rng, 0.005, cc);
    ASSERT_EQ(c.v_cmd[0], 1.8);
  }
}

TEST(Observation, LayoutWidths) {
  EXPECT_EQ(ss::ObservationLayout{12}.size(), 60);
  EXPECT_EQ(ss::ObservationLayout{8}.size(), 44);
}

TEST(Observation, PackUnpackRoundTrip) {
  ss::ObservationParts p;
  p.v = {1, 2, 3};
  p.w = {4, 5, 6};
  p.g = {0, 0, -1};
  p.q = {0.1, 0.2, 0.3};
  p.qdot = {1.1, 1.2, 1.3};
  p.cmd = {0.5, 0, 0};
  p.tau = {-1, -2, -3};
  p.zeta = {0.01, 0.02, 0.03};
  const auto obs = ss::pack_observation(p);
  ASSERT_EQ(obs.size(), 24u);
  const auto back = ss::unpack_observation(obs, ss::ObservationLayout{3});
  EXPECT_EQ(ss::pack_observation(back), obs);
  EXPECT_EQ(back.tau, p.tau);
  EXPECT_EQ(obs[ss::ObservationLayout{3}.zeta()], 0.01);
  EXPECT_THROW(ss::unpack_observation(obs, ss::ObservationLayout{4}), sata::ShapeError);
}

TEST(Observation, UprightAtRest) {
  const auto d = desk();
  ss::WorldState s = d.make_state();
  s.q = d.model().q_default;
  const auto obs = ss::assemble_observation(s, sata::biomech::ActuatorState::zeros(8), {});
  const ss::ObservationLayout L{8};
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(obs[L.v() + k], 0.0);
    EXPECT_EQ(obs[L.w() + k], 0.0);
  }
  EXPECT_EQ(obs[L.g()], -0.0);
  EXPECT_EQ(obs[L.g() + 2], -1.0);
}

TEST(Observation, GravitySignFollowsNoseDown) {
  ss::WorldState s;
  s.pitch = -0.3;  // nose down
  EXPECT_GT(ss::gravity_body(s)[0], 0.0);
}

TEST(Observation, HoldAlwaysRepeats) {
  const auto d = desk();
  ss::WorldState s = ss::prone_state(d, {});
  const auto act = sata::biomech::ActuatorState::zeros(8);
  sata::Rng rng(1);
  const auto first = ss::observe(s, act, {}, rng, 1.0, {});
  s.vx = 3.0;
  const auto second = ss::observe(s, act, {}, rng, 1.0, first);
  EXPECT_EQ(first, second);
  const auto fresh = ss::observe(s, act, {}, rng, 0.0, first);
  EXPECT_NE(first, fresh);
}

TEST(Imu, StationaryGlideAndRotation) {
  sata::Rng rng(1);
  ss::WorldState prev;
  ss::WorldState s;
  auto f = ss::imu_read(s, prev, 0.005, rng, 0.0);
  EXPECT_NEAR(f.a[0], 0.0, 1e-12);
  EXPECT_NEAR(f.a[2], -9.81, 1e-12);
  prev.vx = s.vx = 1.3;
  prev.pitch = s.pitch = 0.2;
  f = ss::imu_read(s, prev, 0.005, rng, 0.0);
  EXPECT_NEAR(f.a[0], -std::sin(0.2) * 9.81, 1e-12);
  EXPECT_NEAR(f.a[2], -std::cos(0.2) * 9.81, 1e-12);
  s.pitch_rate = 0.7;
  EXPECT_DOUBLE_EQ(ss::imu_read(s, prev, 0.005, rng, 0.0).w[1], 0.7);
}

TEST(Environment, DeterministicForSeed) {
  const ss::EnvConfig cfg;
  ss::Environment a(cfg, ss::RobotModel::desk_quadruped(), 42);
  ss::Environment b(cfg, ss::RobotModel::desk_quadruped(), 42);
  const std::vector<double> act{0.5, -0.5, 0.5, -0.5, 0.2, 0.1, 0.2, 0.1};
  for (int i = 0; i < 300; ++i) {
    const auto oa = a.observe_for_policy();
    const auto ob = b.observe_for_policy();
    ASSERT_EQ(oa, ob);
    const auto ra = a.tick(a.select_action(act), kEnd);
    const auto rb = b.tick(b.select_action(act), kEnd);
    ASSERT_EQ(ra.reward.total, rb.reward.total);
  }
}

TEST(Environment, BroadcastIsRecordedInState) {
  ss::Environment env(quiet_config(), ss::RobotModel::desk_quadruped(), 1);
  sg::GrowthSchedule s;
  s.enabled = false;
  s.deployment_mode = true;
  const auto bc = sg::broadcast(sg::initial_state(s), s);
  env.tick(std::vector<double>(8, 0.0), bc);
  EXPECT_EQ(env.state().tau_limit, 23.5);
  EXPECT_EQ(env.state().f_policy, 200.0);
}

TEST(Environment, TorquesRespectScaledLimits) {
  ss::Environment env(quiet_config(), ss::RobotModel::desk_quadruped(), 5);
  std::vector<double> scale(8, 1.0);
  scale[0] = scale[1] = 0.2;
  env.set_torque_scale(scale);
  const std::vector<double> big(8, 100.0);
  for (int i = 0; i < 200; ++i) {
    env.tick(big, kEnd);
    const auto& tau = env.last_torques();
    ASSERT_LE(std::abs(tau[0]), 2.0 * 0.2 * 23.5);
    ASSERT_LE(std::abs(tau[1]), 2.0 * 0.2 * 23.5);
    for (int j = 2; j < 8; ++j) ASSERT_LE(std::abs(tau[j]), 2.0 * 23.5);
  }
}

TEST(Environment, DirectTorquePathWhenBiomechDisabled) {
  auto cfg = quiet_config();
  cfg.biomech_enabled = false;
  ss::Environment env(cfg, ss::RobotModel::desk_quadruped(), 5);
  const std::vector<double> act{1, -1, 10, -10, 0, 0, 0, 0};
  env.tick(act, kEnd);
  EXPECT_DOUBLE_EQ(env.last_torques()[0], 5.0);
  EXPECT_DOUBLE_EQ(env.last_torques()[2], 23.5);
  EXPECT_DOUBLE_EQ(env.last_torques()[3], -23.5);
  EXPECT_EQ(env.actuator().zeta[0], 0.0);
}

TEST(Environment, EpisodeTimesOut) {
  auto cfg = quiet_config();
  cfg.termination.episode_length = 0.5;
  ss::Environment env(cfg, ss::RobotModel::desk_quadruped(), 3);
  ss::TerminationReason r = ss::TerminationReason::None;
  int ticks = 0;
  while (r == ss::TerminationReason::None) {
    r = env.tick(std::vector<double>(8, 0.0), kEnd).termination;
    ++ticks;
  }
  EXPECT_EQ(r, ss::TerminationReason::Timeout);
  EXPECT_EQ(ticks, 100);
  EXPECT_NEAR(env.episode().duration, 0.5, 1e-9);
}

TEST(Environment, ActionHoldRepeatsPreviousAction) {
  auto cfg = quiet_config();
  cfg.randomization.enabled = true;
  cfg.randomization.hold_probability = 0.5;
  ss::Environment env(cfg, ss::RobotModel::desk_quadruped(), 11);
  std::vector<double> a(8, 0.0);
  int held = 0;
  for (int i = 1; i <= 2000; ++i) {
    std::fill(a.begin(), a.end(), static_cast<double>(i));
    const auto exec = env.select_action(a);
    held += exec[0] != static_cast<double>(i) ? 1 : 0;
  }
  EXPECT_NEAR(held / 2000.0, 0.5, 0.05);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(ss::EnvConfig{}.validate());
  ss::EnvConfig c;
  c.physics_dt = 0.0;
  EXPECT_THROW(c.validate(), sata::ConfigError);
  c = {};
  c.randomization.hold_probability = 1.0;
  EXPECT_THROW(c.validate(), sata::ConfigError);
  c = {};
  c.reward_weights[4] = 1.0;
  EXPECT_THROW(c.validate(), sata::ConfigError);
  c = {};
  c.command.ranges.vx_min = 2.0;
  EXPECT_THROW(c.validate(), sata::ConfigError);
}
