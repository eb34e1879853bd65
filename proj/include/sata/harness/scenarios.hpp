#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sata/growth.hpp"
#include "sata/nets/policy.hpp"
#include "sata/sim/environment.hpp"

namespace sata::harness {

enum class ScenarioId { Plain, LegFailure, Push, Press, OodVelocity, SoftGround, Slope, Rough, TrackingSweep };

ScenarioId parse_scenario(const std::string& name);
std::string to_string(ScenarioId id);

/// Scenario parameters. Times are measured from the end of the warm-up, so
/// the robot has stood up from the prone reset before anything happens.
struct ScenarioSpec {
  ScenarioId id = ScenarioId::Plain;
  double warmup = 3.0;          // s
  double command_vx = 0.5;      // m/s, every scenario except ood_velocity and tracking_sweep
  int leg = 0;                  // leg_failure
  double torque_fraction = 0.2;
  double window_start = 0.5;    // s after warm-up
  double window_end = 1.5;
  double push_fx = 40.0;        // N, world frame
  double push_fz = 0.0;
  double push_start = 0.5;
  double push_duration = 0.2;
  double press_fz = -150.0;     // N, applied on the top of the base
  double press_start = 0.5;
  double press_duration = 1.0;
  double ood_vx = 1.8;
  double sweep_min = -0.5;
  double sweep_max = 1.5;
  int sweep_steps = 5;

  /// Throws ConfigError.
  void validate(int legs) const;
  /// Command values evaluated by this scenario.
  std::vector<double> commands() const;
};

struct EvalConfig {
  int episodes = 10;
  double episode_length = 10.0;  // s, from the prone reset
  bool deployment_mode = true;
  bool use_estimator = false;    // replace the observed v block with the estimator output
  bool deterministic = true;     // mean actions
  std::uint64_t seed = 12345;
  bool trajectory = false;       // per-tick CSV of the first episode

  void validate() const;
};

struct EpisodeReport {
  double command_vx = 0.0;
  double duration = 0.0;
  bool fell = false;
  std::string termination;
  double tracking_error = 0.0;  // mean |v_x - v_x^cmd| over the episode
  double reward = 0.0;          // training-expression reward at the broadcast G
  double reward_base = 0.0;
  double reward_final = 0.0;
  double max_abs_torque = 0.0;
  // Mean |tau| per leg (hip + knee), before and during the scenario window.
  std::vector<double> leg_torque_pre;
  std::vector<double> leg_torque_window;
  double estimator_rmse = 0.0;  // when use_estimator
};

struct TorqueTrace {
  std::vector<double> time;                   // s since reset
  std::vector<std::vector<double>> leg_abs_torque;  // [leg][sample]
};

struct ScenarioReport {
  std::string scenario;
  std::vector<std::string> notes;  // declared magnitudes
  growth::Broadcast broadcast;
  std::vector<EpisodeReport> episodes;
  TorqueTrace trace;  // first episode
  std::string trajectory;  // first episode, when EvalConfig::trajectory
  int falls = 0;
  double mean_tracking_error = 0.0;
  double mean_reward = 0.0;
  double mean_reward_base = 0.0;
  double max_abs_torque = 0.0;
  double window_start = 0.0;  // s since reset, or 0 when the scenario has no window
  double window_end = 0.0;
};

struct EvalSetup {
  sim::EnvConfig env;
  growth::GrowthSchedule growth;
  EvalConfig eval;
  double growth_t = 0.0;  // schedule time used outside deployment mode
};

/// Deterministic evaluation episodes of `bundle` under `scenario`.
ScenarioReport run_scenario(const nets::PolicyBundle& bundle, const EvalSetup& setup, const ScenarioSpec& scenario);

std::string report_to_json(const ScenarioReport& report);

}  // namespace sata::harness
