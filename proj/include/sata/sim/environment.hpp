#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sata/biomech.hpp"
#include "sata/growth.hpp"
#include "sata/rewards.hpp"
#include "sata/rng.hpp"
#include "sata/sim/dynamics.hpp"

namespace sata::sim {

// ---------------------------------------------------------------------------
// Commands

struct CommandRanges {
  double vx_min = -0.5;
  double vx_max = 1.5;
  double vy_min = -0.5;
  double vy_max = 0.5;
  double yaw_min = -1.5;
  double yaw_max = 1.5;
};

struct CommandConfig {
  CommandRanges ranges;
  double resample_period = 5.0;  // s
  bool planar = true;            // forces v_y = w_yaw = 0
  std::optional<double> override_vx;
};

struct CommandState {
  std::array<double, 3> v_cmd{};  // (v_x, v_y, w_yaw)
  double elapsed = 0.0;           // s since the last resample
};

CommandState initial_command(Rng& rng, const CommandConfig& config);

/// Advances the command clock by dt and resamples once it reaches the period.
CommandState sample_command(const CommandState& state, Rng& rng, double dt, const CommandConfig& config);

// ---------------------------------------------------------------------------
// Domain randomization and reset

struct RandomizationConfig {
  bool enabled = true;
  double added_mass_max = 5.0;  // kg
  double friction_min = 0.5;
  double friction_max = 1.25;
  double com_shift_x = 0.2;   // +- m
  double com_shift_yz = 0.1;  // +- m
  double hold_probability = 0.10;
};

struct RandomizationDraw {
  double added_mass = 0.0;
  double friction = 1.0;
  std::array<double, 3> com_shift{};  // y is drawn but unused by the planar model
  double hold_probability = 0.0;
};

RandomizationDraw draw_randomization(Rng& rng, const RandomizationConfig& config, double nominal_friction);

/// Copy of `nominal` with the draw's added mass and CoM shift applied to the base.
RobotModel apply_randomization(const RobotModel& nominal, const RandomizationDraw& draw);

struct ResetConfig {
  double prone_hip = 1.2;    // rad
  double prone_knee = -2.4;  // rad
  double pose_noise = 0.05;  // rad, uniform +-
  double zeta_init_max = 1.0;  // N m s
};

struct ResetResult {
  WorldState state;
  RandomizationDraw draw;
  std::vector<double> zeta;
};

/// Draws the episode's randomization and places the robot prone on the
/// terrain with its lowest collision site touching the ground.
ResetResult reset(Rng& rng, const ResetConfig& reset_config, const RandomizationConfig& randomization,
                  const Dynamics& dynamics);

/// Canonical prone pose at (x, pitch) = 0, resting on the terrain.
WorldState prone_state(const Dynamics& dynamics, const ResetConfig& config);

// ---------------------------------------------------------------------------
// Termination

struct TerminationConfig {
  double flip_pitch = 1.2;      // rad
  double joint_margin = 0.1;    // rad beyond the joint limits
  double episode_length = 10.0; // s
};

enum class TerminationReason { None, Flip, JointLimit, Timeout };

const char* to_string(TerminationReason reason);

TerminationReason check_termination(const WorldState& state, const RobotModel& model,
                                    const TerminationConfig& config);

inline bool is_failure(TerminationReason r) {
  return r == TerminationReason::Flip || r == TerminationReason::JointLimit;
}

// ---------------------------------------------------------------------------
// Observation and IMU

/// o = [v(3), w(3), g(3), q(J), qdot(J), v_cmd(3), tau(J), zeta(J)].
struct ObservationLayout {
  int joints = 8;

  int v() const { return 0; }
  int w() const { return 3; }
  int g() const { return 6; }
  int q() const { return 9; }
  int qdot() const { return 9 + joints; }
  int cmd() const { return 9 + 2 * joints; }
  int tau() const { return 12 + 2 * joints; }
  int zeta() const { return 12 + 3 * joints; }
  int size() const { return 12 + 4 * joints; }
};

struct ObservationParts {
  std::array<double, 3> v{};
  std::array<double, 3> w{};
  std::array<double, 3> g{};
  std::vector<double> q;
  std::vector<double> qdot;
  std::array<double, 3> cmd{};
  std::vector<double> tau;
  std::vector<double> zeta;
};

std::vector<double> pack_observation(const ObservationParts& parts);
ObservationParts unpack_observation(std::span<const double> obs, const ObservationLayout& layout);

/// Base linear velocity in the body frame (x forward, z up).
std::array<double, 3> base_velocity_body(const WorldState& state);
/// Unit gravity direction in the body frame; g_x > 0 when the nose tilts down.
std::array<double, 3> gravity_body(const WorldState& state);
/// Planar angular velocity; the y slot carries the nose-up pitch rate.
std::array<double, 3> angular_velocity_body(const WorldState& state);

std::vector<double> assemble_observation(const WorldState& state, const biomech::ActuatorState& actuator,
                                         const CommandState& command);

/// Re-emits `previous` with probability `hold_probability` (when it is
/// non-empty), otherwise assembles a fresh observation.
std::vector<double> observe(const WorldState& state, const biomech::ActuatorState& actuator,
                            const CommandState& command, Rng& hold_rng, double hold_probability,
                            std::span<const double> previous);

struct ImuFrame {
  std::array<double, 3> a{};  // finite-difference acceleration plus gravity, body frame, m/s^2
  std::array<double, 3> w{};
  std::array<double, 3> g{};
};

ImuFrame imu_read(const WorldState& state, const WorldState& previous, double dt, Rng& noise_rng,
                  double noise_std, double gravity = 9.81);

// ---------------------------------------------------------------------------
// Disturbances

struct DisturbanceSpec {
  std::string point = "base";
  double fx = 0.0;  // N, world frame
  double fz = 0.0;
  double start = 0.0;  // s, simulation time
  double duration = 0.0;
};

/// Registers the force on a copy of `state`. Throws InvalidSpecError for an
/// unknown body point or a negative duration.
WorldState apply_disturbance(const WorldState& state, const Dynamics& dynamics, const DisturbanceSpec& spec);

// ---------------------------------------------------------------------------
// Environment

struct EnvConfig {
  CommandConfig command;
  RandomizationConfig randomization;
  ResetConfig reset;
  TerminationConfig termination;
  TerrainKind terrain = TerrainKind::Flat;
  double rough_height = 0.12;
  double slope_angle = 0.1;
  double soft_factor = 20.0;
  double contact_stiffness = 2.0e4;
  double contact_damping = 200.0;
  double nominal_friction = 1.0;
  double target_height = 0.30;
  std::array<double, rewards::kTermCount> reward_weights = rewards::kDefaultWeights;  // per second
  double physics_dt = 0.005;
  double imu_noise = 0.0;
  bool biomech_enabled = true;
  double kappa_scale = 5.0;
  double gamma = 0.6;
  double beta = 0.9;

  /// Throws ConfigError.
  void validate() const;
};

/// Per-episode accumulators.
struct EpisodeStats {
  double reward = 0.0;       // training (growth-adjusted) reward
  double reward_base = 0.0;  // fixed-expression yardstick
  double reward_final = 0.0; // growth expressions at G = 1
  double duration = 0.0;     // s
  std::uint64_t ticks = 0;
  double tracking_error_sum = 0.0;  // sum over ticks of |v_x - v_x^cmd|
  double max_abs_torque = 0.0;
  TerminationReason termination = TerminationReason::None;

  double mean_tracking_error() const { return ticks ? tracking_error_sum / static_cast<double>(ticks) : 0.0; }
};

struct TickResult {
  rewards::RewardBreakdown reward;       // growth-adjusted, used for training
  rewards::RewardBreakdown reward_base;  // fixed expressions
  rewards::RewardBreakdown reward_final; // growth expressions at G = 1
  TerminationReason termination = TerminationReason::None;
};

/// One simulated robot: dynamics, actuator pipeline, command, randomization,
/// termination and observation assembly. Strictly sequential; run one
/// instance per thread.
class Environment {
 public:
  Environment(EnvConfig config, RobotModel nominal, std::uint64_t seed);

  void reset();

  /// Chooses the action executed for the next policy period: the previously
  /// executed action is held with the episode's hold probability.
  std::span<const double> select_action(std::span<const double> policy_action);

  /// One physics tick under the held action.
  TickResult tick(std::span<const double> action, const growth::Broadcast& broadcast);

  /// Observation for a policy query, including the observation-hold draw.
  std::vector<double> observe_for_policy();

  /// Estimator frame [q, qdot, a, w, g] from the most recent tick.
  std::vector<double> estimator_frame();

  const WorldState& state() const { return state_; }
  const biomech::ActuatorState& actuator() const { return actuator_; }
  const CommandState& command() const { return command_; }
  const RandomizationDraw& draw() const { return draw_; }
  const Dynamics& dynamics() const { return dynamics_; }
  const RobotModel& nominal_model() const { return nominal_; }
  const EnvConfig& config() const { return config_; }
  const EpisodeStats& episode() const { return episode_; }
  const std::vector<double>& last_torques() const { return torques_; }
  ObservationLayout layout() const { return ObservationLayout{nominal_.joint_count()}; }
  Rng& rng() { return rng_; }

  void set_episode_time(double t) { state_.time = t; }
  /// Per-joint multiplier on the broadcast torque limit (leg-failure scenario).
  void set_torque_scale(std::span<const double> scale);
  void add_disturbance(const DisturbanceSpec& spec);
  void set_command(const CommandState& command) { command_ = command; }

 private:
  void rebuild_terrain();

  EnvConfig config_;
  RobotModel nominal_;
  Rng rng_;
  Rng imu_rng_;
  Terrain terrain_;
  Dynamics dynamics_;
  WorldState state_;
  WorldState previous_;
  biomech::ActuatorState actuator_;
  biomech::ActuatorParams actuator_params_;
  CommandState command_;
  RandomizationDraw draw_;
  EpisodeStats episode_;
  std::vector<double> torque_scale_;
  std::vector<double> torques_;
  std::vector<double> held_action_;
  std::vector<double> qddot_;
  std::vector<double> last_observation_;
  rewards::RewardWeights weights_;
};

}  // namespace sata::sim
