#include "sata/sim/environment.hpp"

#include <algorithm>
#include <cmath>

#include "sata/error.hpp"

namespace sata::sim {

// ---------------------------------------------------------------------------
// Commands

namespace {

CommandState draw_command(Rng& rng, const CommandConfig& config) {
  CommandState c;
  if (config.override_vx) {
    c.v_cmd = {*config.override_vx, 0.0, 0.0};
    return c;
  }
  const auto& r = config.ranges;
  c.v_cmd[0] = rng.uniform(r.vx_min, r.vx_max);
  c.v_cmd[1] = rng.uniform(r.vy_min, r.vy_max);
  c.v_cmd[2] = rng.uniform(r.yaw_min, r.yaw_max);
  if (config.planar) {
    c.v_cmd[1] = 0.0;
    c.v_cmd[2] = 0.0;
  }
  return c;
}

}  // namespace

CommandState initial_command(Rng& rng, const CommandConfig& config) { return draw_command(rng, config); }

CommandState sample_command(const CommandState& state, Rng& rng, double dt, const CommandConfig& config) {
  CommandState next = state;
  next.elapsed += dt;
  if (next.elapsed + 1e-9 >= config.resample_period) {
    next = draw_command(rng, config);
    next.elapsed = 0.0;
  }
  return next;
}

// ---------------------------------------------------------------------------
// Randomization and reset

RandomizationDraw draw_randomization(Rng& rng, const RandomizationConfig& config, double nominal_friction) {
  RandomizationDraw d;
  d.friction = nominal_friction;
  if (!config.enabled) return d;
  d.added_mass = rng.uniform(0.0, config.added_mass_max);
  d.friction = rng.uniform(config.friction_min, config.friction_max);
  d.com_shift[0] = rng.uniform(-config.com_shift_x, config.com_shift_x);
  d.com_shift[1] = rng.uniform(-config.com_shift_yz, config.com_shift_yz);
  d.com_shift[2] = rng.uniform(-config.com_shift_yz, config.com_shift_yz);
  d.hold_probability = config.hold_probability;
  return d;
}

RobotModel apply_randomization(const RobotModel& nominal, const RandomizationDraw& draw) {
  RobotModel m = nominal;
  const double mass = nominal.base_mass + draw.added_mass;
  // Added mass sits at the shifted CoM; the inertia of the box scales with mass.
  m.base_inertia = nominal.base_inertia * mass / nominal.base_mass;
  m.base_mass = mass;
  m.com_offset = {nominal.com_offset[0] + draw.com_shift[0], nominal.com_offset[1] + draw.com_shift[2]};
  return m;
}

namespace {

void rest_on_terrain(const Dynamics& dynamics, WorldState& s) {
  dynamics.refresh_contacts(s);
  double lowest = s.contacts.front().gap;
  for (const auto& c : s.contacts) lowest = std::min(lowest, c.gap);
  s.z -= lowest;
  dynamics.refresh_contacts(s);
}

}  // namespace

WorldState prone_state(const Dynamics& dynamics, const ResetConfig& config) {
  WorldState s = dynamics.make_state();
  for (std::size_t leg = 0; leg < dynamics.model().legs.size(); ++leg) {
    s.q[2 * leg] = config.prone_hip;
    s.q[2 * leg + 1] = config.prone_knee;
  }
  s.z = dynamics.model().nominal_height;
  rest_on_terrain(dynamics, s);
  return s;
}

ResetResult reset(Rng& rng, const ResetConfig& reset_config, const RandomizationConfig& randomization,
                  const Dynamics& dynamics) {
  ResetResult out;
  out.draw = draw_randomization(rng, randomization, dynamics.terrain().friction);
  WorldState s = dynamics.make_state();
  const auto& model = dynamics.model();
  const double noise = reset_config.pose_noise;
  for (std::size_t j = 0; j < s.q.size(); ++j) {
    const double nominal = (j % 2 == 0) ? reset_config.prone_hip : reset_config.prone_knee;
    const double jitter = noise > 0.0 ? rng.uniform(-noise, noise) : 0.0;
    s.q[j] = std::clamp(nominal + jitter, model.q_min[j], model.q_max[j]);
  }
  s.pitch = noise > 0.0 ? rng.uniform(-noise, noise) : 0.0;
  s.z = model.nominal_height;
  rest_on_terrain(dynamics, s);
  out.state = std::move(s);
  out.zeta.resize(out.state.q.size());
  for (auto& z : out.zeta) z = reset_config.zeta_init_max > 0.0 ? rng.uniform(0.0, reset_config.zeta_init_max) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Termination

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::None: return "none";
    case TerminationReason::Flip: return "flip";
    case TerminationReason::JointLimit: return "joint_limit";
    case TerminationReason::Timeout: return "timeout";
  }
  return "none";
}

TerminationReason check_termination(const WorldState& state, const RobotModel& model,
                                    const TerminationConfig& config) {
  if (std::abs(state.pitch) > config.flip_pitch) return TerminationReason::Flip;
  for (std::size_t j = 0; j < state.q.size(); ++j) {
    if (state.q[j] < model.q_min[j] - config.joint_margin || state.q[j] > model.q_max[j] + config.joint_margin) {
      return TerminationReason::JointLimit;
    }
  }
  if (state.time + 1e-9 >= config.episode_length) return TerminationReason::Timeout;
  return TerminationReason::None;
}

// ---------------------------------------------------------------------------
// Observation and IMU

std::vector<double> pack_observation(const ObservationParts& p) {
  const auto j = p.q.size();
  if (p.qdot.size() != j || p.tau.size() != j || p.zeta.size() != j) {
    throw ShapeError("observation parts differ in joint count");
  }
  std::vector<double> out;
  out.reserve(12 + 4 * j);
  out.insert(out.end(), p.v.begin(), p.v.end());
  out.insert(out.end(), p.w.begin(), p.w.end());
  out.insert(out.end(), p.g.begin(), p.g.end());
  out.insert(out.end(), p.q.begin(), p.q.end());
  out.insert(out.end(), p.qdot.begin(), p.qdot.end());
  out.insert(out.end(), p.cmd.begin(), p.cmd.end());
  out.insert(out.end(), p.tau.begin(), p.tau.end());
  out.insert(out.end(), p.zeta.begin(), p.zeta.end());
  return out;
}

ObservationParts unpack_observation(std::span<const double> obs, const ObservationLayout& layout) {
  if (static_cast<int>(obs.size()) != layout.size()) throw ShapeError("observation width does not match layout");
  ObservationParts p;
  const auto J = static_cast<std::size_t>(layout.joints);
  auto take3 = [&](int at) { return std::array<double, 3>{obs[at], obs[at + 1], obs[at + 2]}; };
  auto takeJ = [&](int at) { return std::vector<double>(obs.begin() + at, obs.begin() + at + static_cast<long>(J)); };
  p.v = take3(layout.v());
  p.w = take3(layout.w());
  p.g = take3(layout.g());
  p.q = takeJ(layout.q());
  p.qdot = takeJ(layout.qdot());
  p.cmd = take3(layout.cmd());
  p.tau = takeJ(layout.tau());
  p.zeta = takeJ(layout.zeta());
  return p;
}

std::array<double, 3> base_velocity_body(const WorldState& s) {
  const double c = std::cos(s.pitch);
  const double sn = std::sin(s.pitch);
  return {c * s.vx + sn * s.vz, 0.0, -sn * s.vx + c * s.vz};
}

std::array<double, 3> gravity_body(const WorldState& s) {
  return {-std::sin(s.pitch), 0.0, -std::cos(s.pitch)};
}

std::array<double, 3> angular_velocity_body(const WorldState& s) { return {0.0, s.pitch_rate, 0.0}; }

std::vector<double> assemble_observation(const WorldState& state, const biomech::ActuatorState& actuator,
                                         const CommandState& command) {
  ObservationParts p;
  p.v = base_velocity_body(state);
  p.w = angular_velocity_body(state);
  p.g = gravity_body(state);
  p.q = state.q;
  p.qdot = state.qdot;
  p.cmd = command.v_cmd;
  p.tau = actuator.tau;
  p.zeta = actuator.zeta;
  return pack_observation(p);
}

std::vector<double> observe(const WorldState& state, const biomech::ActuatorState& actuator,
                            const CommandState& command, Rng& hold_rng, double hold_probability,
                            std::span<const double> previous) {
  const bool hold = hold_rng.bernoulli(hold_probability);
  if (hold && !previous.empty()) return std::vector<double>(previous.begin(), previous.end());
  return assemble_observation(state, actuator, command);
}

ImuFrame imu_read(const WorldState& state, const WorldState& previous, double dt, Rng& noise_rng,
                  double noise_std, double gravity) {
  const double ax = (state.vx - previous.vx) / dt;
  const double az = (state.vz - previous.vz) / dt - gravity;
  const double c = std::cos(state.pitch);
  const double sn = std::sin(state.pitch);
  ImuFrame f;
  f.a = {c * ax + sn * az, 0.0, -sn * ax + c * az};
  f.w = angular_velocity_body(state);
  f.g = gravity_body(state);
  if (noise_std > 0.0) {
    for (auto* block : {&f.a, &f.w, &f.g}) {
      for (double& v : *block) v += noise_std * noise_rng.normal();
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Disturbances

WorldState apply_disturbance(const WorldState& state, const Dynamics& dynamics, const DisturbanceSpec& spec) {
  if (!dynamics.has_point(spec.point)) throw InvalidSpecError("unknown body point '" + spec.point + "'");
  if (!(spec.duration >= 0.0) || !std::isfinite(spec.fx) || !std::isfinite(spec.fz) || !std::isfinite(spec.start)) {
    throw InvalidSpecError("disturbance needs finite force and start and a non-negative duration");
  }
  WorldState next = state;
  next.disturbances.push_back(ExternalForce{spec.point, spec.fx, spec.fz, spec.start, spec.duration});
  return next;
}

// ---------------------------------------------------------------------------
// Environment

namespace {

Terrain make_terrain(const EnvConfig& config, Rng& rng) {
  Terrain t;
  switch (config.terrain) {
    case TerrainKind::Flat: t = Terrain::flat(); break;
    case TerrainKind::Rough: t = Terrain::rough(rng, config.rough_height); break;
    case TerrainKind::Slope: t = Terrain::inclined(config.slope_angle); break;
    case TerrainKind::Soft: break;
  }
  t.stiffness = config.contact_stiffness;
  t.damping = config.contact_damping;
  if (config.terrain == TerrainKind::Soft) {
    t.kind = TerrainKind::Soft;
    t.stiffness /= config.soft_factor;
    t.damping /= config.soft_factor;
  }
  t.friction = config.nominal_friction;
  return t;
}

}  // namespace

void EnvConfig::validate() const {
  const auto& r = command.ranges;
  if (!(r.vx_min < r.vx_max) || !(r.vy_min <= r.vy_max) || !(r.yaw_min <= r.yaw_max)) {
    throw ConfigError("command ranges need min < max");
  }
  if (!(command.resample_period > 0.0)) throw ConfigError("env.command_resample_period must be positive");
  if (!(randomization.added_mass_max >= 0.0) || !(randomization.friction_min > 0.0) ||
      !(randomization.friction_min <= randomization.friction_max) || !(randomization.com_shift_x >= 0.0) ||
      !(randomization.com_shift_yz >= 0.0)) {
    throw ConfigError("randomization ranges must be non-negative and ordered");
  }
  if (!(randomization.hold_probability >= 0.0 && randomization.hold_probability < 1.0)) {
    throw ConfigError("randomization.hold_probability must lie in [0, 1)");
  }
  if (!(reset.pose_noise >= 0.0) || !(reset.zeta_init_max >= 0.0)) throw ConfigError("reset noise must be >= 0");
  if (!(termination.flip_pitch > 0.0) || !(termination.joint_margin >= 0.0) || !(termination.episode_length > 0.0)) {
    throw ConfigError("termination thresholds must be positive");
  }
  if (!(physics_dt > 0.0 && physics_dt <= 0.02)) throw ConfigError("env.physics_dt must lie in (0, 0.02]");
  if (!(target_height > 0.0)) throw ConfigError("reward.target_height must be positive");
  if (!(contact_stiffness > 0.0) || !(contact_damping >= 0.0) || !(nominal_friction > 0.0)) {
    throw ConfigError("contact parameters must be positive");
  }
  if (!(rough_height >= 0.0) || !(std::abs(slope_angle) < 0.6) || !(soft_factor >= 1.0)) {
    throw ConfigError("terrain parameters out of range");
  }
  if (!(imu_noise >= 0.0)) throw ConfigError("env.imu_noise must be >= 0");
  rewards::RewardWeights::from_dt(physics_dt, reward_weights).validate();
}

Environment::Environment(EnvConfig config, RobotModel nominal, std::uint64_t seed)
    : config_(std::move(config)),
      nominal_(std::move(nominal)),
      rng_(seed),
      imu_rng_(rng_.split(1)),
      terrain_(make_terrain(config_, rng_)),
      dynamics_(nominal_, terrain_),
      weights_(rewards::RewardWeights::from_dt(config_.physics_dt, config_.reward_weights)) {
  config_.validate();
  nominal_.validate();
  const auto J = static_cast<std::size_t>(nominal_.joint_count());
  torque_scale_.assign(J, 1.0);
  torques_.assign(J, 0.0);
  held_action_.assign(J, 0.0);
  qddot_.assign(J, 0.0);
  actuator_params_ = biomech::ActuatorParams::uniform(J, 1.0, 1.0);
  actuator_params_.qdot_limit = nominal_.qdot_limit;
  actuator_params_.kappa_scale = config_.kappa_scale;
  actuator_params_.gamma = config_.gamma;
  actuator_params_.beta = config_.beta;
  actuator_params_.dt = config_.physics_dt;
  actuator_params_.validate();
  reset();
}

void Environment::rebuild_terrain() {
  if (config_.terrain == TerrainKind::Rough) terrain_ = make_terrain(config_, rng_);
}

void Environment::reset() {
  rebuild_terrain();
  // Randomization is drawn against the nominal dynamics, then the episode's
  // model and friction are installed before placing the robot.
  const RandomizationDraw draw = draw_randomization(rng_, config_.randomization, config_.nominal_friction);
  Terrain terrain = terrain_;
  terrain.friction = draw.friction;
  dynamics_ = Dynamics(apply_randomization(nominal_, draw), terrain);

  RandomizationConfig no_redraw = config_.randomization;
  no_redraw.enabled = false;
  ResetResult r = sim::reset(rng_, config_.reset, no_redraw, dynamics_);
  state_ = std::move(r.state);
  previous_ = state_;
  draw_ = draw;
  actuator_ = biomech::ActuatorState::zeros(torques_.size());
  actuator_.zeta = std::move(r.zeta);
  command_ = initial_command(rng_, config_.command);
  episode_ = EpisodeStats{};
  std::fill(torques_.begin(), torques_.end(), 0.0);
  std::fill(held_action_.begin(), held_action_.end(), 0.0);
  std::fill(qddot_.begin(), qddot_.end(), 0.0);
  last_observation_.clear();
}

std::span<const double> Environment::select_action(std::span<const double> policy_action) {
  if (policy_action.size() != held_action_.size()) throw ShapeError("action width mismatch");
  if (!rng_.bernoulli(draw_.hold_probability)) {
    std::copy(policy_action.begin(), policy_action.end(), held_action_.begin());
  }
  return held_action_;
}

void Environment::set_torque_scale(std::span<const double> scale) {
  if (scale.size() != torque_scale_.size()) throw ShapeError("torque scale width mismatch");
  std::copy(scale.begin(), scale.end(), torque_scale_.begin());
}

void Environment::add_disturbance(const DisturbanceSpec& spec) { state_ = apply_disturbance(state_, dynamics_, spec); }

TickResult Environment::tick(std::span<const double> action, const growth::Broadcast& broadcast) {
  const double dt = config_.physics_dt;
  for (std::size_t j = 0; j < torque_scale_.size(); ++j) {
    actuator_params_.tau_limit[j] = broadcast.tau_limit * torque_scale_[j];
  }
  state_.tau_limit = broadcast.tau_limit;
  state_.f_policy = broadcast.f_policy;
  if (config_.biomech_enabled) {
    biomech::actuator_step_inplace(action, state_.qdot, actuator_, actuator_params_, torques_);
  } else {
    biomech::direct_torque_inplace(action, actuator_, actuator_params_, torques_);
  }

  previous_ = state_;
  dynamics_.step(state_, torques_, dt);
  for (std::size_t j = 0; j < qddot_.size(); ++j) qddot_[j] = (state_.qdot[j] - previous_.qdot[j]) / dt;
  command_ = sample_command(command_, rng_, dt, config_.command);

  rewards::RewardContext ctx;
  ctx.v = base_velocity_body(state_);
  ctx.w_yaw = 0.0;
  ctx.g_vec = gravity_body(state_);
  ctx.q = state_.q;
  ctx.qdot = state_.qdot;
  ctx.qddot = qddot_;
  ctx.q_min = nominal_.q_min;
  ctx.q_max = nominal_.q_max;
  ctx.h_b = state_.z - dynamics_.terrain().height(state_.x);
  ctx.h_t = config_.target_height;
  ctx.v_cmd = command_.v_cmd;
  ctx.zeta = actuator_.zeta;
  ctx.tau_d = action;
  ctx.kappa_scale = config_.kappa_scale;
  ctx.cmd_range_x = {config_.command.ranges.vx_min, config_.command.ranges.vx_max};

  TickResult out;
  ctx.g_growth = broadcast.g;
  out.reward = rewards::growth_reward(ctx, weights_);
  ctx.g_growth = 1.0;
  out.reward_final = rewards::growth_reward(ctx, weights_);
  out.reward_base = rewards::base_reward(ctx, weights_);
  out.termination = check_termination(state_, nominal_, config_.termination);

  episode_.reward += out.reward.total;
  episode_.reward_base += out.reward_base.total;
  episode_.reward_final += out.reward_final.total;
  episode_.duration += dt;
  episode_.ticks += 1;
  episode_.tracking_error_sum += std::abs(ctx.v[0] - command_.v_cmd[0]);
  for (double t : torques_) episode_.max_abs_torque = std::max(episode_.max_abs_torque, std::abs(t));
  episode_.termination = out.termination;
  return out;
}

std::vector<double> Environment::observe_for_policy() {
  last_observation_ = observe(state_, actuator_, command_, rng_, draw_.hold_probability, last_observation_);
  return last_observation_;
}

std::vector<double> Environment::estimator_frame() {
  const ImuFrame imu = imu_read(state_, previous_, config_.physics_dt, imu_rng_, config_.imu_noise);
  std::vector<double> frame;
  frame.reserve(2 * state_.q.size() + 9);
  frame.insert(frame.end(), state_.q.begin(), state_.q.end());
  frame.insert(frame.end(), state_.qdot.begin(), state_.qdot.end());
  frame.insert(frame.end(), imu.a.begin(), imu.a.end());
  frame.insert(frame.end(), imu.w.begin(), imu.w.end());
  frame.insert(frame.end(), imu.g.begin(), imu.g.end());
  return frame;
}

}  // namespace sata::sim
