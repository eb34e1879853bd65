#include "sata/harness/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "sata/error.hpp"
#include "sata/ppo/rollout.hpp"
#include "sata/sim/trajectory.hpp"

namespace sata::harness {

namespace {

constexpr std::array<std::pair<ScenarioId, const char*>, 9> kNames = {{
    {ScenarioId::Plain, "plain"},
    {ScenarioId::LegFailure, "leg_failure"},
    {ScenarioId::Push, "push"},
    {ScenarioId::Press, "press"},
    {ScenarioId::OodVelocity, "ood_velocity"},
    {ScenarioId::SoftGround, "soft_ground"},
    {ScenarioId::Slope, "slope"},
    {ScenarioId::Rough, "rough"},
    {ScenarioId::TrackingSweep, "tracking_sweep"},
}};

}  // namespace

ScenarioId parse_scenario(const std::string& name) {
  for (const auto& [id, n] : kNames) {
    if (name == n) return id;
  }
  std::string known;
  for (const auto& [id, n] : kNames) known += std::string(known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (expected one of " + known + ")");
}

std::string to_string(ScenarioId id) {
  for (const auto& [i, n] : kNames) {
    if (i == id) return n;
  }
  return "plain";
}

void ScenarioSpec::validate(int legs) const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(warmup >= 0.0)) throw ConfigError("scenario.warmup must be >= 0");
  if (!finite(command_vx) || std::abs(command_vx) > 3.0) throw ConfigError("scenario.command_vx must lie in [-3, 3]");
  if (leg < 0 || leg >= legs) throw ConfigError("scenario.leg must name an existing leg");
  if (!(torque_fraction >= 0.0 && torque_fraction <= 1.0)) throw ConfigError("scenario.torque_fraction must lie in [0, 1]");
  if (!(window_start >= 0.0 && window_end > window_start)) throw ConfigError("scenario window must satisfy 0 <= start < end");
  if (!finite(push_fx) || !finite(push_fz) || std::hypot(push_fx, push_fz) > 500.0) {
    throw ConfigError("scenario push force must be finite and at most 500 N");
  }
  if (!(push_start >= 0.0 && push_duration >= 0.0)) throw ConfigError("scenario push timing must be >= 0");
  if (!finite(press_fz) || std::abs(press_fz) > 1000.0) throw ConfigError("scenario.press_fz must lie in [-1000, 1000]");
  if (!(press_start >= 0.0 && press_duration >= 0.0)) throw ConfigError("scenario press timing must be >= 0");
  if (!finite(ood_vx) || std::abs(ood_vx) > 3.0) throw ConfigError("scenario.ood_vx must lie in [-3, 3]");
  if (!(sweep_min <= sweep_max) || sweep_steps < 1) throw ConfigError("scenario sweep needs min <= max and >= 1 step");
}

std::vector<double> ScenarioSpec::commands() const {
  switch (id) {
    case ScenarioId::OodVelocity: return {ood_vx};
    case ScenarioId::TrackingSweep: {
      std::vector<double> out;
      for (int i = 0; i < sweep_steps; ++i) {
        out.push_back(sweep_steps == 1 ? sweep_min
                                       : sweep_min + (sweep_max - sweep_min) * i / static_cast<double>(sweep_steps - 1));
      }
      return out;
    }
    default: return {command_vx};
  }
}

void EvalConfig::validate() const {
  if (episodes <= 0) throw ConfigError("eval.episodes must be positive");
  if (!(episode_length > 0.0)) throw ConfigError("eval.episode_length must be positive");
}

ScenarioReport run_scenario(const nets::PolicyBundle& bundle, const EvalSetup& setup, const ScenarioSpec& scenario) {
  const sim::RobotModel model = sim::RobotModel::desk_quadruped();
  const int legs = static_cast<int>(model.legs.size());
  const int J = model.joint_count();
  scenario.validate(legs);
  setup.eval.validate();
  if (bundle.joints != J) throw FormatError("checkpoint joint count does not match the robot");

  sim::EnvConfig env_cfg = setup.env;
  env_cfg.randomization.enabled = false;
  env_cfg.randomization.hold_probability = 0.0;
  env_cfg.termination.episode_length = setup.eval.episode_length;
  switch (scenario.id) {
    case ScenarioId::SoftGround: env_cfg.terrain = sim::TerrainKind::Soft; break;
    case ScenarioId::Slope: env_cfg.terrain = sim::TerrainKind::Slope; break;
    case ScenarioId::Rough: env_cfg.terrain = sim::TerrainKind::Rough; break;
    default: break;
  }

  growth::GrowthSchedule schedule = setup.growth;
  schedule.deployment_mode = setup.eval.deployment_mode;
  const growth::Broadcast bc =
      growth::broadcast(growth::GrowthState{setup.growth_t, growth::gompertz(setup.growth_t, schedule)}, schedule);

  ScenarioReport report;
  report.scenario = to_string(scenario.id);
  report.broadcast = bc;
  double ws = 0.0;
  double we = 0.0;
  switch (scenario.id) {
    case ScenarioId::LegFailure:
      ws = scenario.warmup + scenario.window_start;
      we = scenario.warmup + scenario.window_end;
      report.notes.push_back(fmt::format("leg {} torque limit scaled to {} of tau_end", scenario.leg,
                                         scenario.torque_fraction));
      break;
    case ScenarioId::Push:
      ws = scenario.warmup + scenario.push_start;
      we = ws + scenario.push_duration;
      report.notes.push_back(fmt::format("push ({}, {}) N for {} s on the base (invented magnitude)", scenario.push_fx,
                                         scenario.push_fz, scenario.push_duration));
      break;
    case ScenarioId::Press:
      ws = scenario.warmup + scenario.press_start;
      we = ws + scenario.press_duration;
      report.notes.push_back(fmt::format("press {} N for {} s on the top of the base (invented magnitude)",
                                         scenario.press_fz, scenario.press_duration));
      break;
    case ScenarioId::SoftGround:
      report.notes.push_back(fmt::format("contact stiffness and damping divided by {}", env_cfg.soft_factor));
      break;
    default: break;
  }
  report.window_start = ws;
  report.window_end = we;
  const bool has_window = we > ws;
  const double pre_start = ws - (we - ws);

  int index = 0;
  for (double vx : scenario.commands()) {
    for (int ep = 0; ep < setup.eval.episodes; ++ep, ++index) {
      env_cfg.command.override_vx = vx;
      sim::Environment env(env_cfg, model, derive_seed(setup.eval.seed, static_cast<std::uint64_t>(index)));
      Rng action_rng(derive_seed(setup.eval.seed, 100000 + static_cast<std::uint64_t>(index)));
      if (scenario.id == ScenarioId::Push) {
        env.add_disturbance({"base", scenario.push_fx, scenario.push_fz, ws, scenario.push_duration});
      } else if (scenario.id == ScenarioId::Press) {
        env.add_disturbance({"base_top", 0.0, scenario.press_fz, ws, scenario.press_duration});
      }
      ppo::DecimationClock clock(env_cfg.physics_dt, bc.f_policy);
      nets::EstimatorWindow window(J);
      std::vector<double> scale(static_cast<std::size_t>(J), 1.0);
      std::vector<double> action(static_cast<std::size_t>(J));
      std::vector<double> pre_sum(static_cast<std::size_t>(legs), 0.0);
      std::vector<double> win_sum(static_cast<std::size_t>(legs), 0.0);
      int pre_n = 0;
      int win_n = 0;
      double est_sq = 0.0;
      int est_n = 0;
      const bool trace = index == 0;

      sim::TerminationReason reason = sim::TerminationReason::None;
      while (reason == sim::TerminationReason::None) {
        std::vector<double> obs = sim::assemble_observation(env.state(), env.actuator(), env.command());
        if (setup.eval.use_estimator && !window.empty()) {
          const auto v_hat = nets::estimate_velocity(bundle, window);
          const auto v_true = sim::base_velocity_body(env.state());
          for (int k = 0; k < 3; ++k) {
            est_sq += (v_hat[k] - v_true[k]) * (v_hat[k] - v_true[k]);
            obs[static_cast<std::size_t>(k)] = v_hat[k];
          }
          ++est_n;
        }
        const nets::Mat<float> x = bundle.obs_scaling.apply(obs);
        nets::Mat<float> a;
        if (setup.eval.deterministic) {
          a = bundle.actor.forward(x);
        } else {
          a = nets::sample_actions(bundle.actor, bundle.log_std, x, action_rng).actions;
        }
        for (int j = 0; j < J; ++j) action[j] = a(j, 0);

        const int ticks = clock.next_period();
        for (int k = 0; k < ticks && reason == sim::TerminationReason::None; ++k) {
          const double t = env.state().time;
          if (scenario.id == ScenarioId::LegFailure) {
            const bool in_window = t + 1e-9 >= ws && t + 1e-9 < we;
            for (int j = 0; j < J; ++j) {
              scale[j] = (in_window && j / 2 == scenario.leg) ? scenario.torque_fraction : 1.0;
            }
            env.set_torque_scale(scale);
          }
          const sim::TickResult r = env.tick(action, bc);
          reason = r.termination;
          if (setup.eval.use_estimator) window.push(env.estimator_frame());
          if (trace && setup.eval.trajectory) {
            if (report.trajectory.empty()) {
              report.trajectory = sim::trajectory_header(J, static_cast<int>(env.state().contacts.size()));
            }
            report.trajectory += sim::trajectory_row(env.state(), env.actuator(), r.reward);
          }

          const auto& tau = env.last_torques();
          const bool in_pre = has_window && t + 1e-9 >= pre_start && t + 1e-9 < ws;
          const bool in_win = has_window && t + 1e-9 >= ws && t + 1e-9 < we;
          if (trace) report.trace.time.push_back(t);
          if (trace && report.trace.leg_abs_torque.empty()) report.trace.leg_abs_torque.resize(legs);
          for (int l = 0; l < legs; ++l) {
            const double m = std::abs(tau[2 * l]) + std::abs(tau[2 * l + 1]);
            if (trace) report.trace.leg_abs_torque[l].push_back(m);
            if (in_pre) pre_sum[l] += m;
            if (in_win) win_sum[l] += m;
          }
          pre_n += in_pre ? 1 : 0;
          win_n += in_win ? 1 : 0;
        }
      }

      const sim::EpisodeStats& st = env.episode();
      EpisodeReport er;
      er.command_vx = vx;
      er.duration = st.duration;
      er.fell = sim::is_failure(reason);
      er.termination = sim::to_string(reason);
      er.tracking_error = st.mean_tracking_error();
      er.reward = st.reward;
      er.reward_base = st.reward_base;
      er.reward_final = st.reward_final;
      er.max_abs_torque = st.max_abs_torque;
      if (has_window) {
        for (int l = 0; l < legs; ++l) {
          er.leg_torque_pre.push_back(pre_n ? pre_sum[l] / pre_n : 0.0);
          er.leg_torque_window.push_back(win_n ? win_sum[l] / win_n : 0.0);
        }
      }
      er.estimator_rmse = est_n ? std::sqrt(est_sq / est_n) : 0.0;
      report.falls += er.fell ? 1 : 0;
      report.max_abs_torque = std::max(report.max_abs_torque, er.max_abs_torque);
      report.episodes.push_back(std::move(er));
    }
  }
  const double inv = 1.0 / static_cast<double>(report.episodes.size());
  for (const auto& e : report.episodes) {
    report.mean_tracking_error += e.tracking_error * inv;
    report.mean_reward += e.reward * inv;
    report.mean_reward_base += e.reward_base * inv;
  }
  return report;
}

std::string report_to_json(const ScenarioReport& r) {
  using nlohmann::json;
  json j;
  j["scenario"] = r.scenario;
  j["notes"] = r.notes;
  j["broadcast"] = {{"G", r.broadcast.g}, {"tau_limit", r.broadcast.tau_limit}, {"f_policy", r.broadcast.f_policy}};
  j["window"] = {r.window_start, r.window_end};
  j["falls"] = r.falls;
  j["mean_tracking_error"] = r.mean_tracking_error;
  j["mean_reward"] = r.mean_reward;
  j["mean_reward_base"] = r.mean_reward_base;
  j["max_abs_torque"] = r.max_abs_torque;
  json eps = json::array();
  for (const auto& e : r.episodes) {
    eps.push_back({{"command_vx", e.command_vx},
                   {"duration", e.duration},
                   {"fell", e.fell},
                   {"termination", e.termination},
                   {"tracking_error", e.tracking_error},
                   {"reward", e.reward},
                   {"reward_base", e.reward_base},
                   {"reward_final", e.reward_final},
                   {"max_abs_torque", e.max_abs_torque},
                   {"leg_torque_pre", e.leg_torque_pre},
                   {"leg_torque_window", e.leg_torque_window},
                   {"estimator_rmse", e.estimator_rmse}});
  }
  j["episodes"] = std::move(eps);
  j["torque_trace"] = {{"time", r.trace.time}, {"leg_abs_torque", r.trace.leg_abs_torque}};
  return j.dump(2);
}

}  // namespace sata::harness
