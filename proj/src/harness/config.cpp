#include "sata/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "sata/harness/fs.hpp"
#include "sata/sim/robot_model.hpp"

namespace sata::harness {

namespace {

std::string join(const std::vector<std::string>& lines, const char* sep) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += sep;
    out += l;
  }
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element");
    out.push_back(item);
  }
  return out;
}

// Parsing and formatting per value type. Doubles use the shortest
// representation that reads back to the same bits.

template <typename T>
T parse_number(const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + raw + "' is not a valid number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("'" + raw + "' is not finite");
  }
  return value;
}

void parse_value(const std::string& raw, double& out) { out = parse_number<double>(raw); }
void parse_value(const std::string& raw, int& out) { out = parse_number<int>(raw); }
void parse_value(const std::string& raw, std::uint64_t& out) {
  if (trim(raw).starts_with('-')) throw ConfigError("'" + raw + "' must be non-negative");
  out = parse_number<std::uint64_t>(raw);
}
void parse_value(const std::string& raw, std::string& out) { out = trim(raw); }
void parse_value(const std::string& raw, bool& out) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes") {
    out = true;
  } else if (t == "false" || t == "0" || t == "no") {
    out = false;
  } else {
    throw ConfigError("'" + raw + "' is not a boolean (true/false)");
  }
}
void parse_value(const std::string& raw, std::vector<int>& out) {
  out.clear();
  for (const auto& item : split_list(raw)) out.push_back(parse_number<int>(item));
}
void parse_value(const std::string& raw, std::vector<std::uint64_t>& out) {
  out.clear();
  for (const auto& item : split_list(raw)) {
    std::uint64_t v = 0;
    parse_value(item, v);
    out.push_back(v);
  }
}
void parse_value(const std::string& raw, std::vector<std::string>& out) { out = split_list(raw); }
void parse_value(const std::string& raw, sim::TerrainKind& out) { out = sim::parse_terrain_kind(trim(raw)); }
void parse_value(const std::string& raw, nets::Activation& out) { out = nets::parse_activation(trim(raw)); }
void parse_value(const std::string& raw, ScenarioId& out) { out = parse_scenario(trim(raw)); }
void parse_value(const std::string& raw, std::optional<double>& out) {
  const std::string t = trim(raw);
  if (t.empty() || t == "none") {
    out.reset();
  } else {
    out = parse_number<double>(t);
  }
}

std::string format_value(double v) { return fmt::format("{}", v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(const std::string& v) { return v; }
std::string format_value(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string format_value(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) parts.push_back(format_value(x));
  return join(parts, ",");
}
std::string format_value(sim::TerrainKind v) { return sim::to_string(v); }
std::string format_value(nets::Activation v) { return nets::to_string(v); }
std::string format_value(ScenarioId v) { return to_string(v); }
std::string format_value(const std::optional<double>& v) { return v ? format_value(*v) : "none"; }

template <typename Access>
ConfigKey make_key(std::string section, std::string name, Access access, bool required = false) {
  ConfigKey k;
  k.section = std::move(section);
  k.name = std::move(name);
  k.required = required;
  k.get = [access](const ExperimentConfig& c) {
    // The accessor only reads through this reference.
    return format_value(access(const_cast<ExperimentConfig&>(c)));
  };
  k.set = [access](ExperimentConfig& c, const std::string& raw) { parse_value(raw, access(c)); };
  return k;
}

std::vector<ConfigKey> build_registry() {
  std::vector<ConfigKey> r;
  auto add = [&r](ConfigKey k) { r.push_back(std::move(k)); };

  add(make_key("run", "seed", [](ExperimentConfig& c) -> auto& { return c.train.seed; }, true));
  add(make_key("run", "iterations", [](ExperimentConfig& c) -> auto& { return c.train.iterations; }, true));
  add(make_key("run", "name", [](ExperimentConfig& c) -> auto& { return c.run_name; }));
  add(make_key("run", "out_dir", [](ExperimentConfig& c) -> auto& { return c.out_dir; }));
  add(make_key("run", "checkpoint", [](ExperimentConfig& c) -> auto& { return c.checkpoint; }));
  add(make_key("run", "checkpoint_interval", [](ExperimentConfig& c) -> auto& { return c.train.checkpoint_interval; }));
  add(make_key("run", "reward_window", [](ExperimentConfig& c) -> auto& { return c.train.reward_window; }));

  add(make_key("growth", "enabled", [](ExperimentConfig& c) -> auto& { return c.train.growth.enabled; }));
  add(make_key("growth", "k", [](ExperimentConfig& c) -> auto& { return c.train.growth.k; }));
  add(make_key("growth", "t0", [](ExperimentConfig& c) -> auto& { return c.train.growth.t0; }));
  add(make_key("growth", "tau_start", [](ExperimentConfig& c) -> auto& { return c.train.growth.tau_start; }));
  add(make_key("growth", "tau_end", [](ExperimentConfig& c) -> auto& { return c.train.growth.tau_end; }));
  add(make_key("growth", "f_start", [](ExperimentConfig& c) -> auto& { return c.train.growth.f_start; }));
  add(make_key("growth", "f_end", [](ExperimentConfig& c) -> auto& { return c.train.growth.f_end; }));
  add(make_key("growth", "deployment_mode", [](ExperimentConfig& c) -> auto& { return c.train.growth.deployment_mode; }));

  add(make_key("biomech", "enabled", [](ExperimentConfig& c) -> auto& { return c.train.env.biomech_enabled; }));
  add(make_key("biomech", "kappa_scale", [](ExperimentConfig& c) -> auto& { return c.train.env.kappa_scale; }));
  add(make_key("biomech", "gamma", [](ExperimentConfig& c) -> auto& { return c.train.env.gamma; }));
  add(make_key("biomech", "beta", [](ExperimentConfig& c) -> auto& { return c.train.env.beta; }));

  add(make_key("reward", "target_height", [](ExperimentConfig& c) -> auto& { return c.train.env.target_height; }));
  for (int i = 0; i < rewards::kTermCount; ++i) {
    add(make_key("reward", "w_" + std::string(rewards::term_name(i)),
                 [i](ExperimentConfig& c) -> auto& { return c.train.env.reward_weights[static_cast<std::size_t>(i)]; }));
  }

  add(make_key("env", "physics_dt", [](ExperimentConfig& c) -> auto& { return c.train.env.physics_dt; }));
  add(make_key("env", "episode_length", [](ExperimentConfig& c) -> auto& { return c.train.env.termination.episode_length; }));
  add(make_key("env", "flip_pitch", [](ExperimentConfig& c) -> auto& { return c.train.env.termination.flip_pitch; }));
  add(make_key("env", "joint_margin", [](ExperimentConfig& c) -> auto& { return c.train.env.termination.joint_margin; }));
  add(make_key("env", "terrain", [](ExperimentConfig& c) -> auto& { return c.train.env.terrain; }));
  add(make_key("env", "rough_height", [](ExperimentConfig& c) -> auto& { return c.train.env.rough_height; }));
  add(make_key("env", "slope_angle", [](ExperimentConfig& c) -> auto& { return c.train.env.slope_angle; }));
  add(make_key("env", "soft_factor", [](ExperimentConfig& c) -> auto& { return c.train.env.soft_factor; }));
  add(make_key("env", "contact_stiffness", [](ExperimentConfig& c) -> auto& { return c.train.env.contact_stiffness; }));
  add(make_key("env", "contact_damping", [](ExperimentConfig& c) -> auto& { return c.train.env.contact_damping; }));
  add(make_key("env", "friction", [](ExperimentConfig& c) -> auto& { return c.train.env.nominal_friction; }));
  add(make_key("env", "imu_noise", [](ExperimentConfig& c) -> auto& { return c.train.env.imu_noise; }));
  add(make_key("env", "cmd_vx_min", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.vx_min; }));
  add(make_key("env", "cmd_vx_max", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.vx_max; }));
  add(make_key("env", "cmd_vy_min", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.vy_min; }));
  add(make_key("env", "cmd_vy_max", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.vy_max; }));
  add(make_key("env", "cmd_yaw_min", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.yaw_min; }));
  add(make_key("env", "cmd_yaw_max", [](ExperimentConfig& c) -> auto& { return c.train.env.command.ranges.yaw_max; }));
  add(make_key("env", "cmd_resample_period", [](ExperimentConfig& c) -> auto& { return c.train.env.command.resample_period; }));
  add(make_key("env", "cmd_fixed_vx", [](ExperimentConfig& c) -> auto& { return c.train.env.command.override_vx; }));
  add(make_key("env", "planar", [](ExperimentConfig& c) -> auto& { return c.train.env.command.planar; }));
  add(make_key("env", "prone_hip", [](ExperimentConfig& c) -> auto& { return c.train.env.reset.prone_hip; }));
  add(make_key("env", "prone_knee", [](ExperimentConfig& c) -> auto& { return c.train.env.reset.prone_knee; }));
  add(make_key("env", "pose_noise", [](ExperimentConfig& c) -> auto& { return c.train.env.reset.pose_noise; }));
  add(make_key("env", "zeta_init_max", [](ExperimentConfig& c) -> auto& { return c.train.env.reset.zeta_init_max; }));

  add(make_key("randomization", "enabled", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.enabled; }));
  add(make_key("randomization", "added_mass_max", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.added_mass_max; }));
  add(make_key("randomization", "friction_min", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.friction_min; }));
  add(make_key("randomization", "friction_max", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.friction_max; }));
  add(make_key("randomization", "com_shift_x", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.com_shift_x; }));
  add(make_key("randomization", "com_shift_yz", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.com_shift_yz; }));
  add(make_key("randomization", "hold_probability", [](ExperimentConfig& c) -> auto& { return c.train.env.randomization.hold_probability; }));

  add(make_key("nets", "joints", [](ExperimentConfig& c) -> auto& { return c.train.nets.joints; }));
  add(make_key("nets", "actor_hidden", [](ExperimentConfig& c) -> auto& { return c.train.nets.actor_hidden; }));
  add(make_key("nets", "critic_hidden", [](ExperimentConfig& c) -> auto& { return c.train.nets.critic_hidden; }));
  add(make_key("nets", "estimator_hidden", [](ExperimentConfig& c) -> auto& { return c.train.nets.estimator_hidden; }));
  add(make_key("nets", "activation", [](ExperimentConfig& c) -> auto& { return c.train.nets.activation; }));
  add(make_key("nets", "init_log_std", [](ExperimentConfig& c) -> auto& { return c.train.nets.init_log_std; }));
  add(make_key("nets", "hidden_gain", [](ExperimentConfig& c) -> auto& { return c.train.nets.hidden_gain; }));
  add(make_key("nets", "actor_output_gain", [](ExperimentConfig& c) -> auto& { return c.train.nets.actor_output_gain; }));

  add(make_key("ppo", "num_envs", [](ExperimentConfig& c) -> auto& { return c.train.rollout.num_envs; }));
  add(make_key("ppo", "horizon", [](ExperimentConfig& c) -> auto& { return c.train.rollout.horizon; }));
  add(make_key("ppo", "random_initial_time", [](ExperimentConfig& c) -> auto& { return c.train.rollout.random_initial_time; }));
  add(make_key("ppo", "clip", [](ExperimentConfig& c) -> auto& { return c.train.ppo.clip; }));
  add(make_key("ppo", "gamma", [](ExperimentConfig& c) -> auto& { return c.train.ppo.gamma; }));
  add(make_key("ppo", "lambda", [](ExperimentConfig& c) -> auto& { return c.train.ppo.lambda; }));
  add(make_key("ppo", "epochs", [](ExperimentConfig& c) -> auto& { return c.train.ppo.epochs; }));
  add(make_key("ppo", "minibatches", [](ExperimentConfig& c) -> auto& { return c.train.ppo.minibatches; }));
  add(make_key("ppo", "entropy_coef", [](ExperimentConfig& c) -> auto& { return c.train.ppo.entropy_coef; }));
  add(make_key("ppo", "value_coef", [](ExperimentConfig& c) -> auto& { return c.train.ppo.value_coef; }));
  add(make_key("ppo", "learning_rate", [](ExperimentConfig& c) -> auto& { return c.train.ppo.learning_rate; }));
  add(make_key("ppo", "adaptive_lr", [](ExperimentConfig& c) -> auto& { return c.train.ppo.adaptive_lr; }));
  add(make_key("ppo", "desired_kl", [](ExperimentConfig& c) -> auto& { return c.train.ppo.desired_kl; }));
  add(make_key("ppo", "lr_min", [](ExperimentConfig& c) -> auto& { return c.train.ppo.lr_min; }));
  add(make_key("ppo", "lr_max", [](ExperimentConfig& c) -> auto& { return c.train.ppo.lr_max; }));
  add(make_key("ppo", "max_grad_norm", [](ExperimentConfig& c) -> auto& { return c.train.ppo.max_grad_norm; }));
  add(make_key("ppo", "clipped_value_loss", [](ExperimentConfig& c) -> auto& { return c.train.ppo.clipped_value_loss; }));

  add(make_key("estimator", "interval", [](ExperimentConfig& c) -> auto& { return c.train.estimator_interval; }));
  add(make_key("estimator", "epochs", [](ExperimentConfig& c) -> auto& { return c.train.estimator.epochs; }));
  add(make_key("estimator", "minibatch", [](ExperimentConfig& c) -> auto& { return c.train.estimator.minibatch; }));
  add(make_key("estimator", "learning_rate", [](ExperimentConfig& c) -> auto& { return c.train.estimator.learning_rate; }));
  add(make_key("estimator", "holdout_every", [](ExperimentConfig& c) -> auto& { return c.train.estimator.holdout_every; }));
  add(make_key("estimator", "capacity", [](ExperimentConfig& c) -> auto& { return c.train.rollout.estimator_capacity; }));
  add(make_key("estimator", "sample_probability", [](ExperimentConfig& c) -> auto& { return c.train.rollout.estimator_sample_prob; }));

  add(make_key("eval", "episodes", [](ExperimentConfig& c) -> auto& { return c.eval.episodes; }));
  add(make_key("eval", "episode_length", [](ExperimentConfig& c) -> auto& { return c.eval.episode_length; }));
  add(make_key("eval", "deployment_mode", [](ExperimentConfig& c) -> auto& { return c.eval.deployment_mode; }));
  add(make_key("eval", "use_estimator", [](ExperimentConfig& c) -> auto& { return c.eval.use_estimator; }));
  add(make_key("eval", "deterministic", [](ExperimentConfig& c) -> auto& { return c.eval.deterministic; }));
  add(make_key("eval", "seed", [](ExperimentConfig& c) -> auto& { return c.eval.seed; }));
  add(make_key("eval", "trajectory", [](ExperimentConfig& c) -> auto& { return c.eval.trajectory; }));

  add(make_key("scenario", "id", [](ExperimentConfig& c) -> auto& { return c.scenario.id; }));
  add(make_key("scenario", "warmup", [](ExperimentConfig& c) -> auto& { return c.scenario.warmup; }));
  add(make_key("scenario", "command_vx", [](ExperimentConfig& c) -> auto& { return c.scenario.command_vx; }));
  add(make_key("scenario", "leg", [](ExperimentConfig& c) -> auto& { return c.scenario.leg; }));
  add(make_key("scenario", "torque_fraction", [](ExperimentConfig& c) -> auto& { return c.scenario.torque_fraction; }));
  add(make_key("scenario", "window_start", [](ExperimentConfig& c) -> auto& { return c.scenario.window_start; }));
  add(make_key("scenario", "window_end", [](ExperimentConfig& c) -> auto& { return c.scenario.window_end; }));
  add(make_key("scenario", "push_fx", [](ExperimentConfig& c) -> auto& { return c.scenario.push_fx; }));
  add(make_key("scenario", "push_fz", [](ExperimentConfig& c) -> auto& { return c.scenario.push_fz; }));
  add(make_key("scenario", "push_start", [](ExperimentConfig& c) -> auto& { return c.scenario.push_start; }));
  add(make_key("scenario", "push_duration", [](ExperimentConfig& c) -> auto& { return c.scenario.push_duration; }));
  add(make_key("scenario", "press_fz", [](ExperimentConfig& c) -> auto& { return c.scenario.press_fz; }));
  add(make_key("scenario", "press_start", [](ExperimentConfig& c) -> auto& { return c.scenario.press_start; }));
  add(make_key("scenario", "press_duration", [](ExperimentConfig& c) -> auto& { return c.scenario.press_duration; }));
  add(make_key("scenario", "ood_vx", [](ExperimentConfig& c) -> auto& { return c.scenario.ood_vx; }));
  add(make_key("scenario", "sweep_min", [](ExperimentConfig& c) -> auto& { return c.scenario.sweep_min; }));
  add(make_key("scenario", "sweep_max", [](ExperimentConfig& c) -> auto& { return c.scenario.sweep_max; }));
  add(make_key("scenario", "sweep_steps", [](ExperimentConfig& c) -> auto& { return c.scenario.sweep_steps; }));

  add(make_key("ablation", "seeds", [](ExperimentConfig& c) -> auto& { return c.ablation.seeds; }));
  add(make_key("ablation", "variants", [](ExperimentConfig& c) -> auto& { return c.ablation.variants; }));
  add(make_key("ablation", "early_fraction", [](ExperimentConfig& c) -> auto& { return c.ablation.early_fraction; }));
  return r;
}

const ConfigKey* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

// Collects the first failure of each independent validator.
template <typename F>
void collect(std::vector<std::string>& problems, F&& check) {
  try {
    check();
  } catch (const ConfigErrorList& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  } catch (const Error& e) {
    problems.emplace_back(e.what());
  }
}

bool safe_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  }) && s != "." && s != "..";
}

ExperimentConfig apply(const boost::property_tree::ptree* tree, const Overrides& overrides, bool require_run_keys) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  std::set<std::string> seen;

  auto assign = [&](const std::string& section, const std::string& name, const std::string& value,
                    const std::string& origin) {
    const ConfigKey* key = find_key(section, name);
    if (key == nullptr) {
      problems.push_back(origin + "unknown key '" + section + "." + name + "'");
      return;
    }
    try {
      key->set(cfg, value);
      seen.insert(key->dotted());
    } catch (const Error& e) {
      problems.push_back(origin + key->dotted() + ": " + e.what());
    }
  };

  if (tree != nullptr) {
    for (const auto& [section, body] : *tree) {
      if (body.empty() && !body.data().empty()) {
        problems.push_back("key '" + section + "' is outside any [section]");
        continue;
      }
      for (const auto& [name, leaf] : body) assign(section, name, leaf.data(), "");
    }
  }
  for (const auto& [dotted, value] : overrides) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) {
      problems.push_back("override '" + dotted + "' is not of the form section.key");
      continue;
    }
    assign(dotted.substr(0, dot), dotted.substr(dot + 1), value, "override ");
  }
  for (const auto& k : config_keys()) {
    if (require_run_keys && k.required && !seen.contains(k.dotted())) problems.push_back("missing required key '" + k.dotted() + "'");
  }
  collect(problems, [&] { cfg.validate(); });
  if (!problems.empty()) throw ConfigErrorList(std::move(problems));
  return cfg;
}

}  // namespace

ConfigErrorList::ConfigErrorList(std::vector<std::string> problems)
    : ConfigError("invalid configuration:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> registry = build_registry();
  return registry;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  const sim::RobotModel model = sim::RobotModel::desk_quadruped();
  if (!safe_name(run_name)) problems.emplace_back("run.name must be a non-empty file name of [A-Za-z0-9_.-]");
  if (out_dir.empty()) problems.emplace_back("run.out_dir must not be empty");
  if (train.iterations < 0) problems.emplace_back("run.iterations must be >= 0");
  if (train.checkpoint_interval <= 0) problems.emplace_back("run.checkpoint_interval must be positive");
  if (train.reward_window <= 0) problems.emplace_back("run.reward_window must be positive");
  if (train.estimator_interval <= 0) problems.emplace_back("estimator.interval must be positive");
  if (train.rollout.num_envs <= 0 || train.rollout.horizon <= 0) {
    problems.emplace_back("ppo.num_envs and ppo.horizon must be positive");
  }
  if (train.rollout.estimator_capacity == 0) problems.emplace_back("estimator.capacity must be positive");
  if (!(train.rollout.estimator_sample_prob >= 0.0 && train.rollout.estimator_sample_prob <= 1.0)) {
    problems.emplace_back("estimator.sample_probability must lie in [0, 1]");
  }
  if (train.nets.joints != model.joint_count()) {
    problems.push_back(fmt::format("nets.joints must equal the robot's joint count ({})", model.joint_count()));
  }
  collect(problems, [&] { train.growth.validate(); });
  collect(problems, [&] { train.env.validate(); });
  collect(problems, [&] { train.nets.validate(); });
  collect(problems, [&] { train.ppo.validate(); });
  collect(problems, [&] { train.estimator.validate(); });
  collect(problems, [&] { eval.validate(); });
  collect(problems, [&] { scenario.validate(static_cast<int>(model.legs.size())); });
  if (ablation.seeds.empty()) problems.emplace_back("ablation.seeds must list at least one seed");
  std::set<std::uint64_t> unique(ablation.seeds.begin(), ablation.seeds.end());
  if (unique.size() != ablation.seeds.size()) problems.emplace_back("ablation.seeds must be distinct");
  for (const auto& v : ablation.variants) {
    if (v != "sata" && v != "no_growth" && v != "no_biomech") {
      problems.push_back("ablation.variants: unknown variant '" + v + "' (expected sata, no_growth, no_biomech)");
    }
  }
  if (ablation.variants.empty()) problems.emplace_back("ablation.variants must not be empty");
  if (!(ablation.early_fraction > 0.0 && ablation.early_fraction <= 1.0)) {
    problems.emplace_back("ablation.early_fraction must lie in (0, 1]");
  }
  if (!problems.empty()) throw ConfigErrorList(std::move(problems));
}

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides, bool require_run_keys) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigErrorList({fmt::format("line {}: {}", e.line(), e.message())});
  }
  return apply(&tree, overrides, require_run_keys);
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides,
                             bool require_run_keys) {
  std::string text;
  try {
    text = fs::read_file(path);
  } catch (const Error& e) {
    throw ConfigErrorList({e.what()});
  }
  return parse_config(text, overrides, require_run_keys);
}

ExperimentConfig config_from_overrides(const Overrides& overrides, bool require_run_keys) {
  return apply(nullptr, overrides, require_run_keys);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

}  // namespace sata::harness
