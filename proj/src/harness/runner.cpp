#include "sata/harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "sata/error.hpp"
#include "sata/harness/fs.hpp"
#include "sata/nets/checkpoint.hpp"
#include "sata/sim/robot_model.hpp"

namespace sata::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string metrics_text(const std::vector<ppo::IterationMetrics>& metrics) {
  std::string out = ppo::metrics_header_line() + "\n";
  for (const auto& m : metrics) out += ppo::format_metrics_row(m) + "\n";
  return out;
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
  return std::filesystem::path(config.out_dir) / config.run_name;
}

nlohmann::json metrics_json(const ppo::IterationMetrics& m) {
  nlohmann::json j;
  for (const auto& c : ppo::metrics_columns()) j[c] = metric_value(m, c);
  return j;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  int n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n ? s / n : kNan;
}

// Half-width of the two-sided 95% Student-t interval of the mean.
double ci95(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs) {
    if (!std::isnan(x)) v.push_back(x);
  }
  if (v.size() < 2) return kNan;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  const boost::math::students_t dist(static_cast<double>(v.size() - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

double metric_value(const ppo::IterationMetrics& m, const std::string& column) {
  static const std::map<std::string, double ppo::IterationMetrics::*> fields = {
      {"t", &ppo::IterationMetrics::t},
      {"G", &ppo::IterationMetrics::g},
      {"tau_limit", &ppo::IterationMetrics::tau_limit},
      {"f_policy", &ppo::IterationMetrics::f_policy},
      {"mean_episode_reward", &ppo::IterationMetrics::mean_episode_reward},
      {"mean_episode_reward_base", &ppo::IterationMetrics::mean_episode_reward_base},
      {"episode_length", &ppo::IterationMetrics::mean_episode_length},
      {"step_reward", &ppo::IterationMetrics::step_reward},
      {"kl", &ppo::IterationMetrics::kl},
      {"surrogate_loss", &ppo::IterationMetrics::surrogate_loss},
      {"value_loss", &ppo::IterationMetrics::value_loss},
      {"entropy", &ppo::IterationMetrics::entropy},
      {"learning_rate", &ppo::IterationMetrics::learning_rate},
      {"estimator_rmse", &ppo::IterationMetrics::estimator_rmse},
      {"estimator_holdout_rmse", &ppo::IterationMetrics::estimator_holdout_rmse},
  };
  if (column == "iteration") return m.iteration;
  if (column == "episodes") return m.episodes;
  if (column == "failures") return m.failures;
  if (const auto it = fields.find(column); it != fields.end()) return m.*(it->second);
  for (int k = 0; k < rewards::kTermCount; ++k) {
    if (column == "rew_" + std::string(rewards::term_name(k))) return m.term_means[static_cast<std::size_t>(k)];
  }
  throw ConfigError("unknown metrics column '" + column + "'");
}

double column_mean(const std::vector<ppo::IterationMetrics>& metrics, const std::string& column, std::size_t first,
                   std::size_t last) {
  std::vector<double> xs;
  for (std::size_t i = first; i < std::min(last, metrics.size()); ++i) xs.push_back(metric_value(metrics[i], column));
  return mean_of(xs);
}

TrainArtifacts run_train(const ExperimentConfig& config) {
  config.validate();
  TrainArtifacts art;
  art.run_dir = run_directory(config);
  art.metrics = art.run_dir / "metrics.csv";
  art.config = art.run_dir / "config.ini";
  art.summary = art.run_dir / "summary.json";
  const auto ckpt_dir = art.run_dir / "checkpoints";
  fs::ensure_directory(ckpt_dir);
  fs::write_atomic(art.config, serialize_config(config));

  std::vector<ppo::IterationMetrics> so_far;
  ppo::TrainHooks hooks;
  hooks.on_iteration = [&](const ppo::IterationMetrics& m) { so_far.push_back(m); };
  hooks.on_checkpoint = [&](const nets::PolicyBundle& bundle, int iteration) {
    const auto path = ckpt_dir / fmt::format("ckpt_{:06d}.bin", iteration);
    nets::save_checkpoint(path, bundle);
    art.checkpoints.push_back(path);
    fs::write_atomic(art.metrics, metrics_text(so_far));
  };

  nlohmann::json summary;
  summary["format_version"] = kSummaryFormatVersion;
  summary["checkpoint_format_version"] = nets::kCheckpointVersion;
  summary["run"] = config.run_name;
  summary["seed"] = config.train.seed;
  summary["iterations"] = config.train.iterations;
  summary["growth_enabled"] = config.train.growth.enabled;
  summary["biomech_enabled"] = config.train.env.biomech_enabled;
  summary["metrics_columns"] = ppo::metrics_columns();

  const auto t0 = std::chrono::steady_clock::now();
  try {
    art.result = ppo::train(config.train, hooks);
  } catch (const std::exception& e) {
    summary["status"] = "failed";
    summary["error"] = e.what();
    summary["completed_iterations"] = so_far.size();
    fs::write_atomic(art.metrics, metrics_text(so_far));
    fs::write_atomic(art.summary, summary.dump(2) + "\n");
    throw;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::write_atomic(art.metrics, metrics_text(art.result.metrics));

  const auto& ms = art.result.metrics;
  const std::size_t tenth = std::max<std::size_t>(1, ms.size() / 10);
  summary["status"] = "completed";
  summary["completed_iterations"] = ms.size();
  summary["elapsed_seconds"] = elapsed;
  summary["final"] = ms.empty() ? nlohmann::json() : metrics_json(ms.back());
  summary["tracking_x_first_tenth"] = column_mean(ms, "rew_tracking_x", 0, tenth);
  summary["tracking_x_last_tenth"] = column_mean(ms, "rew_tracking_x", ms.size() - std::min(tenth, ms.size()), ms.size());
  if (art.result.estimator) {
    const auto& est = *art.result.estimator;
    summary["estimator"] = {{"holdout_rmse", est.holdout_rmse},
                            {"baseline_rmse", est.baseline_rmse},
                            {"train_samples", est.train_samples},
                            {"holdout_samples", est.holdout_samples}};
  }
  std::vector<std::string> names;
  for (const auto& p : art.checkpoints) names.push_back(p.filename().string());
  summary["checkpoints"] = names;
  fs::write_atomic(art.summary, summary.dump(2) + "\n");
  return art;
}

ScenarioReport evaluate_bundle(const nets::PolicyBundle& bundle, const ExperimentConfig& config,
                               const ScenarioSpec& scenario) {
  EvalSetup setup;
  setup.env = config.train.env;
  setup.growth = config.train.growth;
  setup.eval = config.eval;
  setup.growth_t = static_cast<double>(bundle.iteration) * config.train.rollout.horizon;
  return run_scenario(bundle, setup, scenario);
}

ScenarioReport run_eval(const ExperimentConfig& config) {
  config.validate();
  if (config.checkpoint.empty()) throw ConfigError("eval needs run.checkpoint (--checkpoint)");
  const sim::RobotModel model = sim::RobotModel::desk_quadruped();
  const nets::PolicyBundle bundle = nets::load_checkpoint(config.checkpoint, model.joint_count());
  ScenarioReport report = evaluate_bundle(bundle, config, config.scenario);
  const auto dir = run_directory(config);
  fs::ensure_directory(dir);
  fs::write_atomic(dir / ("eval_" + report.scenario + ".json"), report_to_json(report) + "\n");
  if (!report.trajectory.empty()) fs::write_atomic(dir / ("trajectory_" + report.scenario + ".csv"), report.trajectory);
  return report;
}

ExperimentConfig apply_variant(const ExperimentConfig& config, const std::string& variant) {
  ExperimentConfig c = config;
  if (variant == "sata") {
    c.train.growth.enabled = true;
    c.train.env.biomech_enabled = true;
  } else if (variant == "no_growth") {
    c.train.growth.enabled = false;
    c.train.env.biomech_enabled = true;
  } else if (variant == "no_biomech") {
    c.train.growth.enabled = true;
    c.train.env.biomech_enabled = false;
  } else {
    throw ConfigError("unknown ablation variant '" + variant + "'");
  }
  return c;
}

AblationReport run_ablation(const ExperimentConfig& config) {
  config.validate();
  if (config.ablation.seeds.size() < 3) throw ConfigError("ablation needs at least 3 seeds");
  const auto root = run_directory(config);
  fs::ensure_directory(root);

  AblationReport report;
  for (const auto& variant : config.ablation.variants) {
    for (const std::uint64_t seed : config.ablation.seeds) {
      ExperimentConfig c = apply_variant(config, variant);
      c.train.seed = seed;
      c.out_dir = root.string();
      c.run_name = fmt::format("{}_s{}", variant, seed);
      AblationRun run;
      run.variant = variant;
      run.seed = seed;
      run.run_dir = root / c.run_name;
      spdlog::info("ablation: {} seed {}", variant, seed);
      try {
        const TrainArtifacts art = run_train(c);
        run.metrics = art.result.metrics;
        const auto& ms = run.metrics;
        const std::size_t early = static_cast<std::size_t>(
            std::ceil(config.ablation.early_fraction * static_cast<double>(ms.size())));
        const std::size_t tenth = std::max<std::size_t>(1, ms.size() / 10);
        run.early_reward = column_mean(ms, "mean_episode_reward_base", 0, early);
        run.initial_tracking_x = column_mean(ms, "rew_tracking_x", 0, tenth);
        run.final_tracking_x = column_mean(ms, "rew_tracking_x", ms.size() - std::min(tenth, ms.size()), ms.size());

        ScenarioSpec plain = c.scenario;
        plain.id = ScenarioId::Plain;
        const ScenarioReport pr = evaluate_bundle(art.result.bundle, c, plain);
        run.plain_completion = 1.0 - static_cast<double>(pr.falls) / static_cast<double>(pr.episodes.size());
        ScenarioSpec ood = c.scenario;
        ood.id = ScenarioId::OodVelocity;
        const ScenarioReport orep = evaluate_bundle(art.result.bundle, c, ood);
        run.ood_reward = orep.mean_reward_base;
        fs::write_atomic(run.run_dir / "eval_plain.json", report_to_json(pr) + "\n");
        fs::write_atomic(run.run_dir / "eval_ood_velocity.json", report_to_json(orep) + "\n");
      } catch (const std::exception& e) {
        run.crashed = true;
        run.error = e.what();
        run.early_reward = run.final_tracking_x = run.initial_tracking_x = run.ood_reward = kNan;
        run.plain_completion = kNan;
        spdlog::error("ablation: {} seed {} failed: {}", variant, seed, e.what());
      }
      report.runs.push_back(std::move(run));
    }
  }

  for (const auto& variant : config.ablation.variants) {
    VariantSummary s;
    s.variant = variant;
    std::vector<double> early, ood;
    for (const auto& r : report.runs) {
      if (r.variant != variant) continue;
      ++s.runs;
      if (r.crashed) ++s.crashes;
      early.push_back(r.early_reward);
      ood.push_back(r.ood_reward);
    }
    s.early_mean = mean_of(early);
    s.early_ci95 = ci95(early);
    s.ood_mean = mean_of(ood);
    s.ood_ci95 = ci95(ood);
    report.variants.push_back(s);
  }

  auto find = [&](const std::string& variant, std::uint64_t seed) -> const AblationRun* {
    for (const auto& r : report.runs) {
      if (r.variant == variant && r.seed == seed && !r.crashed) return &r;
    }
    return nullptr;
  };
  for (const std::uint64_t seed : config.ablation.seeds) {
    const AblationRun* a = find("sata", seed);
    const AblationRun* b = find("no_growth", seed);
    if (a == nullptr || b == nullptr) continue;
    ++report.compared_seeds;
    if (a->early_reward > b->early_reward) ++report.early_wins;
    if (a->ood_reward >= b->ood_reward) ++report.ood_wins;
  }

  // Aligned per-iteration tables, one column per (variant, seed); rows run
  // to the longest completed series and shorter ones are padded with nan.
  for (const std::string column : {"mean_episode_reward", "mean_episode_reward_base", "rew_tracking_x", "tau_limit"}) {
    std::size_t rows = 0;
    std::string text = "iteration";
    for (const auto& r : report.runs) {
      text += fmt::format(",{}_s{}", r.variant, r.seed);
      rows = std::max(rows, r.metrics.size());
    }
    text += "\n";
    for (std::size_t i = 0; i < rows; ++i) {
      text += std::to_string(i + 1);
      for (const auto& r : report.runs) {
        const double v = i < r.metrics.size() ? metric_value(r.metrics[i], column) : kNan;
        text += std::isnan(v) ? std::string(",nan") : fmt::format(",{:.10g}", v);
      }
      text += "\n";
    }
    fs::write_atomic(root / ("ablation_" + column + ".csv"), text);
  }

  nlohmann::json j;
  j["format_version"] = kSummaryFormatVersion;
  j["early_fraction"] = config.ablation.early_fraction;
  j["early_reward_metric"] = "mean_episode_reward_base";
  j["compared_seeds"] = report.compared_seeds;
  j["early_wins_sata_over_no_growth"] = report.early_wins;
  j["ood_wins_sata_over_no_growth"] = report.ood_wins;
  for (const auto& r : report.runs) {
    nlohmann::json e;
    e["variant"] = r.variant;
    e["seed"] = r.seed;
    e["crashed"] = r.crashed;
    if (r.crashed) e["error"] = r.error;
    e["early_reward"] = r.early_reward;
    e["tracking_x_first_tenth"] = r.initial_tracking_x;
    e["tracking_x_last_tenth"] = r.final_tracking_x;
    e["ood_reward"] = r.ood_reward;
    e["plain_completion"] = r.plain_completion;
    j["runs"].push_back(e);
  }
  for (const auto& s : report.variants) {
    j["variants"][s.variant] = {{"runs", s.runs},         {"crashes", s.crashes},  {"early_mean", s.early_mean},
                                {"early_ci95", s.early_ci95}, {"ood_mean", s.ood_mean}, {"ood_ci95", s.ood_ci95}};
  }
  fs::write_atomic(root / "ablation_summary.json", j.dump(2) + "\n");
  return report;
}

}  // namespace sata::harness
