#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sata/error.hpp"
#include "sata/harness/config.hpp"
#include "sata/harness/export.hpp"
#include "sata/harness/runner.hpp"

namespace {

using sata::harness::ExperimentConfig;
using sata::harness::Overrides;

// Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 file format error.
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f, bool training) {
  app->add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "output directory (run.out_dir)");
  app->add_option("--set", f.sets, "override as section.key=value (repeatable)");
  if (training) {
    app->add_option("--seed", f.seed, "run.seed");
    app->add_option("--iterations", f.iterations, "run.iterations");
  }
}

Overrides overrides_from(const CommonFlags& f) {
  Overrides o;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw sata::ConfigError("--set expects section.key=value, got '" + s + "'");
    o.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  // Flags win over --set and the file.
  if (f.seed) o.emplace_back("run.seed", std::to_string(*f.seed));
  if (f.iterations) o.emplace_back("run.iterations", std::to_string(*f.iterations));
  if (!f.out.empty()) o.emplace_back("run.out_dir", f.out);
  return o;
}

ExperimentConfig resolve(const CommonFlags& f, Overrides extra, bool require_run_keys) {
  Overrides o = overrides_from(f);
  o.insert(o.end(), extra.begin(), extra.end());
  if (f.config.empty()) return sata::harness::config_from_overrides(o, require_run_keys);
  return sata::harness::load_config(f.config, o, require_run_keys);
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("sata");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");
  if (const char* level = std::getenv("SATA_LOG_LEVEL")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept the exact "off".
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      spdlog::warn("SATA_LOG_LEVEL='{}' is not a log level; using info", level);
    } else {
      spdlog::set_level(parsed);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Growth-scheduled torque-control locomotion: train, evaluate, ablate, export"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  bool no_growth = false;
  bool no_biomech = false;
  auto* train = app.add_subcommand("train", "train one policy");
  add_common(train, train_flags, true);
  train->add_flag("--no-growth", no_growth, "fix G = 1 from the first step");
  train->add_flag("--no-biomech", no_biomech, "apply a_s * kappa clamped to the torque limit directly");

  CommonFlags eval_flags;
  std::string checkpoint;
  std::string scenario;
  bool deployment = false;
  bool trajectory = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint under a scenario");
  add_common(eval, eval_flags, false);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--scenario", scenario, "plain | leg_failure | push | press | ood_velocity | soft_ground | slope | "
                                           "rough | tracking_sweep");
  eval->add_flag("--deployment-mode", deployment, "pin tau_end and f_end and feed the estimated velocity");
  eval->add_flag("--trajectory", trajectory, "write trajectory_<scenario>.csv for the first episode");

  CommonFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "train the ablation variants on every configured seed");
  add_common(ablate, ablate_flags, true);

  std::string export_root;
  std::string export_out;
  auto* exp = app.add_subcommand("export", "long-format metrics table from a run directory tree");
  exp->add_option("run_dir", export_root, "directory searched for metrics.csv")->required();
  exp->add_option("--out", export_out, "output file (default: <run_dir>/tidy_metrics.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      Overrides extra;
      if (no_growth) extra.emplace_back("growth.enabled", "false");
      if (no_biomech) extra.emplace_back("biomech.enabled", "false");
      const ExperimentConfig cfg = resolve(train_flags, extra, true);
      const auto art = sata::harness::run_train(cfg);
      std::cout << art.run_dir.string() << "\n";
    } else if (eval->parsed()) {
      Overrides extra;
      extra.emplace_back("run.checkpoint", checkpoint);
      if (!scenario.empty()) extra.emplace_back("scenario.id", scenario);
      if (deployment) {
        extra.emplace_back("eval.deployment_mode", "true");
        extra.emplace_back("eval.use_estimator", "true");
      }
      if (trajectory) extra.emplace_back("eval.trajectory", "true");
      const ExperimentConfig cfg = resolve(eval_flags, extra, false);
      const auto report = sata::harness::run_eval(cfg);
      std::cout << sata::harness::report_to_json(report) << "\n";
    } else if (ablate->parsed()) {
      const ExperimentConfig cfg = resolve(ablate_flags, {}, true);
      const auto report = sata::harness::run_ablation(cfg);
      std::cout << fmt::format("{:<12} {:>5} {:>8} {:>12} {:>10} {:>12} {:>10}\n", "variant", "runs", "crashes",
                               "early_mean", "early_ci95", "ood_mean", "ood_ci95");
      for (const auto& v : report.variants) {
        std::cout << fmt::format("{:<12} {:>5} {:>8} {:>12.4f} {:>10.4f} {:>12.4f} {:>10.4f}\n", v.variant, v.runs,
                                 v.crashes, v.early_mean, v.early_ci95, v.ood_mean, v.ood_ci95);
      }
      std::cout << fmt::format("sata > no_growth early: {}/{} seeds; sata >= no_growth OOD: {}/{} seeds\n",
                               report.early_wins, report.compared_seeds, report.ood_wins, report.compared_seeds);
    } else if (exp->parsed()) {
      const std::filesystem::path out =
          export_out.empty() ? std::filesystem::path(export_root) / "tidy_metrics.csv" : std::filesystem::path(export_out);
      const std::size_t rows = sata::harness::export_tidy(export_root, out);
      std::cout << out.string() << " (" << rows << " rows)\n";
    }
  } catch (const sata::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sata::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
