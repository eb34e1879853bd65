#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sata/harness/config.hpp"
#include "sata/harness/export.hpp"
#include "sata/harness/fs.hpp"
#include "sata/harness/runner.hpp"
#include "sata/nets/checkpoint.hpp"

namespace sh = sata::harness;
namespace fsys = std::filesystem;

namespace {

const fsys::path& scratch() {
  static const fsys::path root = [] {
    auto p = fsys::temp_directory_path() / ("sata_harness_" + std::to_string(::getpid()));
    fsys::remove_all(p);
    fsys::create_directories(p);
    return p;
  }();
  return root;
}

const std::string kTiny =
    " --set ppo.num_envs=2 --set ppo.horizon=8 --set nets.actor_hidden=8 --set nets.critic_hidden=8"
    " --set nets.estimator_hidden=8 --set estimator.interval=1 --set run.checkpoint_interval=2";

int cli(const std::string& args) {
  const std::string cmd = std::string(SATA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fsys::path& p) { return sata::fs::read_file(p); }

sh::ExperimentConfig tiny_config(const std::string& name, std::uint64_t seed = 1, int iterations = 2) {
  auto c = sh::config_from_overrides({{"run.seed", std::to_string(seed)},
                                      {"run.iterations", std::to_string(iterations)},
                                      {"run.name", name},
                                      {"run.out_dir", scratch().string()},
                                      {"ppo.num_envs", "2"},
                                      {"ppo.horizon", "8"},
                                      {"nets.actor_hidden", "8"},
                                      {"nets.critic_hidden", "8"},
                                      {"nets.estimator_hidden", "8"},
                                      {"estimator.interval", "1"},
                                      {"eval.episodes", "2"},
                                      {"eval.episode_length", "2.0"},
                                      {"scenario.warmup", "0.5"}});
  return c;
}

class ScratchCleanup : public ::testing::Environment {
 public:
  void TearDown() override { fsys::remove_all(scratch()); }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, TrainWritesArtifacts) {
  const fsys::path out = scratch() / "cli_train";
  ASSERT_EQ(cli("train --seed 3 --iterations 3 --out " + out.string() + " --set run.name=a" + kTiny), 0);
  const fsys::path run = out / "a";
  ASSERT_TRUE(fsys::exists(run / "metrics.csv"));
  EXPECT_EQ(line_count(slurp(run / "metrics.csv")), 4u);
  for (const char* ck : {"ckpt_000000.bin", "ckpt_000002.bin", "ckpt_000003.bin"}) EXPECT_TRUE(fsys::exists(run / "checkpoints" / ck)) << ck;
  const auto summary = nlohmann::json::parse(slurp(run / "summary.json"));
  EXPECT_EQ(summary["status"], "completed");
  EXPECT_EQ(summary["completed_iterations"], 3);
  EXPECT_EQ(summary["seed"], 3);
  const auto cfg = sh::load_config(run / "config.ini");
  EXPECT_EQ(cfg.train.iterations, 3);
  EXPECT_EQ(cfg.train.rollout.num_envs, 2);
  const auto bundle = sata::nets::load_checkpoint(run / "checkpoints" / "ckpt_000003.bin", 8);
  EXPECT_EQ(bundle.iteration, 3u);
}

TEST(Cli, SameSeedGivesByteIdenticalMetrics) {
  const fsys::path out = scratch() / "cli_det";
  ASSERT_EQ(cli("train --seed 4 --iterations 2 --out " + out.string() + " --set run.name=x" + kTiny), 0);
  ASSERT_EQ(cli("train --seed 4 --iterations 2 --out " + out.string() + " --set run.name=y" + kTiny), 0);
  ASSERT_EQ(cli("train --seed 5 --iterations 2 --out " + out.string() + " --set run.name=z" + kTiny), 0);
  EXPECT_EQ(slurp(out / "x" / "metrics.csv"), slurp(out / "y" / "metrics.csv"));
  EXPECT_NE(slurp(out / "x" / "metrics.csv"), slurp(out / "z" / "metrics.csv"));
  EXPECT_EQ(slurp(out / "x" / "checkpoints" / "ckpt_000002.bin"), slurp(out / "y" / "checkpoints" / "ckpt_000002.bin"));
}

TEST(Cli, ExitCodes) {
  const fsys::path out = scratch() / "cli_codes";
  EXPECT_EQ(cli("train --seed 1 --iterations 1 --out " + out.string() + " --set ppo.bogus=1"), 2);
  EXPECT_EQ(cli("train --iterations 1 --out " + out.string()), 2);
  fsys::create_directories(out);
  const fsys::path junk = out / "junk.bin";
  std::ofstream(junk) << "not a checkpoint";
  EXPECT_EQ(cli("eval --checkpoint " + junk.string() + " --out " + out.string()), 3);
  EXPECT_NE(cli("frobnicate"), 0);
}

TEST(Cli, EvalWritesReportAndTrajectory) {
  const fsys::path out = scratch() / "cli_eval";
  ASSERT_EQ(cli("train --seed 2 --iterations 1 --out " + out.string() + " --set run.name=r" + kTiny), 0);
  const fsys::path ck = out / "r" / "checkpoints" / "ckpt_000001.bin";
  ASSERT_EQ(cli("eval --checkpoint " + ck.string() + " --out " + out.string() +
                " --set run.name=r --set eval.episodes=1 --set eval.episode_length=1.0 --set scenario.warmup=0.2"
                " --scenario push --trajectory"),
            0);
  const auto report = nlohmann::json::parse(slurp(out / "r" / "eval_push.json"));
  EXPECT_EQ(report["scenario"], "push");
  EXPECT_EQ(report["episodes"].size(), 1u);
  std::istringstream csv(slurp(out / "r" / "trajectory_push.csv"));
  std::string header;
  std::getline(csv, header);
  const auto cols = std::count(header.begin(), header.end(), ',');
  EXPECT_EQ(header.rfind("time,x,z,pitch", 0), 0u);
  std::string row;
  int rows = 0;
  while (std::getline(csv, row)) {
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), cols);
    ++rows;
  }
  EXPECT_EQ(rows, 200);
}

TEST(Export, EmptyTreeGivesHeaderOnly) {
  const fsys::path root = scratch() / "export_empty";
  fsys::create_directories(root);
  const fsys::path out = scratch() / "export_empty.csv";
  EXPECT_EQ(sh::export_tidy(root, out), 0u);
  EXPECT_EQ(slurp(out), "run,seed,iteration,metric,value\n");
}

TEST(Export, TwoSeedsCopiedVerbatim) {
  const auto a = sh::run_train(tiny_config("exp_s1", 1));
  const auto b = sh::run_train(tiny_config("exp_s2", 2));
  const fsys::path root = scratch() / "export_two";
  for (const auto* art : {&a, &b}) {
    const auto dst = root / art->run_dir.filename();
    fsys::create_directories(dst);
    fsys::copy_file(art->metrics, dst / "metrics.csv");
    fsys::copy_file(art->config, dst / "config.ini");
  }
  const fsys::path out = scratch() / "export_two.csv";
  const std::size_t cols = sata::ppo::metrics_columns().size();
  EXPECT_EQ(sh::export_tidy(root, out), 2 * 2 * (cols - 1));
  // Every non-iteration cell of every metrics row appears as one tidy row.
  const std::string tidy = slurp(out);
  std::istringstream m(slurp(a.metrics));
  std::string header, first;
  std::getline(m, header);
  std::getline(m, first);
  const std::string value = first.substr(first.rfind(',') + 1);
  EXPECT_NE(tidy.find("exp_s1,1,1,estimator_holdout_rmse," + value + "\n"), std::string::npos);
  EXPECT_NE(tidy.find("exp_s2,2,2,"), std::string::npos);
}

TEST(Runner, ConfigIniRoundTrips) {
  auto c = tiny_config("cfg_rt");
  c.train.ppo.learning_rate = 5e-4;
  const auto art = sh::run_train(c);
  const auto back = sh::load_config(art.config);
  EXPECT_EQ(sh::serialize_config(back), sh::serialize_config(c));
}

TEST(Runner, ColumnMeanSkipsNan) {
  std::vector<sata::ppo::IterationMetrics> ms(4);
  for (int i = 0; i < 4; ++i) ms[i].kl = i;
  ms[1].kl = std::numeric_limits<double>::quiet_NaN();
  EXPECT_DOUBLE_EQ(sh::column_mean(ms, "kl", 0, 4), (0.0 + 2.0 + 3.0) / 3.0);
  EXPECT_DOUBLE_EQ(sh::column_mean(ms, "kl", 2, 4), 2.5);
  EXPECT_TRUE(std::isnan(sh::column_mean(ms, "kl", 1, 2)));
  EXPECT_THROW(sh::metric_value(ms[0], "no_such_column"), sata::Error);
}

TEST(Scenarios, ZeroForcePushMatchesPlain) {
  const auto art = sh::run_train(tiny_config("scn", 3, 1));
  auto c = tiny_config("scn", 3, 1);
  sh::ScenarioSpec plain;
  plain.warmup = 0.5;
  sh::ScenarioSpec push = plain;
  push.id = sh::ScenarioId::Push;
  push.push_fx = 0.0;
  push.push_fz = 0.0;
  const auto a = sh::evaluate_bundle(art.result.bundle, c, plain);
  const auto b = sh::evaluate_bundle(art.result.bundle, c, push);
  ASSERT_EQ(a.episodes.size(), b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    EXPECT_EQ(a.episodes[i].reward_base, b.episodes[i].reward_base);
    EXPECT_EQ(a.episodes[i].tracking_error, b.episodes[i].tracking_error);
    EXPECT_EQ(a.episodes[i].duration, b.episodes[i].duration);
  }
}

TEST(Scenarios, DeploymentBroadcastsEndLimits) {
  const auto art = sh::run_train(tiny_config("dep", 3, 1));
  auto c = tiny_config("dep", 3, 1);
  sh::ScenarioSpec s;
  s.warmup = 0.5;
  const auto r = sh::evaluate_bundle(art.result.bundle, c, s);
  EXPECT_EQ(r.broadcast.tau_limit, 23.5);
  EXPECT_EQ(r.broadcast.f_policy, 200.0);
  EXPECT_EQ(static_cast<int>(r.episodes.size()), c.eval.episodes);
  EXPECT_LE(r.max_abs_torque, 23.5 + 1e-9);
}

TEST(Ablation, TinyRunRecordsEveryVariantAndSeed) {
  auto c = tiny_config("abl", 1, 2);
  c.ablation.seeds = {1, 2, 3};
  c.ablation.variants = {"sata", "no_growth"};
  const auto rep = sh::run_ablation(c);
  EXPECT_EQ(rep.runs.size(), 6u);
  EXPECT_EQ(rep.compared_seeds, 3);
  for (const auto& r : rep.runs) {
    EXPECT_FALSE(r.crashed) << r.error;
    EXPECT_EQ(r.metrics.size(), 2u);
  }
  const auto j = nlohmann::json::parse(slurp(scratch() / "abl" / "ablation_summary.json"));
  EXPECT_EQ(j["runs"].size(), 6u);
  EXPECT_EQ(j["early_reward_metric"], "mean_episode_reward_base");
  EXPECT_EQ(sh::apply_variant(c, "no_growth").train.growth.enabled, false);
  EXPECT_EQ(sh::apply_variant(c, "no_biomech").train.env.biomech_enabled, false);
}
