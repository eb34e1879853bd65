#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sata/error.hpp"
#include "sata/harness/scenarios.hpp"
#include "sata/ppo/trainer.hpp"

namespace sata::harness {

struct AblationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> variants{"sata", "no_growth", "no_biomech"};
  double early_fraction = 0.25;  // leading share of iterations in the early-stage comparison
};

struct ExperimentConfig {
  std::string run_name = "sata";
  std::string out_dir = "runs";
  std::string checkpoint;  // eval input; empty means none
  ppo::TrainConfig train;
  ScenarioSpec scenario;
  EvalConfig eval;
  AblationConfig ablation;

  /// Throws ConfigErrorList naming every violated constraint.
  void validate() const;
};

/// Every problem found while loading or validating a config.
class ConfigErrorList : public ConfigError {
 public:
  explicit ConfigErrorList(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ConfigKey {
  std::string section;
  std::string name;
  bool required = false;
  std::function<std::string(const ExperimentConfig&)> get;
  /// Throws ConfigError on a malformed value.
  std::function<void(ExperimentConfig&, const std::string&)> set;

  std::string dotted() const { return section + "." + name; }
};

/// The complete key registry in serialization order.
const std::vector<ConfigKey>& config_keys();

/// "section.key" = value pairs applied after the file, before validation.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses INI text over the defaults. Unknown keys, malformed values,
/// missing required keys and validation failures are all collected into one
/// ConfigErrorList.
/// `require_run_keys` = false skips the required-key check for commands that
/// do not train.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {},
                              bool require_run_keys = true);
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {},
                             bool require_run_keys = true);
/// Defaults plus overrides.
ExperimentConfig config_from_overrides(const Overrides& overrides, bool require_run_keys = true);

/// Every key, one section at a time, in registry order. parse_config of the
/// result reproduces the same text.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace sata::harness
