#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sata::ppo {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Recursive generalized advantage estimation over a step-major buffer
/// (index = step * num_envs + env). dones[i] marks that the episode ended
/// after transition i, so nothing is bootstrapped across it. last_values are
/// the critic values of the states that follow the final step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, std::span<const double> last_values, int num_envs,
                      int horizon, double gamma, double lambda);

/// In place: zero mean, unit variance. Leaves a constant vector at zero.
void normalize_advantages(std::span<double> advantages);

}  // namespace sata::ppo
