#include "sata/ppo/gae.hpp"

#include <cmath>
#include <numeric>

#include "sata/error.hpp"

namespace sata::ppo {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, std::span<const double> last_values, int num_envs,
                      int horizon, double gamma, double lambda) {
  const auto n = static_cast<std::size_t>(num_envs) * static_cast<std::size_t>(horizon);
  if (num_envs <= 0 || horizon <= 0 || rewards.size() != n || values.size() != n || dones.size() != n ||
      last_values.size() != static_cast<std::size_t>(num_envs)) {
    throw ShapeError("GAE buffer sizes do not match num_envs x horizon");
  }
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  for (int e = 0; e < num_envs; ++e) {
    double running = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
      const std::size_t i = static_cast<std::size_t>(t) * num_envs + e;
      const double next_value =
          t == horizon - 1 ? last_values[e] : values[static_cast<std::size_t>(t + 1) * num_envs + e];
      const double alive = dones[i] ? 0.0 : 1.0;
      const double delta = rewards[i] + gamma * next_value * alive - values[i];
      running = delta + gamma * lambda * alive * running;
      out.advantages[i] = running;
      out.returns[i] = running + values[i];
    }
  }
  return out;
}

void normalize_advantages(std::span<double> a) {
  if (a.empty()) return;
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  var /= static_cast<double>(a.size());
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& x : a) x = (x - mean) * inv;
}

}  // namespace sata::ppo
