#include "sata/growth.hpp"

#include <cmath>

#include "sata/error.hpp"

namespace sata::growth {

void GrowthSchedule::validate() const {
  if (!(k > 0.0)) throw ConfigError("growth.k must be positive");
  if (!(t0 > 0.0)) throw ConfigError("growth.t0 must be positive");
  if (!(tau_start > 0.0 && tau_start <= tau_end)) {
    throw ConfigError("growth torque range must satisfy 0 < tau_start <= tau_end");
  }
  if (!(f_start > 0.0 && f_start <= f_end)) {
    throw ConfigError("growth frequency range must satisfy 0 < f_start <= f_end");
  }
}

double gompertz(double t, const GrowthSchedule& schedule) {
  return std::exp(-std::exp(-schedule.k * (t - schedule.t0)));
}

double torque_limit(double g, const GrowthSchedule& schedule) {
  if (schedule.deployment_mode) return schedule.tau_end;
  return schedule.tau_start + (schedule.tau_end - schedule.tau_start) * g;
}

double control_frequency(double g, const GrowthSchedule& schedule) {
  if (schedule.deployment_mode) return schedule.f_end;
  return schedule.f_start + (schedule.f_end - schedule.f_start) * g;
}

GrowthState initial_state(const GrowthSchedule& schedule) {
  return GrowthState{0.0, gompertz(0.0, schedule)};
}

GrowthState advance(const GrowthState& state, std::uint64_t steps, const GrowthSchedule& schedule) {
  const double t = state.t + static_cast<double>(steps);
  return GrowthState{t, gompertz(t, schedule)};
}

Broadcast broadcast(const GrowthState& state, const GrowthSchedule& schedule) {
  if (!schedule.enabled || schedule.deployment_mode) {
    return Broadcast{1.0, schedule.tau_end, schedule.f_end};
  }
  return Broadcast{state.g, torque_limit(state.g, schedule), control_frequency(state.g, schedule)};
}

}  // namespace sata::growth
