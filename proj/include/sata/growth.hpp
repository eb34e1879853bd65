#pragma once

#include <cstdint>

namespace sata::growth {

/// Gompertz developmental schedule over cumulative control steps.
struct GrowthSchedule {
  double k = 0.00003;     // 1/step
  double t0 = 24000.0;    // step of maximum growth rate
  double tau_start = 7.05;
  double tau_end = 23.5;  // Nm
  double f_start = 100.0;
  double f_end = 200.0;   // Hz
  bool deployment_mode = false;
  bool enabled = true;    // false: the "without growth" ablation, G == 1 from step 0

  void validate() const;
};

/// exp(-exp(-k (t - t0))).
double gompertz(double t, const GrowthSchedule& schedule);

/// tau_start + (tau_end - tau_start) g, or exactly tau_end in deployment mode.
double torque_limit(double g, const GrowthSchedule& schedule);

/// f_start + (f_end - f_start) g, or exactly f_end in deployment mode.
double control_frequency(double g, const GrowthSchedule& schedule);

struct GrowthState {
  double t = 0.0;  // cumulative control steps per environment
  double g = 0.0;
};

/// Values broadcast to every environment for one optimizer iteration.
struct Broadcast {
  double g = 0.0;
  double tau_limit = 0.0;
  double f_policy = 0.0;
};

GrowthState initial_state(const GrowthSchedule& schedule);

/// Advances t by `steps` control steps and recomputes g.
GrowthState advance(const GrowthState& state, std::uint64_t steps, const GrowthSchedule& schedule);

/// Resolves the ablation and deployment switches into the values the rest of
/// the pipeline consumes.
Broadcast broadcast(const GrowthState& state, const GrowthSchedule& schedule);

}  // namespace sata::growth
