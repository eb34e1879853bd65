#pragma once

#include <span>
#include <vector>

namespace sata::biomech {

struct ActuatorParams {
  double kappa_scale = 5.0;
  double gamma = 0.6;
  double beta = 0.9;
  std::vector<double> tau_limit;   // Nm, per joint
  std::vector<double> qdot_limit;  // rad/s, per joint
  double dt = 0.005;               // s

  static ActuatorParams uniform(std::size_t joints, double tau_limit, double qdot_limit);

  std::size_t joints() const { return tau_limit.size(); }

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

struct ActuatorState {
  std::vector<double> alpha;  // smoothed activation, |alpha| < 1
  std::vector<double> zeta;   // fatigue, Nm*s
  std::vector<double> tau;    // last applied torque, Nm

  static ActuatorState zeros(std::size_t joints);
  std::size_t joints() const { return alpha.size(); }
};

// Scalar kernels. These are the reference forms; the vector entry points below
// are thin loops over them.

/// tanh(a_s * kappa / tau_limit). Throws InvalidInputError on non-finite a_s.
double compute_activation(double a_s, double kappa_scale, double tau_limit);

double smooth_activation(double alpha_current, double alpha_prev, double gamma);

/// Force-velocity shaping. The speed ratio is clamped to [-1, 1] and sign(0) = 0.
double muscle_torque(double alpha, double qdot, double tau_limit, double qdot_limit);

double update_fatigue(double zeta_prev, double tau, double dt, double beta);

std::vector<double> compute_activation(std::span<const double> a_s, const ActuatorParams& params);

struct StepResult {
  std::vector<double> torques;
  ActuatorState state;
};

/// activation -> smoothing -> muscle -> fatigue, returning a fresh state.
StepResult actuator_step(std::span<const double> a_s, std::span<const double> qdot,
                         const ActuatorState& state, const ActuatorParams& params);

/// In-place variant used on the simulation hot path. `torques` must have
/// params.joints() entries. No allocation.
void actuator_step_inplace(std::span<const double> a_s, std::span<const double> qdot,
                           ActuatorState& state, const ActuatorParams& params,
                           std::span<double> torques);

/// Ablation path with the biomechanical model removed: a_s * kappa clamped to
/// +-tau_limit is applied directly. alpha and zeta stay at zero.
void direct_torque_inplace(std::span<const double> a_s, ActuatorState& state,
                           const ActuatorParams& params, std::span<double> torques);

}  // namespace sata::biomech
