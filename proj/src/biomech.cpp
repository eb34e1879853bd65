#include "sata/biomech.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sata/error.hpp"

namespace sata::biomech {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_width(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want) + " joints, got " +
                     std::to_string(got));
  }
}

}  // namespace

ActuatorParams ActuatorParams::uniform(std::size_t joints, double tau_limit, double qdot_limit) {
  ActuatorParams p;
  p.tau_limit.assign(joints, tau_limit);
  p.qdot_limit.assign(joints, qdot_limit);
  return p;
}

void ActuatorParams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("biomech.gamma must lie in (0, 1]");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("biomech.beta must lie in (0, 1)");
  if (!(dt > 0.0)) throw ConfigError("biomech.dt must be positive");
  if (!std::isfinite(kappa_scale)) throw ConfigError("biomech.kappa_scale must be finite");
  if (tau_limit.size() != qdot_limit.size()) throw ConfigError("tau_limit/qdot_limit size mismatch");
  for (double t : tau_limit) {
    if (!(t > 0.0)) throw ConfigError("tau_limit must be positive for every joint");
  }
  for (double v : qdot_limit) {
    if (!(v > 0.0)) throw ConfigError("qdot_limit must be positive for every joint");
  }
}

ActuatorState ActuatorState::zeros(std::size_t joints) {
  return ActuatorState{std::vector<double>(joints, 0.0), std::vector<double>(joints, 0.0),
                       std::vector<double>(joints, 0.0)};
}

double compute_activation(double a_s, double kappa_scale, double tau_limit) {
  if (!std::isfinite(a_s)) throw InvalidInputError("non-finite action passed to activation model");
  return std::tanh(a_s * kappa_scale / tau_limit);
}

double smooth_activation(double alpha_current, double alpha_prev, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("smoothing factor must lie in (0, 1]");
  return alpha_current * gamma + alpha_prev * (1.0 - gamma);
}

double muscle_torque(double alpha, double qdot, double tau_limit, double qdot_limit) {
  // Subtract before dividing: 1 - qdot/qdot_limit cancels badly near the limit.
  const double v = std::clamp(qdot, -qdot_limit, qdot_limit);
  return tau_limit * alpha * ((qdot_limit - sign(alpha) * v) / qdot_limit);
}

double update_fatigue(double zeta_prev, double tau, double dt, double beta) {
  return (zeta_prev + std::abs(tau) * dt) * beta;
}

std::vector<double> compute_activation(std::span<const double> a_s, const ActuatorParams& params) {
  check_width(a_s.size(), params.joints(), "compute_activation");
  std::vector<double> out(a_s.size());
  for (std::size_t j = 0; j < a_s.size(); ++j) {
    out[j] = compute_activation(a_s[j], params.kappa_scale, params.tau_limit[j]);
  }
  return out;
}

void actuator_step_inplace(std::span<const double> a_s, std::span<const double> qdot,
                           ActuatorState& state, const ActuatorParams& params,
                           std::span<double> torques) {
  const std::size_t n = params.joints();
  check_width(a_s.size(), n, "actuator_step actions");
  check_width(qdot.size(), n, "actuator_step velocities");
  check_width(state.joints(), n, "actuator_step state");
  check_width(torques.size(), n, "actuator_step torques");
  for (std::size_t j = 0; j < n; ++j) {
    const double current = compute_activation(a_s[j], params.kappa_scale, params.tau_limit[j]);
    const double alpha = smooth_activation(current, state.alpha[j], params.gamma);
    const double tau = muscle_torque(alpha, qdot[j], params.tau_limit[j], params.qdot_limit[j]);
    state.alpha[j] = alpha;
    state.tau[j] = tau;
    state.zeta[j] = update_fatigue(state.zeta[j], tau, params.dt, params.beta);
    torques[j] = tau;
  }
}

StepResult actuator_step(std::span<const double> a_s, std::span<const double> qdot,
                         const ActuatorState& state, const ActuatorParams& params) {
  StepResult result{std::vector<double>(params.joints(), 0.0), state};
  actuator_step_inplace(a_s, qdot, result.state, params, result.torques);
  return result;
}

void direct_torque_inplace(std::span<const double> a_s, ActuatorState& state,
                           const ActuatorParams& params, std::span<double> torques) {
  const std::size_t n = params.joints();
  check_width(a_s.size(), n, "direct_torque actions");
  check_width(torques.size(), n, "direct_torque torques");
  check_width(state.joints(), n, "direct_torque state");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(a_s[j])) throw InvalidInputError("non-finite action passed to direct torque map");
    const double limit = params.tau_limit[j];
    const double tau = std::clamp(a_s[j] * params.kappa_scale, -limit, limit);
    state.alpha[j] = 0.0;
    state.zeta[j] = 0.0;
    state.tau[j] = tau;
    torques[j] = tau;
  }
}

}  // namespace sata::biomech
