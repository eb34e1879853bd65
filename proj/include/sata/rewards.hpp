#pragma once

#include <array>
#include <span>
#include <string_view>
#include <utility>

namespace sata::rewards {

enum class Term : int {
  TrackingX = 0,
  TrackingY,
  TrackingYaw,
  BaseHeight,
  Roll,
  VelocityZ,
  JointLimits,
  Fatigue,
  JointAcceleration,
};

inline constexpr int kTermCount = 9;

std::string_view term_name(Term term);
std::string_view term_name(int index);

/// Terms that are identically neutral in the planar simulator (v_y, w_yaw, g_y == 0).
bool inactive_in_planar(Term term);

/// Per-second weights before the dt factor, in Term order.
inline constexpr std::array<double, kTermCount> kDefaultWeights = {10.0, 5.0, 5.0, 5.0, -5.0,
                                                                   -5.0, -5.0, -0.05, -1e-6};

/// Per-term weights, already multiplied by dt.
struct RewardWeights {
  double dt = 0.005;
  std::array<double, kTermCount> w{};

  static RewardWeights from_dt(double dt, const std::array<double, kTermCount>& per_second = kDefaultWeights);
  double operator[](Term t) const { return w[static_cast<int>(t)]; }
  void validate() const;
};

/// Everything one control step contributes to the reward. Spans are views
/// into caller-owned per-joint arrays and must outlive the call.
struct RewardContext {
  std::array<double, 3> v{};      // base linear velocity, body frame, m/s
  double w_yaw = 0.0;             // rad/s
  std::array<double, 3> g_vec{0.0, 0.0, -1.0};  // unit gravity direction, body frame
  std::span<const double> q;
  std::span<const double> qdot;
  std::span<const double> qddot;
  std::span<const double> q_min;
  std::span<const double> q_max;
  double h_b = 0.0;
  double h_t = 0.30;
  std::array<double, 3> v_cmd{};  // (v_x, v_y, w_yaw)
  std::span<const double> zeta;
  std::span<const double> tau_d;  // raw policy action
  double kappa_scale = 5.0;
  double g_growth = 0.0;
  std::pair<double, double> cmd_range_x{-0.5, 1.5};
};

struct RewardBreakdown {
  std::array<double, kTermCount> terms{};  // weighted
  double total = 0.0;

  double operator[](Term t) const { return terms[static_cast<int>(t)]; }
};

/// exp(-4 |x|).
double phi(double x);

RewardBreakdown base_reward(const RewardContext& ctx, const RewardWeights& weights);

/// Growth-adjusted expressions for tracking and base height under the same weights.
RewardBreakdown growth_reward(const RewardContext& ctx, const RewardWeights& weights);

}  // namespace sata::rewards
