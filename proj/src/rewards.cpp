#include "sata/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "sata/error.hpp"

namespace sata::rewards {

namespace {

constexpr std::array<std::string_view, kTermCount> kNames = {
    "tracking_x", "tracking_y",  "tracking_yaw", "base_height",        "roll",
    "velocity_z", "joint_limits", "fatigue",     "joint_acceleration",
};

void require_finite(double x, const char* field) {
  if (!std::isfinite(x)) throw InvalidInputError(std::string("reward context field '") + field + "' is not finite");
}

void require_finite(std::span<const double> xs, const char* field) {
  for (double x : xs) require_finite(x, field);
}

void validate(const RewardContext& ctx) {
  for (double x : ctx.v) require_finite(x, "v");
  require_finite(ctx.w_yaw, "w_yaw");
  for (double x : ctx.g_vec) require_finite(x, "g_vec");
  for (double x : ctx.v_cmd) require_finite(x, "v_cmd");
  require_finite(ctx.q, "q");
  require_finite(ctx.qdot, "qdot");
  require_finite(ctx.qddot, "qddot");
  require_finite(ctx.q_min, "q_min");
  require_finite(ctx.q_max, "q_max");
  require_finite(ctx.zeta, "zeta");
  require_finite(ctx.tau_d, "tau_d");
  require_finite(ctx.h_b, "h_b");
  require_finite(ctx.h_t, "h_t");
  require_finite(ctx.g_growth, "g_growth");
  require_finite(ctx.kappa_scale, "kappa_scale");
  const std::size_t n = ctx.q.size();
  if (ctx.q_min.size() != n || ctx.q_max.size() != n || ctx.qddot.size() != n ||
      ctx.zeta.size() != n || ctx.tau_d.size() != n) {
    throw ShapeError("reward context per-joint arrays differ in length");
  }
}

// Unweighted expressions shared by both reward variants.
struct Shared {
  double roll;
  double velocity_z;
  double joint_limits;
  double fatigue;
  double joint_acceleration;
};

Shared shared_terms(const RewardContext& ctx) {
  Shared s{};
  s.roll = std::abs(ctx.g_vec[1]);
  s.velocity_z = ctx.v[2] * ctx.v[2];
  for (std::size_t j = 0; j < ctx.q.size(); ++j) {
    s.joint_limits += std::max(ctx.q_min[j] - ctx.q[j], 0.0) + std::max(ctx.q[j] - ctx.q_max[j], 0.0);
    s.fatigue += ctx.zeta[j] * std::abs(ctx.tau_d[j] * ctx.kappa_scale);
    s.joint_acceleration += ctx.qddot[j] * ctx.qddot[j];
  }
  return s;
}

RewardBreakdown weigh(const std::array<double, kTermCount>& raw, const RewardWeights& weights) {
  RewardBreakdown out;
  for (int i = 0; i < kTermCount; ++i) {
    out.terms[i] = raw[i] * weights.w[i];
    out.total += out.terms[i];
  }
  return out;
}

}  // namespace

std::string_view term_name(Term term) { return kNames[static_cast<int>(term)]; }
std::string_view term_name(int index) { return kNames.at(static_cast<std::size_t>(index)); }

bool inactive_in_planar(Term term) {
  return term == Term::TrackingY || term == Term::TrackingYaw || term == Term::Roll;
}

RewardWeights RewardWeights::from_dt(double dt, const std::array<double, kTermCount>& per_second) {
  RewardWeights rw;
  rw.dt = dt;
  for (int i = 0; i < kTermCount; ++i) rw.w[i] = per_second[i] * dt;
  return rw;
}

void RewardWeights::validate() const {
  if (!(dt > 0.0)) throw ConfigError("reward dt must be positive");
  for (int i = 0; i < 4; ++i) {
    if (!(w[i] > 0.0)) throw ConfigError("tracking and height weights must be positive");
  }
  for (int i = 4; i < kTermCount; ++i) {
    if (!(w[i] < 0.0)) throw ConfigError("penalty weights must be negative");
  }
}

double phi(double x) { return std::exp(-4.0 * std::abs(x)); }

RewardBreakdown base_reward(const RewardContext& ctx, const RewardWeights& weights) {
  validate(ctx);
  const Shared s = shared_terms(ctx);
  const std::array<double, kTermCount> raw = {
      phi(ctx.v[0] - ctx.v_cmd[0]),
      phi(ctx.v[1] - ctx.v_cmd[1]),
      phi(ctx.w_yaw - ctx.v_cmd[2]),
      std::min(ctx.h_b, ctx.h_t),
      s.roll,
      s.velocity_z,
      s.joint_limits,
      s.fatigue,
      s.joint_acceleration,
  };
  return weigh(raw, weights);
}

RewardBreakdown growth_reward(const RewardContext& ctx, const RewardWeights& weights) {
  validate(ctx);
  const double g = ctx.g_growth;
  if (g < 0.0 || g > 1.0) throw InvalidInputError("growth scale must lie in [0, 1]");
  const Shared s = shared_terms(ctx);
  const double mid_x = 0.5 * (ctx.cmd_range_x.first + ctx.cmd_range_x.second);
  const double g_x = ctx.g_vec[0];
  const double tilt_floor = -std::min(0.0, 0.2 * (1.5 - 2.0 * g));
  const std::array<double, kTermCount> raw = {
      phi(ctx.v[0] - mid_x) * (1.0 - g) + phi(ctx.v[0] - ctx.v_cmd[0]) * (1.0 + g),
      phi(ctx.v[1] - ctx.v_cmd[1]) * g,
      phi(ctx.w_yaw - ctx.v_cmd[2]) * g,
      std::min(ctx.h_b, ctx.h_t) * (1.0 + g) - std::max(g_x, tilt_floor),
      s.roll,
      s.velocity_z,
      s.joint_limits,
      s.fatigue,
      s.joint_acceleration,
  };
  return weigh(raw, weights);
}

}  // namespace sata::rewards
