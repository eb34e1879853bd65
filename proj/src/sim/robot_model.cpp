#include "sata/sim/robot_model.hpp"

#include <cmath>

#include "sata/error.hpp"

namespace sata::sim {

RobotModel RobotModel::desk_quadruped() {
  RobotModel m;
  const double hx = 0.19;
  m.legs = {
      LegSpec{"FL", hx, 0.0},
      LegSpec{"FR", hx, 0.0},
      LegSpec{"RL", -hx, 0.0},
      LegSpec{"RR", -hx, 0.0},
  };
  m.base_inertia = m.base_mass * (m.base_length * m.base_length + m.base_thickness * m.base_thickness) / 12.0;
  for (std::size_t i = 0; i < m.legs.size(); ++i) {
    m.q_min.insert(m.q_min.end(), {-1.0, -2.7});
    m.q_max.insert(m.q_max.end(), {2.0, -0.6});
    m.qdot_limit.insert(m.qdot_limit.end(), {30.0, 30.0});
    m.q_default.insert(m.q_default.end(), {0.8, -1.5});
  }
  const LegSpec& leg = m.legs.front();
  m.nominal_height = leg.thigh_length * std::cos(0.8) + leg.calf_length * std::cos(0.8 - 1.5) + m.foot_radius;
  return m;
}

double RobotModel::total_mass() const {
  double mass = base_mass;
  for (const auto& leg : legs) mass += leg.thigh_mass + leg.calf_mass;
  return mass;
}

void RobotModel::validate() const {
  if (legs.empty()) throw ConfigError("robot model needs at least one leg");
  if (!(base_mass > 0.0 && base_inertia > 0.0 && base_length > 0.0 && base_thickness > 0.0)) {
    throw ConfigError("base mass, inertia and dimensions must be positive");
  }
  for (const auto& leg : legs) {
    if (!(leg.thigh_length > 0.0 && leg.calf_length > 0.0 && leg.thigh_mass > 0.0 && leg.calf_mass > 0.0)) {
      throw ConfigError("leg " + leg.name + ": lengths and masses must be positive");
    }
  }
  const auto joints = static_cast<std::size_t>(joint_count());
  if (q_min.size() != joints || q_max.size() != joints || qdot_limit.size() != joints ||
      q_default.size() != joints) {
    throw ConfigError("per-joint limit arrays must have one entry per joint");
  }
  for (std::size_t j = 0; j < joints; ++j) {
    if (!(q_min[j] < q_max[j])) throw ConfigError("q_min must be below q_max for every joint");
    if (!(qdot_limit[j] > 0.0)) throw ConfigError("qdot_limit must be positive");
  }
}

std::vector<int> mirrored_leg_order(const RobotModel& model) {
  // Legs come in (left, right) pairs.
  std::vector<int> order(model.legs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i ^ 1u);
  return order;
}

}  // namespace sata::sim
