#pragma once

#include <string>

#include "sata/biomech.hpp"
#include "sata/rewards.hpp"
#include "sata/sim/world_state.hpp"

namespace sata::sim {

/// Columns: time, x, z, pitch, vx, vz, pitch_rate, q_j, qdot_j, tau_j, zeta_j
/// (per joint), contact_c normal force (per collision site), then one column
/// per reward term. One row per physics tick.
std::string trajectory_header(int joints, int contacts);

std::string trajectory_row(const WorldState& state, const biomech::ActuatorState& actuator,
                           const rewards::RewardBreakdown& reward);

}  // namespace sata::sim
