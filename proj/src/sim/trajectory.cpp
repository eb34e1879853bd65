#include "sata/sim/trajectory.hpp"

#include <fmt/format.h>

namespace sata::sim {

std::string trajectory_header(int joints, int contacts) {
  std::string out = "time,x,z,pitch,vx,vz,pitch_rate";
  for (const char* block : {"q", "qdot", "tau", "zeta"}) {
    for (int j = 0; j < joints; ++j) out += fmt::format(",{}_{}", block, j);
  }
  for (int c = 0; c < contacts; ++c) out += fmt::format(",contact_{}", c);
  for (int t = 0; t < rewards::kTermCount; ++t) out += fmt::format(",rew_{}", rewards::term_name(t));
  out += "\n";
  return out;
}

std::string trajectory_row(const WorldState& state, const biomech::ActuatorState& actuator,
                           const rewards::RewardBreakdown& reward) {
  std::string out = fmt::format("{},{},{},{},{},{},{}", state.time, state.x, state.z, state.pitch, state.vx,
                                state.vz, state.pitch_rate);
  for (double v : state.q) out += fmt::format(",{}", v);
  for (double v : state.qdot) out += fmt::format(",{}", v);
  for (double v : actuator.tau) out += fmt::format(",{}", v);
  for (double v : actuator.zeta) out += fmt::format(",{}", v);
  for (const auto& c : state.contacts) out += fmt::format(",{}", c.normal_force);
  for (double v : reward.terms) out += fmt::format(",{}", v);
  out += "\n";
  return out;
}

}  // namespace sata::sim
