#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sata::sim {

enum class ContactSite { Foot, Knee, BaseCorner };

/// Collision sites are ordered: one foot per leg, one knee per leg, then the
/// four base corners (front-bottom, rear-bottom, front-top, rear-top).
struct ContactReading {
  ContactSite site = ContactSite::Foot;
  int index = 0;  // leg or corner index
  double x = 0.0;
  double z = 0.0;
  double gap = 0.0;             // signed distance to the terrain, m
  double normal_force = 0.0;    // N, >= 0
  double friction_force = 0.0;  // N, tangential, |f| <= mu * normal_force
  double force_x = 0.0;         // world-frame resultant, N
  double force_z = 0.0;
  bool in_contact = false;
};

/// External force applied at a named body point during [start, start + duration).
struct ExternalForce {
  std::string point = "base";
  double fx = 0.0;
  double fz = 0.0;
  double start = 0.0;
  double duration = 0.0;

  bool active(double t) const { return t >= start && t < start + duration; }
};

struct WorldState {
  // Base pose and rates, world frame. Pitch is positive nose-up.
  double x = 0.0;
  double z = 0.0;
  double pitch = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double pitch_rate = 0.0;
  std::vector<double> q;
  std::vector<double> qdot;
  std::vector<ContactReading> contacts;
  double time = 0.0;
  std::uint64_t step_count = 0;
  // Growth broadcast for the current iteration.
  double tau_limit = 0.0;
  double f_policy = 0.0;
  double decimation_clock = 0.0;
  std::vector<ExternalForce> disturbances;
};

}  // namespace sata::sim
