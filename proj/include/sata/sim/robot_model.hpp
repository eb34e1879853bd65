#pragma once

#include <array>
#include <string>
#include <vector>

namespace sata::sim {

/// One sagittal leg: hip joint on the base, thigh, knee joint, calf.
struct LegSpec {
  std::string name;
  double hip_x = 0.0;  // hip position in the base frame, m
  double hip_z = 0.0;
  double thigh_length = 0.21;
  double calf_length = 0.21;
  double thigh_mass = 0.8;
  double calf_mass = 0.2;
};

/// Planar quadruped. Joint j = 2*leg is the hip, 2*leg + 1 the knee.
/// Angles: pitch is positive nose-up; a hip angle of zero points the thigh
/// straight down and positive hip angles swing the foot forward.
struct RobotModel {
  double base_mass = 6.0;        // kg
  double base_length = 0.44;     // collision box, m
  double base_thickness = 0.10;
  double base_inertia = 0.1018;  // pitch inertia about the base CoM, kg m^2
  std::array<double, 2> com_offset{0.0, 0.0};  // base CoM in the base frame (x, z), m
  double foot_radius = 0.02;
  double knee_radius = 0.02;
  std::vector<LegSpec> legs;
  std::vector<double> q_min;
  std::vector<double> q_max;
  std::vector<double> qdot_limit;
  std::vector<double> q_default;  // standing posture, used for observation offsets
  double nominal_height = 0.30;   // base height of the default posture on flat ground

  /// Four-legged desk robot roughly at the scale of a small commercial quadruped.
  static RobotModel desk_quadruped();

  int joint_count() const { return static_cast<int>(2 * legs.size()); }
  int dof() const { return 3 + joint_count(); }
  double total_mass() const;

  /// Throws ConfigError.
  void validate() const;
};

/// Index permutation that swaps left and right legs (FL<->FR, RL<->RR).
std::vector<int> mirrored_leg_order(const RobotModel& model);

}  // namespace sata::sim
