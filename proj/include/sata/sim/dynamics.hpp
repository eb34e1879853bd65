#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>

#include "sata/sim/robot_model.hpp"
#include "sata/sim/terrain.hpp"
#include "sata/sim/world_state.hpp"

namespace sata::sim {

inline constexpr int kMaxLegs = 6;
inline constexpr int kMaxDof = 3 + 2 * kMaxLegs;
inline constexpr int kMaxContacts = 2 * kMaxLegs + 4;

using DofVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDof, 1>;
using DofMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDof, kMaxDof>;
using PointJacobian = Eigen::Matrix<double, 2, Eigen::Dynamic, 0, 2, kMaxDof>;

struct DynamicsParams {
  double gravity = 9.81;
  double joint_damping = 0.01;    // N m s / rad
  double armature = 0.01;         // reflected rotor inertia per joint, kg m^2
  double stop_stiffness = 2000.0; // joint-limit stop, N m / rad
  double stop_damping = 20.0;
  double friction_velocity = 0.01;  // tanh regularization of Coulomb friction, m/s
  double penetration_tolerance = 1e-3;
  int newton_iterations = 12;
  double newton_tolerance = 1e-9;
  double blowup_height = 10.0;
};

/// Planar floating-base multibody with spring-damper contact.
///
/// Generalized coordinates are (x, z, pitch, q_0 .. q_{J-1}). One step solves
/// the velocity update with contact, friction and joint-stop forces evaluated
/// at the end-of-step velocity (Newton on the residual), then advances
/// positions with the mean of the old and new velocities, which integrates
/// constant accelerations exactly.
class Dynamics {
 public:
  Dynamics(RobotModel model, Terrain terrain, DynamicsParams params = {});

  const RobotModel& model() const { return model_; }
  const Terrain& terrain() const { return terrain_; }
  const DynamicsParams& params() const { return params_; }

  /// Allocates per-joint and per-contact arrays in `state`.
  WorldState make_state() const;

  /// Throws SimulationBlowupError on divergence and InvalidInputError on
  /// non-finite torques.
  void step(WorldState& state, std::span<const double> torques, double dt) const;

  /// Recomputes contact positions, gaps and flags without advancing time.
  void refresh_contacts(WorldState& state) const;

  std::array<double, 2> point_position(const WorldState& state, const std::string& point) const;
  bool has_point(const std::string& point) const;

  DofMatrix mass_matrix(const WorldState& state) const;
  std::array<double, 2> center_of_mass(const WorldState& state) const;
  std::array<double, 2> center_of_mass_velocity(const WorldState& state) const;
  /// Sum of the world-frame vertical contact force components, N.
  static double vertical_contact_force(const WorldState& state);

  int contact_count() const { return 2 * static_cast<int>(model_.legs.size()) + 4; }

 private:
  struct PointKin {
    Eigen::Vector2d p;
    PointJacobian J;
    Eigen::Vector2d bias;  // acceleration at zero generalized acceleration
  };

  struct BodyRef {
    int leg = -1;      // -1 selects the base
    int segment = 0;   // 0 base, 1 thigh, 2 calf
    Eigen::Vector2d local{0.0, 0.0};
    double radius = 0.0;
  };

  PointKin kinematics(const WorldState& s, const BodyRef& ref) const;
  BodyRef contact_ref(int c) const;
  BodyRef named_point(const std::string& point) const;
  void dynamics_terms(const WorldState& s, DofMatrix& M, DofVector& h) const;

  RobotModel model_;
  Terrain terrain_;
  DynamicsParams params_;
};

}  // namespace sata::sim
