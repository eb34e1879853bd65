#include "sata/sim/dynamics.hpp"

#include <cmath>
#include <string>

#include "sata/error.hpp"

namespace sata::sim {

namespace {

using Vec2 = Eigen::Vector2d;

Vec2 rotate(double angle, const Vec2& r) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return Vec2(c * r.x() - s * r.y(), s * r.x() + c * r.y());
}

Vec2 perp(const Vec2& w) { return Vec2(-w.y(), w.x()); }

struct Surface {
  Vec2 normal;
  Vec2 tangent;
  double height;
};

Surface surface_at(const Terrain& terrain, double x) {
  const double slope = terrain.gradient(x);
  const double inv = 1.0 / std::sqrt(1.0 + slope * slope);
  return Surface{Vec2(-slope * inv, inv), Vec2(inv, slope * inv), terrain.height(x)};
}

double contact_gap(const Surface& s, const Vec2& p, double radius) {
  return (p.y() - s.height) * s.normal.y() - radius;
}

bool finite_state(const WorldState& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.z) || !std::isfinite(s.pitch) || !std::isfinite(s.vx) ||
      !std::isfinite(s.vz) || !std::isfinite(s.pitch_rate)) {
    return false;
  }
  for (double v : s.q) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : s.qdot) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

Dynamics::Dynamics(RobotModel model, Terrain terrain, DynamicsParams params)
    : model_(std::move(model)), terrain_(std::move(terrain)), params_(params) {
  model_.validate();
  terrain_.validate();
  if (static_cast<int>(model_.legs.size()) > kMaxLegs) throw ConfigError("too many legs for the planar model");
}

WorldState Dynamics::make_state() const {
  WorldState s;
  const auto joints = static_cast<std::size_t>(model_.joint_count());
  s.q.assign(joints, 0.0);
  s.qdot.assign(joints, 0.0);
  s.contacts.resize(static_cast<std::size_t>(contact_count()));
  const int legs = static_cast<int>(model_.legs.size());
  for (int c = 0; c < contact_count(); ++c) {
    auto& reading = s.contacts[static_cast<std::size_t>(c)];
    if (c < legs) {
      reading.site = ContactSite::Foot;
      reading.index = c;
    } else if (c < 2 * legs) {
      reading.site = ContactSite::Knee;
      reading.index = c - legs;
    } else {
      reading.site = ContactSite::BaseCorner;
      reading.index = c - 2 * legs;
    }
  }
  return s;
}

Dynamics::BodyRef Dynamics::contact_ref(int c) const {
  const int legs = static_cast<int>(model_.legs.size());
  if (c < legs) {
    const auto& leg = model_.legs[static_cast<std::size_t>(c)];
    return BodyRef{c, 2, Vec2(0.0, -leg.calf_length), model_.foot_radius};
  }
  if (c < 2 * legs) {
    const auto& leg = model_.legs[static_cast<std::size_t>(c - legs)];
    return BodyRef{c - legs, 1, Vec2(0.0, -leg.thigh_length), model_.knee_radius};
  }
  const double hx = 0.5 * model_.base_length;
  const double hz = 0.5 * model_.base_thickness;
  switch (c - 2 * legs) {
    case 0: return BodyRef{-1, 0, Vec2(hx, -hz), 0.0};
    case 1: return BodyRef{-1, 0, Vec2(-hx, -hz), 0.0};
    case 2: return BodyRef{-1, 0, Vec2(hx, hz), 0.0};
    default: return BodyRef{-1, 0, Vec2(-hx, hz), 0.0};
  }
}

bool Dynamics::has_point(const std::string& point) const {
  try {
    (void)named_point(point);
    return true;
  } catch (const InvalidSpecError&) {
    return false;
  }
}

Dynamics::BodyRef Dynamics::named_point(const std::string& point) const {
  const double hx = 0.5 * model_.base_length;
  const double hz = 0.5 * model_.base_thickness;
  if (point == "base") return BodyRef{-1, 0, Vec2(0.0, 0.0), 0.0};
  if (point == "base_com") return BodyRef{-1, 0, Vec2(model_.com_offset[0], model_.com_offset[1]), 0.0};
  if (point == "base_front") return BodyRef{-1, 0, Vec2(hx, 0.0), 0.0};
  if (point == "base_rear") return BodyRef{-1, 0, Vec2(-hx, 0.0), 0.0};
  if (point == "base_top") return BodyRef{-1, 0, Vec2(0.0, hz), 0.0};
  const std::string prefix = "foot_";
  if (point.rfind(prefix, 0) == 0) {
    const std::string idx = point.substr(prefix.size());
    if (!idx.empty() && idx.find_first_not_of("0123456789") == std::string::npos) {
      const int leg = std::stoi(idx);
      if (leg >= 0 && leg < static_cast<int>(model_.legs.size())) return contact_ref(leg);
    }
  }
  throw InvalidSpecError("unknown body point '" + point + "'");
}

Dynamics::PointKin Dynamics::kinematics(const WorldState& s, const BodyRef& ref) const {
  const int n = model_.dof();
  PointKin k;
  k.p = Vec2(s.x, s.z);
  k.J.setZero(2, n);
  k.J(0, 0) = 1.0;
  k.J(1, 1) = 1.0;
  k.bias.setZero();

  // Adds a rigid vector r carried by a frame at absolute angle `angle`.
  auto add = [&](double angle, double rate, const Vec2& r, int hip, int knee) {
    const Vec2 w = rotate(angle, r);
    const Vec2 pw = perp(w);
    k.p += w;
    k.J.col(2) += pw;
    if (hip >= 0) k.J.col(hip) += pw;
    if (knee >= 0) k.J.col(knee) += pw;
    k.bias -= rate * rate * w;
  };

  if (ref.leg < 0) {
    add(s.pitch, s.pitch_rate, ref.local, -1, -1);
    return k;
  }
  const auto& leg = model_.legs[static_cast<std::size_t>(ref.leg)];
  const int hip = 3 + 2 * ref.leg;
  const int knee = hip + 1;
  const auto jh = static_cast<std::size_t>(2 * ref.leg);
  const double thigh_angle = s.pitch + s.q[jh];
  const double thigh_rate = s.pitch_rate + s.qdot[jh];
  add(s.pitch, s.pitch_rate, Vec2(leg.hip_x, leg.hip_z), -1, -1);
  if (ref.segment == 1) {
    add(thigh_angle, thigh_rate, ref.local, hip, -1);
    return k;
  }
  add(thigh_angle, thigh_rate, Vec2(0.0, -leg.thigh_length), hip, -1);
  add(thigh_angle + s.q[jh + 1], thigh_rate + s.qdot[jh + 1], ref.local, hip, knee);
  return k;
}

void Dynamics::dynamics_terms(const WorldState& s, DofMatrix& M, DofVector& h) const {
  const int n = model_.dof();
  M.setZero(n, n);
  h.setZero(n);
  const Vec2 up_g(0.0, params_.gravity);

  auto accumulate = [&](const BodyRef& ref, double mass, double inertia, int hip, int knee) {
    const PointKin k = kinematics(s, ref);
    M.noalias() += mass * k.J.transpose() * k.J;
    h.noalias() += mass * k.J.transpose() * (k.bias + up_g);
    // Planar angular Jacobian is a 0/1 row over pitch and the chain's joints.
    const int idx[3] = {2, hip, knee};
    for (int a : idx) {
      if (a < 0) continue;
      for (int b : idx) {
        if (b < 0) continue;
        M(a, b) += inertia;
      }
    }
  };

  accumulate(BodyRef{-1, 0, Vec2(model_.com_offset[0], model_.com_offset[1]), 0.0}, model_.base_mass,
             model_.base_inertia, -1, -1);
  for (int i = 0; i < static_cast<int>(model_.legs.size()); ++i) {
    const auto& leg = model_.legs[static_cast<std::size_t>(i)];
    const int hip = 3 + 2 * i;
    const double thigh_inertia = leg.thigh_mass * leg.thigh_length * leg.thigh_length / 12.0;
    const double calf_inertia = leg.calf_mass * leg.calf_length * leg.calf_length / 12.0;
    accumulate(BodyRef{i, 1, Vec2(0.0, -0.5 * leg.thigh_length), 0.0}, leg.thigh_mass, thigh_inertia, hip, -1);
    accumulate(BodyRef{i, 2, Vec2(0.0, -0.5 * leg.calf_length), 0.0}, leg.calf_mass, calf_inertia, hip,
               hip + 1);
  }
  for (int d = 3; d < n; ++d) M(d, d) += params_.armature;
}

DofMatrix Dynamics::mass_matrix(const WorldState& state) const {
  DofMatrix M;
  DofVector h;
  dynamics_terms(state, M, h);
  return M;
}

void Dynamics::step(WorldState& s, std::span<const double> torques, double dt) const {
  const int n = model_.dof();
  const int joints = model_.joint_count();
  if (static_cast<int>(torques.size()) != joints) throw ShapeError("physics_step: torque width mismatch");
  for (double t : torques) {
    if (!std::isfinite(t)) throw InvalidInputError("physics_step: non-finite torque");
  }

  DofMatrix M;
  DofVector h;
  dynamics_terms(s, M, h);

  DofVector v(n);
  v << s.vx, s.vz, s.pitch_rate, Eigen::Map<const Eigen::VectorXd>(s.qdot.data(), joints);

  // Forces that do not depend on the end-of-step velocity.
  DofVector f0 = -h;
  for (int j = 0; j < joints; ++j) f0(3 + j) += torques[static_cast<std::size_t>(j)];
  for (const auto& ext : s.disturbances) {
    if (!ext.active(s.time)) continue;
    const PointKin k = kinematics(s, named_point(ext.point));
    f0.noalias() += k.J.transpose() * Vec2(ext.fx, ext.fz);
  }

  const int nc = contact_count();
  std::array<PointKin, kMaxContacts> kin;
  std::array<Surface, kMaxContacts> surf;
  std::array<double, kMaxContacts> gap0{};
  std::array<double, kMaxContacts> vn0{};
  std::array<double, kMaxContacts> radius{};
  for (int c = 0; c < nc; ++c) {
    const BodyRef ref = contact_ref(c);
    kin[c] = kinematics(s, ref);
    surf[c] = surface_at(terrain_, kin[c].p.x());
    radius[c] = ref.radius;
    gap0[c] = contact_gap(surf[c], kin[c].p, ref.radius);
    vn0[c] = surf[c].normal.dot(kin[c].J * v);
  }

  const double k_c = terrain_.stiffness;
  const double c_c = terrain_.damping;
  const double mu = terrain_.friction;
  const double v_eps = params_.friction_velocity;
  std::array<double, kMaxContacts> fn{};
  std::array<double, kMaxContacts> ft{};

  // Velocity-dependent forces at candidate v+ and, optionally, their Jacobian.
  auto forces = [&](const DofVector& vp, DofVector& f, DofMatrix* df) {
    f.setZero(n);
    if (df) df->setZero(n, n);
    for (int c = 0; c < nc; ++c) {
      fn[c] = 0.0;
      ft[c] = 0.0;
      const Vec2 vc = kin[c].J * vp;
      const double vn = surf[c].normal.dot(vc);
      const double gap = gap0[c] + 0.5 * dt * (vn0[c] + vn);
      if (gap >= 0.0) continue;
      const double raw = -k_c * gap - c_c * vn;
      if (raw <= 0.0) continue;
      const double vt = surf[c].tangent.dot(vc);
      const double th = std::tanh(vt / v_eps);
      fn[c] = raw;
      ft[c] = -mu * raw * th;
      const Vec2 fw = fn[c] * surf[c].normal + ft[c] * surf[c].tangent;
      f.noalias() += kin[c].J.transpose() * fw;
      if (df) {
        const double dfn = -k_c * 0.5 * dt - c_c;
        const double dft_dvn = -mu * th * dfn;
        const double dft_dvt = -mu * raw * (1.0 - th * th) / v_eps;
        const Eigen::Matrix2d A = (surf[c].normal * dfn + surf[c].tangent * dft_dvn) * surf[c].normal.transpose() +
                                  dft_dvt * surf[c].tangent * surf[c].tangent.transpose();
        df->noalias() += kin[c].J.transpose() * A * kin[c].J;
      }
    }
    for (int j = 0; j < joints; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const int d = 3 + j;
      const double qn = s.q[ju] + 0.5 * dt * (v(d) + vp(d));
      double tau = -params_.joint_damping * vp(d);
      double dtau = -params_.joint_damping;
      const double dstop = -params_.stop_stiffness * 0.5 * dt - params_.stop_damping;
      if (qn > model_.q_max[ju]) {
        const double raw = -params_.stop_stiffness * (qn - model_.q_max[ju]) - params_.stop_damping * vp(d);
        if (raw < 0.0) {
          tau += raw;
          dtau += dstop;
        }
      } else if (qn < model_.q_min[ju]) {
        const double raw = params_.stop_stiffness * (model_.q_min[ju] - qn) - params_.stop_damping * vp(d);
        if (raw > 0.0) {
          tau += raw;
          dtau += dstop;
        }
      }
      f(d) += tau;
      if (df) (*df)(d, d) += dtau;
    }
  };

  DofVector vp = v;
  DofVector f(n);
  DofMatrix df(n, n);
  forces(vp, f, &df);
  DofVector residual = M * (vp - v) - dt * (f0 + f);
  double res_norm = residual.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < params_.newton_iterations && res_norm > params_.newton_tolerance; ++it) {
    const DofMatrix K = M - dt * df;
    const DofVector delta = K.partialPivLu().solve(residual);
    double step_size = 1.0;
    for (int ls = 0; ls < 6; ++ls) {
      const DofVector trial = vp - step_size * delta;
      forces(trial, f, nullptr);
      const DofVector r_trial = M * (trial - v) - dt * (f0 + f);
      const double trial_norm = r_trial.lpNorm<Eigen::Infinity>();
      if (trial_norm < res_norm || ls == 5) {
        vp = trial;
        residual = r_trial;
        res_norm = trial_norm;
        break;
      }
      step_size *= 0.5;
    }
    forces(vp, f, &df);
  }

  // Apply the forces of the final iterate exactly, so the recorded forces are
  // the ones that moved the system and respect the contact constraints.
  forces(vp, f, nullptr);
  const DofVector v_new = v + M.llt().solve(dt * (f0 + f));

  for (int c = 0; c < nc; ++c) {
    auto& r = s.contacts[static_cast<std::size_t>(c)];
    r.normal_force = fn[c];
    r.friction_force = ft[c];
    const Vec2 fw = fn[c] * surf[c].normal + ft[c] * surf[c].tangent;
    r.force_x = fw.x();
    r.force_z = fw.y();
  }

  const DofVector dq = 0.5 * dt * (v + v_new);
  s.x += dq(0);
  s.z += dq(1);
  s.pitch += dq(2);
  s.vx = v_new(0);
  s.vz = v_new(1);
  s.pitch_rate = v_new(2);
  for (int j = 0; j < joints; ++j) {
    s.q[static_cast<std::size_t>(j)] += dq(3 + j);
    s.qdot[static_cast<std::size_t>(j)] = v_new(3 + j);
  }
  s.time += dt;
  s.step_count += 1;

  if (!finite_state(s) || std::abs(s.z) > params_.blowup_height) {
    throw SimulationBlowupError("simulation diverged at step " + std::to_string(s.step_count), s.step_count);
  }
  refresh_contacts(s);
}

void Dynamics::refresh_contacts(WorldState& s) const {
  const int nc = contact_count();
  if (static_cast<int>(s.contacts.size()) != nc) throw ShapeError("world state contact array not allocated");
  for (int c = 0; c < nc; ++c) {
    const BodyRef ref = contact_ref(c);
    const PointKin k = kinematics(s, ref);
    const Surface sf = surface_at(terrain_, k.p.x());
    auto& r = s.contacts[static_cast<std::size_t>(c)];
    r.x = k.p.x();
    r.z = k.p.y();
    r.gap = contact_gap(sf, k.p, ref.radius);
    r.in_contact = r.gap <= params_.penetration_tolerance;
  }
}

std::array<double, 2> Dynamics::point_position(const WorldState& state, const std::string& point) const {
  const PointKin k = kinematics(state, named_point(point));
  return {k.p.x(), k.p.y()};
}

std::array<double, 2> Dynamics::center_of_mass(const WorldState& s) const {
  Vec2 acc = model_.base_mass * kinematics(s, BodyRef{-1, 0, Vec2(model_.com_offset[0], model_.com_offset[1])}).p;
  double mass = model_.base_mass;
  for (int i = 0; i < static_cast<int>(model_.legs.size()); ++i) {
    const auto& leg = model_.legs[static_cast<std::size_t>(i)];
    acc += leg.thigh_mass * kinematics(s, BodyRef{i, 1, Vec2(0.0, -0.5 * leg.thigh_length)}).p;
    acc += leg.calf_mass * kinematics(s, BodyRef{i, 2, Vec2(0.0, -0.5 * leg.calf_length)}).p;
    mass += leg.thigh_mass + leg.calf_mass;
  }
  acc /= mass;
  return {acc.x(), acc.y()};
}

std::array<double, 2> Dynamics::center_of_mass_velocity(const WorldState& s) const {
  const int joints = model_.joint_count();
  DofVector v(model_.dof());
  v << s.vx, s.vz, s.pitch_rate, Eigen::Map<const Eigen::VectorXd>(s.qdot.data(), joints);
  Vec2 acc = model_.base_mass * (kinematics(s, BodyRef{-1, 0, Vec2(model_.com_offset[0], model_.com_offset[1])}).J * v);
  double mass = model_.base_mass;
  for (int i = 0; i < static_cast<int>(model_.legs.size()); ++i) {
    const auto& leg = model_.legs[static_cast<std::size_t>(i)];
    acc += leg.thigh_mass * (kinematics(s, BodyRef{i, 1, Vec2(0.0, -0.5 * leg.thigh_length)}).J * v);
    acc += leg.calf_mass * (kinematics(s, BodyRef{i, 2, Vec2(0.0, -0.5 * leg.calf_length)}).J * v);
    mass += leg.thigh_mass + leg.calf_mass;
  }
  acc /= mass;
  return {acc.x(), acc.y()};
}

double Dynamics::vertical_contact_force(const WorldState& state) {
  double total = 0.0;
  for (const auto& c : state.contacts) total += c.force_z;
  return total;
}

}  // namespace sata::sim
