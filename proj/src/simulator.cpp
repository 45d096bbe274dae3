#include "armswing/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace armswing {

namespace {
constexpr double kTimeEps = 1e-9;
}

const char* to_string(StanceFoot s) {
  switch (s) {
    case StanceFoot::left: return "left";
    case StanceFoot::right: return "right";
    case StanceFoot::both: return "double";
    case StanceFoot::none: return "none";
  }
  return "?";
}

Vec3 contact_force(double height, const Vec3& velocity,
                   const ContactParams& params) {
  if (height >= 0.0) return Vec3::Zero();
  const double normal = std::max(
      0.0, -params.stiffness * height - params.damping * velocity.z());
  if (normal == 0.0) return Vec3::Zero();
  Vec2 tangential = -params.tangential_gain * velocity.head<2>();
  const double cap = params.friction * normal;
  const double mag = tangential.norm();
  if (mag > cap) tangential *= cap / mag;
  return {tangential.x(), tangential.y(), normal};
}

GrmSample grm_about_cp(const SimState& state,
                       std::span<const ContactPoint> points,
                       double stance_share) {
  GrmSample out;
  double total = 0.0;
  std::array<double, 2> per_foot{0.0, 0.0};
  Vec2 weighted = Vec2::Zero();
  for (size_t i = 0; i < points.size() && i < state.contact_forces.size();
       ++i) {
    const double fz = state.contact_forces[i].z();
    if (fz <= 0.0) continue;
    total += fz;
    per_foot[points[i].foot == Foot::left ? 0 : 1] += fz;
    weighted += fz * state.contact_positions[i].head<2>();
  }
  out.normal_force = total;
  if (total <= 1.0) return out;

  out.cp = weighted / total;
  for (size_t i = 0; i < points.size() && i < state.contact_forces.size();
       ++i) {
    const Vec3& f = state.contact_forces[i];
    if (f.z() <= 0.0) continue;
    const Vec2 d = state.contact_positions[i].head<2>() - out.cp;
    out.mz += d.x() * f.y() - d.y() * f.x();
  }
  if (per_foot[0] > stance_share * total) {
    out.stance_foot = StanceFoot::left;
  } else if (per_foot[1] > stance_share * total) {
    out.stance_foot = StanceFoot::right;
  } else {
    out.stance_foot = StanceFoot::both;
  }
  return out;
}

SimState apply_disturbance(SimState state, const SpatialForce& wrench,
                           double duration) {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("apply_disturbance: duration must be > 0");
  }
  state.external_wrench = ExternalWrench{wrench, state.time + duration};
  return state;
}

Simulator::Simulator(const RobotModel& model, SimOptions options)
    : model_(&model), options_(options) {}

SimState Simulator::make_state(GeneralizedState gen, double time) const {
  SimState s;
  s.gen = std::move(gen);
  s.time = time;
  const size_t nc = model_->contact_points().size();
  s.contact_forces.assign(nc, Vec3::Zero());
  const Kinematics kin = forward_kinematics(*model_, s.gen.q);
  for (const auto& c : model_->contact_points()) {
    s.contact_positions.push_back(kin.point_position(c.body, c.offset));
  }
  return s;
}

VecX Simulator::clamp_torques(const VecX& joint_torques) const {
  VecX out = joint_torques;
  for (int j = 0; j < model_->n_joints(); ++j) {
    const double lim = model_->joint_body(j).joint.torque_limit;
    out[j] = std::clamp(out[j], -lim, lim);
  }
  return out;
}

bool Simulator::wrench_active(const SimState& state, double) const {
  return state.external_wrench &&
         state.time < state.external_wrench->expiry - kTimeEps;
}

Simulator::Loads Simulator::compute_loads(const SimState& state,
                                          const Kinematics& kin,
                                          const Vec3& com) const {
  const RobotModel& m = *model_;
  Loads loads;
  loads.body_forces.assign(static_cast<size_t>(m.num_bodies()),
                           SpatialForce::zero());
  Vec3 moment = Vec3::Zero();
  Vec3 force = m.total_mass() * options_.gravity;

  for (const auto& c : m.contact_points()) {
    const Vec3 pos = kin.point_position(c.body, c.offset);
    const Vec3 vel = kin.point_velocity(c.body, c.offset);
    const Vec3 f = contact_force(pos.z(), vel, options_.contact);
    loads.contact_positions.push_back(pos);
    loads.contact_forces.push_back(f);
    if (f.isZero(0.0)) continue;
    const Mat3& R = kin.R[static_cast<size_t>(c.body)];
    const Vec3 f_body = R.transpose() * f;
    loads.body_forces[static_cast<size_t>(c.body)] +=
        SpatialForce{c.offset.cross(f_body), f_body};
    moment += (pos - com).cross(f);
    force += f;
  }

  if (wrench_active(state, 0.0) && !m.fixed_base()) {
    const SpatialForce& w = state.external_wrench->wrench;
    const Mat3& R = kin.R[0];
    loads.body_forces[0] +=
        SpatialForce{R.transpose() * w.moment, R.transpose() * w.force};
    moment += w.moment + (kin.p[0] - com).cross(w.force);
    force += w.force;
  }
  loads.wrench_about_com << moment, force;
  return loads;
}

VecX Simulator::forward_dynamics(const SimState& state,
                                 const VecX& joint_torques) const {
  const Kinematics kin = forward_kinematics(*model_, state.gen);
  const Vec3 com = compute_com(*model_, kin);
  const Loads loads = compute_loads(state, kin, com);
  return armswing::forward_dynamics(*model_, state.gen,
                                    clamp_torques(joint_torques),
                                    options_.gravity, loads.body_forces);
}

Vec6 Simulator::external_wrench_about_com(const SimState& state) const {
  const Kinematics kin = forward_kinematics(*model_, state.gen);
  return compute_loads(state, kin, compute_com(*model_, kin)).wrench_about_com;
}

SimState Simulator::step(const SimState& state, const VecX& joint_torques,
                         double dt) const {
  if (state.invalid) return state;
  const RobotModel& m = *model_;
  const Kinematics kin = forward_kinematics(m, state.gen);
  const Vec3 com = compute_com(m, kin);
  const Loads loads = compute_loads(state, kin, com);

  SimState next = state;
  next.contact_forces = loads.contact_forces;
  next.contact_positions = loads.contact_positions;

  VecX qdd;
  try {
    qdd = armswing::forward_dynamics(m, state.gen, clamp_torques(joint_torques),
                                     options_.gravity, loads.body_forces);
  } catch (const SingularMassMatrix&) {
    next.invalid = true;
    return next;
  }

  VecX& q = next.gen.q;
  VecX& qd = next.gen.qd;
  qd += qdd * dt;
  if (m.fixed_base()) qd.head<6>().setZero();

  q = integrate_configuration(m, state.gen.q, qd, dt);

  if (options_.conserve_momentum && !m.fixed_base() && m.total_mass() > 0.0) {
    const Vec6 h_target =
        compute_cmm(m, kin, com) * state.gen.qd + dt * loads.wrench_about_com;
    const Kinematics kin_next = forward_kinematics(m, q);
    const Matrix6X A = compute_cmm(m, kin_next, compute_com(m, kin_next));
    const Mat6 A_base = A.leftCols<6>();
    qd.head<6>() += A_base.partialPivLu().solve(h_target - A * qd);
  }

  next.time = state.time + dt;
  for (Foot foot : {Foot::left, Foot::right}) {
    double fn = 0.0;
    const auto& pts = m.contact_points();
    for (size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].foot == foot) fn += loads.contact_forces[i].z();
    }
    next.contact_flags[foot == Foot::left ? 0 : 1] =
        fn > options_.contact.flag_threshold;
  }
  if (next.external_wrench &&
      next.time >= next.external_wrench->expiry - kTimeEps) {
    next.external_wrench.reset();
  }
  if (!qd.allFinite() || !q.allFinite() ||
      qd.cwiseAbs().maxCoeff() > options_.velocity_guard) {
    next.invalid = true;
  }
  return next;
}

}  // namespace armswing
