#include "armswing/centroidal.hpp"

namespace armswing {

namespace {

// Body coordinates -> CoM frame (world axes, origin at com).
PluckerTransform body_to_com_frame(const Kinematics& kin, size_t i,
                                   const Vec3& com) {
  return PluckerTransform::from_pose(kin.R[i], kin.p[i] - com).inverse();
}

}  // namespace

Vec3 compute_com(const RobotModel& model, const Kinematics& kin) {
  Vec3 weighted = Vec3::Zero();
  double mass = 0.0;
  for (size_t i = 0; i < kin.R.size(); ++i) {
    const Body& b = model.bodies()[i];
    weighted += b.mass * (kin.p[i] + kin.R[i] * b.com);
    mass += b.mass;
  }
  return mass > 0.0 ? Vec3(weighted / mass) : Vec3::Zero();
}

Vec3 compute_com(const RobotModel& model, const GeneralizedState& state) {
  return compute_com(model, forward_kinematics(model, state.q));
}

Matrix6X compute_cmm(const RobotModel& model, const Kinematics& kin,
                     const Vec3& com) {
  const size_t n = kin.R.size();
  std::vector<PluckerTransform> X_G(n);
  std::vector<SpatialInertia> composite(n);
  for (size_t i = 0; i < n; ++i) {
    X_G[i] = body_to_com_frame(kin, i, com);
    composite[i] = transform_inertia(X_G[i], model.bodies()[i].inertia);
  }
  // All inertias share the CoM frame, so subtree sums need no transforms.
  for (size_t i = n; i-- > 1;) {
    const int parent = model.bodies()[i].joint.parent;
    if (parent >= 0) composite[static_cast<size_t>(parent)] += composite[i];
  }

  Matrix6X A = Matrix6X::Zero(6, model.nv());
  for (size_t i = 0; i < n; ++i) {
    const Body& b = model.bodies()[i];
    if (b.joint.type == JointType::floating) {
      for (int c = 0; c < 6; ++c) {
        Vec6 e = Vec6::Zero();
        e[c] = 1.0;
        const SpatialMotion s = X_G[i].apply(SpatialMotion::from_vector(e));
        A.col(b.v_index + c) = (composite[i] * s).to_vector();
      }
    } else {
      const SpatialMotion s = X_G[i].apply(kin.S[i]);
      A.col(b.v_index) = (composite[i] * s).to_vector();
    }
  }
  return A;
}

Matrix6X compute_cmm(const RobotModel& model, const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state.q);
  return compute_cmm(model, kin, compute_com(model, kin));
}

Vec6 momentum_rate_bias(const RobotModel& model, const Kinematics& kin,
                        const Vec3& com, const GeneralizedState& state) {
  const size_t n = kin.R.size();
  std::vector<SpatialMotion> acc(n);
  SpatialForce total;
  for (size_t i = 0; i < n; ++i) {
    const Body& b = model.bodies()[i];
    if (b.joint.type == JointType::revolute) {
      acc[i] = kin.X_parent[i].apply(acc[static_cast<size_t>(b.joint.parent)]) +
               motion_cross(kin.v[i], kin.S[i] * state.qd[b.v_index]);
    }
    const SpatialInertia& I = b.inertia;
    const SpatialForce f = I * acc[i] + force_cross(kin.v[i], I * kin.v[i]);
    total += body_to_com_frame(kin, i, com).apply(f);
  }
  return total.to_vector();
}

Vec6 momentum_rate_bias(const RobotModel& model,
                        const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state);
  return momentum_rate_bias(model, kin, compute_com(model, kin), state);
}

MomentumDecomposition decompose_momentum(const RobotModel& model,
                                         const Matrix6X& cmm, const VecX& qd) {
  const int nl = model.n_leg();
  const int na = model.n_arm();
  return {cmm.leftCols<6>() * qd.head<6>(),
          cmm.middleCols(6, nl) * qd.segment(6, nl),
          cmm.middleCols(6 + nl, na) * qd.segment(6 + nl, na)};
}

MomentumDecomposition decompose_momentum(const RobotModel& model,
                                         const GeneralizedState& state) {
  return decompose_momentum(model, compute_cmm(model, state), state.qd);
}

Vec6 reference_momentum(const Matrix6X& cmm, const CommandVel& cmd) {
  VecX qd_ref = VecX::Zero(cmm.cols());
  qd_ref[2] = cmd.wz;
  qd_ref[3] = cmd.vx;
  qd_ref[4] = cmd.vy;
  return cmm * qd_ref;
}

Vec6 reference_momentum(const RobotModel& model, const GeneralizedState& state,
                        const CommandVel& cmd) {
  return reference_momentum(compute_cmm(model, state), cmd);
}

CentroidalQuantities compute_centroidal(const RobotModel& model,
                                        const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state);
  CentroidalQuantities c;
  c.com = compute_com(model, kin);
  c.cmm = compute_cmm(model, kin, c.com);
  c.h = c.cmm * state.qd;
  const auto parts = decompose_momentum(model, c.cmm, state.qd);
  c.h_base = parts.base;
  c.h_legs = parts.legs;
  c.h_arms = parts.arms;
  c.cmm_dot_qd = momentum_rate_bias(model, kin, c.com, state);
  return c;
}

}  // namespace armswing
