#include "armswing/kinematics.hpp"

#include <cmath>

namespace armswing {

Mat3 base_rotation(const VecX& q) {
  return Eigen::Quaterniond(q[3], q[4], q[5], q[6])
      .normalized()
      .toRotationMatrix();
}

VecX integrate_configuration(const RobotModel& model, const VecX& q,
                             const VecX& qd, double dt) {
  VecX out = q;
  out.tail(model.n_joints()) += qd.tail(model.n_joints()) * dt;
  if (model.fixed_base()) return out;

  const Vec3 phi = qd.head<3>() * dt;
  const Vec3 u = qd.segment<3>(3) * dt;
  const double theta = phi.norm();
  const Mat3 P = skew(phi);
  double a, b;  // (1 - cos)/theta^2, (theta - sin)/theta^3
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  const Mat3 V = Mat3::Identity() + a * P + b * P * P;
  const Eigen::Quaterniond quat =
      Eigen::Quaterniond(q[3], q[4], q[5], q[6]).normalized();
  out.head<3>() += quat.toRotationMatrix() * (V * u);

  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (theta > 0.0) dq = Eigen::AngleAxisd(theta, phi / theta);
  const Eigen::Quaterniond next = (quat * dq).normalized();
  out[3] = next.w();
  out[4] = next.x();
  out[5] = next.y();
  out[6] = next.z();
  return out;
}

Kinematics forward_kinematics(const RobotModel& model, const VecX& q) {
  const size_t n = static_cast<size_t>(model.num_bodies());
  Kinematics k;
  k.X_parent.resize(n);
  k.R.resize(n);
  k.p.resize(n);
  k.S.resize(n);

  for (size_t i = 0; i < n; ++i) {
    const Body& b = model.bodies()[i];
    const JointSpec& j = b.joint;
    const Mat3 R_origin = j.origin.rotation.transpose();
    Mat3 R_joint;
    Vec3 p_joint = Vec3::Zero();
    if (j.type == JointType::floating) {
      R_joint = base_rotation(q);
      p_joint = q.head<3>();
    } else {
      R_joint = axis_angle_rotation(j.axis, q[b.q_index]);
      k.S[i] = SpatialMotion{j.axis, Vec3::Zero()};
    }
    k.X_parent[i] = PluckerTransform::from_pose(R_joint, p_joint) * j.origin;

    if (j.parent < 0) {
      k.R[i] = R_origin * R_joint;
      k.p[i] = j.origin_xyz + R_origin * p_joint;
    } else {
      const size_t par = static_cast<size_t>(j.parent);
      k.R[i] = k.R[par] * R_origin * R_joint;
      k.p[i] = k.p[par] + k.R[par] * (j.origin_xyz + R_origin * p_joint);
    }
  }
  return k;
}

Kinematics forward_kinematics(const RobotModel& model,
                              const GeneralizedState& state) {
  Kinematics k = forward_kinematics(model, state.q);
  const size_t n = static_cast<size_t>(model.num_bodies());
  k.v.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const Body& b = model.bodies()[i];
    if (b.joint.type == JointType::floating) {
      k.v[i] = model.fixed_base() ? SpatialMotion::zero()
                                  : SpatialMotion::from_vector(
                                        state.qd.segment<6>(b.v_index));
    } else {
      k.v[i] = k.X_parent[i].apply(k.v[static_cast<size_t>(b.joint.parent)]) +
               k.S[i] * state.qd[b.v_index];
    }
  }
  return k;
}

}  // namespace armswing
