#pragma once

#include <vector>

#include "armswing/model.hpp"

namespace armswing {

struct Kinematics {
  std::vector<PluckerTransform> X_parent;  // parent body (or world) -> body
  std::vector<Mat3> R;                     // world orientation of body frame
  std::vector<Vec3> p;                     // world position of body origin
  std::vector<SpatialMotion> S;            // revolute motion subspace, body coords
  std::vector<SpatialMotion> v;            // body velocity, body coords

  Vec3 point_position(int body, const Vec3& offset) const {
    return p[static_cast<size_t>(body)] + R[static_cast<size_t>(body)] * offset;
  }
  // World-frame velocity of a point fixed to `body`.
  Vec3 point_velocity(int body, const Vec3& offset) const {
    const auto& vb = v[static_cast<size_t>(body)];
    return R[static_cast<size_t>(body)] *
           (vb.linear + vb.angular.cross(offset));
  }
  // Transform from the world frame to body coordinates.
  PluckerTransform world_to_body(int body) const {
    return PluckerTransform::from_pose(R[static_cast<size_t>(body)],
                                       p[static_cast<size_t>(body)]);
  }
};

// Poses only (v left empty).
Kinematics forward_kinematics(const RobotModel& model, const VecX& q);
// Poses and body velocities.
Kinematics forward_kinematics(const RobotModel& model,
                              const GeneralizedState& state);

Mat3 base_rotation(const VecX& q);

/// q advanced by qd over dt with qd held constant: the base follows the
/// constant body twist (exact SE(3) exponential), joints move linearly.
VecX integrate_configuration(const RobotModel& model, const VecX& q,
                             const VecX& qd, double dt);

}  // namespace armswing
