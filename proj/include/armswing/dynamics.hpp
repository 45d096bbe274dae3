#pragma once

#include <stdexcept>
#include <vector>

#include "armswing/centroidal.hpp"

namespace armswing {

class SingularMassMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const Vec3 kDefaultGravity{0.0, 0.0, -9.81};

// Joint motion subspaces expressed in the CoM frame, one column per velocity
// coordinate (angular rows first).
Matrix6X motion_subspace_com_frame(const RobotModel& model,
                                   const Kinematics& kin, const Vec3& com);

// Joint-space inertia matrix M(q) (nv x nv) by composite-rigid-body
// aggregation.
MatX mass_matrix(const RobotModel& model, const Kinematics& kin,
                 const Vec3& com);
MatX mass_matrix(const RobotModel& model, const GeneralizedState& state);

/// Generalized bias force C(q, qd) including gravity and external body
/// forces (body coordinates, one per body or empty): the generalized force
/// that produces zero acceleration.
VecX bias_forces(const RobotModel& model, const Kinematics& kin,
                 const GeneralizedState& state, const Vec3& gravity,
                 const std::vector<SpatialForce>& external = {});

/// Solves M qdd = S tau - C. `joint_torques` has n_joints entries. With a
/// fixed base the base accelerations are zero.
VecX forward_dynamics(const RobotModel& model, const GeneralizedState& state,
                      const VecX& joint_torques,
                      const Vec3& gravity = kDefaultGravity,
                      const std::vector<SpatialForce>& external = {});

double kinetic_energy(const RobotModel& model, const GeneralizedState& state);
double potential_energy(const RobotModel& model, const GeneralizedState& state,
                        const Vec3& gravity = kDefaultGravity);

}  // namespace armswing
