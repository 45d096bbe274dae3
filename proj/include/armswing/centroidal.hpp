#pragma once

#include "armswing/kinematics.hpp"
#include "armswing/model.hpp"

namespace armswing {

using Matrix6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Centroidal quantities at one state. Every 6-vector is stacked (k_G, l_G)
/// in a frame at the CoM with world-aligned axes.
struct CentroidalQuantities {
  Vec3 com = Vec3::Zero();
  Matrix6X cmm;
  Vec6 h = Vec6::Zero();
  Vec6 h_base = Vec6::Zero();
  Vec6 h_legs = Vec6::Zero();
  Vec6 h_arms = Vec6::Zero();
  Vec6 cmm_dot_qd = Vec6::Zero();

  Vec3 k() const { return h.head<3>(); }
  Vec3 l() const { return h.tail<3>(); }
};

struct CommandVel {
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;

  Vec3 as_vector() const { return {vx, vy, wz}; }
  bool operator==(const CommandVel&) const = default;
};

struct MomentumDecomposition {
  Vec6 base;
  Vec6 legs;
  Vec6 arms;
};

Vec3 compute_com(const RobotModel& model, const GeneralizedState& state);
Vec3 compute_com(const RobotModel& model, const Kinematics& kin);

/// Centroidal momentum matrix A_G (6 x nv) by composite-inertia
/// aggregation in the CoM frame: the column block of joint j is the
/// composite inertia of j's subtree times j's motion subspace.
Matrix6X compute_cmm(const RobotModel& model, const GeneralizedState& state);
Matrix6X compute_cmm(const RobotModel& model, const Kinematics& kin,
                     const Vec3& com);

/// A_G-dot * qd, from body velocity-product terms (no differentiation).
Vec6 momentum_rate_bias(const RobotModel& model, const GeneralizedState& state);
Vec6 momentum_rate_bias(const RobotModel& model, const Kinematics& kin,
                        const Vec3& com, const GeneralizedState& state);

MomentumDecomposition decompose_momentum(const RobotModel& model,
                                         const GeneralizedState& state);
MomentumDecomposition decompose_momentum(const RobotModel& model,
                                         const Matrix6X& cmm, const VecX& qd);

/// A_G(q) * qd_ref with qd_ref = (0, 0, wz, vx, vy, 0, 0...).
Vec6 reference_momentum(const RobotModel& model, const GeneralizedState& state,
                        const CommandVel& cmd);
Vec6 reference_momentum(const Matrix6X& cmm, const CommandVel& cmd);

CentroidalQuantities compute_centroidal(const RobotModel& model,
                                        const GeneralizedState& state);

}  // namespace armswing
