#include "armswing/dynamics.hpp"

#include <string>

namespace armswing {

namespace {

std::vector<int> ancestors_or_self(const RobotModel& model, int body) {
  std::vector<int> out;
  for (int b = body; b >= 0; b = model.body(b).joint.parent) out.push_back(b);
  return out;
}

int dof_count(const Body& b) {
  return b.joint.type == JointType::floating ? 6 : 1;
}

}  // namespace

Matrix6X motion_subspace_com_frame(const RobotModel& model,
                                   const Kinematics& kin, const Vec3& com) {
  Matrix6X S = Matrix6X::Zero(6, model.nv());
  for (int i = 0; i < model.num_bodies(); ++i) {
    const size_t u = static_cast<size_t>(i);
    const Body& b = model.body(i);
    const PluckerTransform X =
        PluckerTransform::from_pose(kin.R[u], kin.p[u] - com).inverse();
    if (b.joint.type == JointType::floating) {
      S.middleCols<6>(b.v_index) = X.motion_matrix();
    } else {
      S.col(b.v_index) = X.apply(kin.S[u]).to_vector();
    }
  }
  return S;
}

MatX mass_matrix(const RobotModel& model, const Kinematics& kin,
                 const Vec3& com) {
  // Column k of the CMM is (composite inertia of k's subtree) * S_k, so
  // M(j, k) = S_j . A_k whenever j's body is an ancestor of (or is) k's body.
  const Matrix6X A = compute_cmm(model, kin, com);
  const Matrix6X S = motion_subspace_com_frame(model, kin, com);
  const int nv = model.nv();
  MatX M = MatX::Zero(nv, nv);
  for (int i = 0; i < model.num_bodies(); ++i) {
    const Body& bi = model.body(i);
    for (int ci = 0; ci < dof_count(bi); ++ci) {
      const int k = bi.v_index + ci;
      for (int a : ancestors_or_self(model, i)) {
        const Body& ba = model.body(a);
        for (int ca = 0; ca < dof_count(ba); ++ca) {
          const int j = ba.v_index + ca;
          const double m = S.col(j).dot(A.col(k));
          M(j, k) = m;
          M(k, j) = m;
        }
      }
    }
  }
  return M;
}

MatX mass_matrix(const RobotModel& model, const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state.q);
  return mass_matrix(model, kin, compute_com(model, kin));
}

VecX bias_forces(const RobotModel& model, const Kinematics& kin,
                 const GeneralizedState& state, const Vec3& gravity,
                 const std::vector<SpatialForce>& external) {
  const size_t n = static_cast<size_t>(model.num_bodies());
  std::vector<SpatialMotion> acc(n);
  std::vector<SpatialForce> f(n);
  for (size_t i = 0; i < n; ++i) {
    const Body& b = model.bodies()[i];
    if (b.joint.parent < 0) {
      // Gravity enters as a fictitious upward acceleration of the world.
      acc[i] = kin.world_to_body(static_cast<int>(i))
                   .apply(SpatialMotion{Vec3::Zero(), -gravity});
    } else {
      acc[i] = kin.X_parent[i].apply(acc[static_cast<size_t>(b.joint.parent)]) +
               motion_cross(kin.v[i], kin.S[i] * state.qd[b.v_index]);
    }
    f[i] = b.inertia * acc[i] + force_cross(kin.v[i], b.inertia * kin.v[i]);
    if (!external.empty()) f[i] -= external[i];
  }

  VecX C = VecX::Zero(model.nv());
  for (size_t i = n; i-- > 0;) {
    const Body& b = model.bodies()[i];
    if (b.joint.type == JointType::floating) {
      C.segment<6>(b.v_index) = f[i].to_vector();
    } else {
      C[b.v_index] = dot(f[i], kin.S[i]);
    }
    if (b.joint.parent >= 0) {
      f[static_cast<size_t>(b.joint.parent)] += kin.X_parent[i].apply_inverse(f[i]);
    }
  }
  return C;
}

VecX forward_dynamics(const RobotModel& model, const GeneralizedState& state,
                      const VecX& joint_torques, const Vec3& gravity,
                      const std::vector<SpatialForce>& external) {
  const Kinematics kin = forward_kinematics(model, state);
  const Vec3 com = compute_com(model, kin);
  const MatX M = mass_matrix(model, kin, com);
  VecX rhs = -bias_forces(model, kin, state, gravity, external);
  rhs.tail(model.n_joints()) += joint_torques;

  VecX qdd = VecX::Zero(model.nv());
  const int first = model.fixed_base() ? 6 : 0;
  const int dim = model.nv() - first;
  if (dim == 0) return qdd;
  const MatX block = M.bottomRightCorner(dim, dim);
  Eigen::LDLT<MatX> ldlt(block);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, block.norm())) {
    throw SingularMassMatrix(
        "mass matrix is singular; check body masses and inertias");
  }
  qdd.tail(dim) = ldlt.solve(rhs.tail(dim));
  return qdd;
}

double kinetic_energy(const RobotModel& model, const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state);
  double T = 0.0;
  for (size_t i = 0; i < kin.v.size(); ++i) {
    T += model.bodies()[i].inertia.kinetic_energy(kin.v[i]);
  }
  return T;
}

double potential_energy(const RobotModel& model, const GeneralizedState& state,
                        const Vec3& gravity) {
  const Kinematics kin = forward_kinematics(model, state.q);
  return -model.total_mass() * gravity.dot(compute_com(model, kin));
}

}  // namespace armswing
