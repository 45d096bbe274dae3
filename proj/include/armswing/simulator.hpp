#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "armswing/dynamics.hpp"

namespace armswing {

struct ContactParams {
  double stiffness = 30000.0;       // N/m
  double damping = 300.0;           // N s/m
  double friction = 0.8;            // Coulomb coefficient
  double tangential_gain = 1000.0;  // N s/m, viscous friction before the cap
  double flag_threshold = 1.0;      // N, foot counts as in contact above this
};

struct SimOptions {
  ContactParams contact;
  Vec3 gravity = kDefaultGravity;
  double velocity_guard = 1e4;
  // Enforce h_{k+1} = h_k + dt * (net external wrench about the CoM) by a
  // base-velocity correction after each integration step.
  bool conserve_momentum = true;
};

/// External wrench in world axes, moment plus a force acting at the base
/// origin.
struct ExternalWrench {
  SpatialForce wrench;
  double expiry = 0.0;
};

struct SimState {
  GeneralizedState gen;
  double time = 0.0;
  std::array<bool, 2> contact_flags{false, false};  // [left, right]
  // Per model contact point, evaluated at the start of the last step.
  std::vector<Vec3> contact_forces;
  std::vector<Vec3> contact_positions;
  std::optional<ExternalWrench> external_wrench;
  bool invalid = false;

  bool in_contact(Foot f) const {
    return contact_flags[f == Foot::left ? 0 : 1];
  }
};

enum class StanceFoot { left, right, both, none };
const char* to_string(StanceFoot s);

struct GrmSample {
  Vec2 cp = Vec2::Zero();
  double mz = 0.0;
  StanceFoot stance_foot = StanceFoot::none;
  double normal_force = 0.0;
};

/// Penalty contact at a point `height` above flat ground moving with world
/// velocity `velocity`.
Vec3 contact_force(double height, const Vec3& velocity,
                   const ContactParams& params);

/// Center of pressure of the active contact points and the vertical moment
/// of the horizontal contact forces about it.
GrmSample grm_about_cp(const SimState& state,
                       std::span<const ContactPoint> points,
                       double stance_share = 0.8);

SimState apply_disturbance(SimState state, const SpatialForce& wrench,
                           double duration);

class Simulator {
 public:
  explicit Simulator(const RobotModel& model, SimOptions options = {});

  const RobotModel& model() const { return *model_; }
  const SimOptions& options() const { return options_; }

  SimState make_state(GeneralizedState gen, double time = 0.0) const;

  VecX clamp_torques(const VecX& joint_torques) const;

  /// Generalized acceleration including contact and external forces.
  VecX forward_dynamics(const SimState& state, const VecX& joint_torques) const;

  /// Semi-implicit Euler step (velocity first, then position; quaternion via
  /// the exponential map).
  SimState step(const SimState& state, const VecX& joint_torques,
                double dt) const;

  /// Net external wrench about the current CoM (world axes), including
  /// gravity, contacts and any active disturbance, as used by step().
  Vec6 external_wrench_about_com(const SimState& state) const;

 private:
  struct Loads {
    std::vector<SpatialForce> body_forces;  // body coordinates
    std::vector<Vec3> contact_forces;
    std::vector<Vec3> contact_positions;
    Vec6 wrench_about_com = Vec6::Zero();
  };
  Loads compute_loads(const SimState& state, const Kinematics& kin,
                      const Vec3& com) const;
  bool wrench_active(const SimState& state, double dt) const;

  const RobotModel* model_;
  SimOptions options_;
};

}  // namespace armswing
