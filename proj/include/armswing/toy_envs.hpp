#pragma once

#include <random>

#include "armswing/config.hpp"
#include "armswing/multi_agent_env.hpp"

namespace armswing {

/// Inverted pendulum balanced by one torque agent. Angle measured from
/// upright; the episode ends when |theta| exceeds `fall_angle`.
struct PendulumConfig {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 9.81;
  double damping = 0.05;
  double max_torque = 15.0;
  double dt = 0.05;
  int substeps = 5;
  int episode_steps = 200;
  double init_angle = 0.3;
  double init_rate = 0.3;
  double fall_angle = 1.0;

  static PendulumConfig from_config(const Config& cfg);
};

class PendulumBalanceEnv : public MultiAgentEnv {
 public:
  explicit PendulumBalanceEnv(PendulumConfig cfg = {});

  int num_agents() const override { return 1; }
  std::string agent_name(int) const override { return "pendulum"; }
  int local_obs_dim(int) const override { return 2; }
  int global_obs_dim() const override { return 2; }
  int action_dim(int) const override { return 1; }
  Transition reset(std::uint64_t seed) override;
  Transition step(const std::vector<VecX>& actions) override;

  double angle() const { return theta_; }
  double rate() const { return omega_; }
  void set_state(double theta, double omega);
  /// exp(-theta^2 / 0.05 - 0.01 omega^2) - 0.001 a^2
  static double reward(double theta, double omega, double action);

 private:
  Transition make(double reward, bool terminated, bool truncated) const;

  PendulumConfig cfg_;
  double theta_ = 0.0, omega_ = 0.0;
  int steps_ = 0;
  std::mt19937_64 rng_;
};

/// Normalised PD action that balances the pendulum.
double pendulum_pd_action(double theta, double omega, const PendulumConfig& cfg);
/// Mean return of the PD oracle over `episodes` resets.
double pendulum_pd_return(const PendulumConfig& cfg, int episodes, std::uint64_t seed);

/// Cart on a rail carrying a two-link arm that hangs below it. Agent 0
/// drives the arm joints, agent 1 pushes the cart. The cart tracks a
/// velocity command that is hidden from the arm agent; the arm is rewarded
/// for keeping the system's angular momentum about its CoM near zero.
struct ToyCoopConfig {
  double cart_mass = 1.0;
  double link_mass = 0.5;
  double link_length = 0.4;
  double gravity = 9.81;
  double cart_damping = 0.1;
  double joint_damping = 0.02;
  double max_force = 10.0;
  double max_torque = 1.5;
  double dt = 0.05;
  int substeps = 10;
  int episode_steps = 200;
  double command_period = 2.0;
  double command_range = 1.0;
  double sigma = 0.25;
  double cam_scale = 0.2;
  double init_noise = 0.3;
  // Arm reward weights.
  double w_cam = 1.0;
  double w_dcam = 0.05;
  double w_arm_effort = 0.01;
  // Cart reward weights.
  double w_vt = 1.0;
  double w_cart_effort = 0.001;

  static ToyCoopConfig from_config(const Config& cfg);
};

class ToyCoopEnv : public MultiAgentEnv {
 public:
  explicit ToyCoopEnv(ToyCoopConfig cfg = {});

  int num_agents() const override { return 2; }
  std::string agent_name(int agent) const override { return agent == 0 ? "arm" : "cart"; }
  int local_obs_dim(int agent) const override { return agent == 0 ? 8 : 4; }
  int global_obs_dim() const override { return 10; }
  int action_dim(int agent) const override { return agent == 0 ? 2 : 1; }
  Transition reset(std::uint64_t seed) override;
  Transition step(const std::vector<VecX>& actions) override;

  /// Generalized coordinates (x, theta1, theta2), angles from the hanging
  /// vertical, theta2 relative to link 1.
  const Eigen::Vector3d& q() const { return q_; }
  const Eigen::Vector3d& qd() const { return qd_; }
  void set_state(const Eigen::Vector3d& q, const Eigen::Vector3d& qd);
  double command() const { return cmd_; }
  void set_command(double v) { cmd_ = v; }

  Eigen::Matrix3d mass_matrix() const;
  /// Coriolis, centrifugal and gravity terms.
  Eigen::Vector3d bias_forces() const;
  /// Angular momentum about the CoM (out of the plane).
  double angular_momentum() const;
  double kinetic_energy() const;
  double potential_energy() const;
  /// Integrates one substep with generalized forces `tau`.
  void integrate(const Eigen::Vector3d& tau, double h);

 private:
  Transition make(const RewardComponents& arm, const RewardComponents& cart, bool truncated) const;

  ToyCoopConfig cfg_;
  Eigen::Vector3d q_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d qd_ = Eigen::Vector3d::Zero();
  Eigen::Vector2d prev_arm_ = Eigen::Vector2d::Zero();
  double prev_cart_ = 0.0;
  double cmd_ = 0.0;
  int steps_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace armswing
