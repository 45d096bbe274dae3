#pragma once

// Reference computations that avoid the production code paths (no spatial
// algebra, no composite inertias), plus the dynamics check suite built on
// them.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "armswing/centroidal.hpp"
#include "armswing/simulator.hpp"

namespace armswing::validation {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Uniform random state: base anywhere in a 2 m cube with random
/// orientation, joints within limits, velocities in [-vmax, vmax].
GeneralizedState random_state(const RobotModel& model, std::mt19937_64& rng,
                              double vmax = 2.0);

/// Sum of m_i * c_i over bodies divided by total mass.
Vec3 brute_force_com(const RobotModel& model, const GeneralizedState& state);

/// Whole-body momentum about the CoM from a world-frame point-velocity
/// recursion: omega_i = omega_parent + axis_i * qd_i, and each body's
/// angular momentum R I_c R^T omega + m (c - G) x c_dot.
Vec6 brute_force_momentum(const RobotModel& model,
                          const GeneralizedState& state);

/// Central difference of A(q(t)) qd at constant qd.
Vec6 finite_difference_bias(const RobotModel& model,
                            const GeneralizedState& state, double step);

/// A[:, {2,3,4}] * (wz, vx, vy).
Vec6 column_slice_reference(const Matrix6X& cmm, const CommandVel& cmd);

CheckResult check_cmm_brute_force(const RobotModel& model, int states,
                                  std::uint64_t seed);
CheckResult check_decomposition(const RobotModel& model, int states,
                                std::uint64_t seed);
CheckResult check_momentum_conservation(const RobotModel& model,
                                        double duration);
CheckResult check_bias_finite_difference(const RobotModel& model, int states,
                                         std::uint64_t seed);
std::vector<CheckResult> check_reference_momentum(const RobotModel& model,
                                                  int states,
                                                  std::uint64_t seed);

/// Windowed finite-difference dh/dt along a simulated trajectory against the
/// wrench recomputed from the recorded contact forces, gravity and any
/// disturbance. `trajectory` holds consecutive simulator states at spacing
/// dt (state k+1 = step(state k)).
CheckResult check_newton_euler(const RobotModel& model,
                               const std::vector<SimState>& trajectory,
                               double dt, const Vec3& gravity, int window);

/// Walking-like rollout of the locomotion environment driven by an
/// open-loop stepping pattern; returns every 1 kHz simulator state.
std::vector<SimState> stepping_rollout(const RobotModel& model,
                                       double duration, std::uint64_t seed);

std::vector<CheckResult> run_dynamics_suite(const RobotModel& model,
                                            std::uint64_t seed);

}  // namespace armswing::validation
