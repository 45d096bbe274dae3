#include "armswing/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace armswing::validation {

namespace {

struct WorldBodyMotion {
  Vec3 omega;  // world angular velocity
  Vec3 v;      // world velocity of the body origin
};

std::vector<WorldBodyMotion> world_motion(const RobotModel& model,
                                          const Kinematics& kin,
                                          const GeneralizedState& s) {
  std::vector<WorldBodyMotion> out(static_cast<size_t>(model.num_bodies()));
  for (int i = 0; i < model.num_bodies(); ++i) {
    const Body& b = model.body(i);
    const size_t u = static_cast<size_t>(i);
    if (b.joint.type == JointType::floating) {
      if (model.fixed_base()) {
        out[u] = {Vec3::Zero(), Vec3::Zero()};
      } else {
        out[u] = {kin.R[u] * s.qd.segment<3>(0), kin.R[u] * s.qd.segment<3>(3)};
      }
      continue;
    }
    const size_t par = static_cast<size_t>(b.joint.parent);
    const Vec3 axis_world = kin.R[u] * b.joint.axis;
    out[u].omega = out[par].omega + axis_world * s.qd[b.v_index];
    out[u].v = out[par].v + out[par].omega.cross(kin.p[u] - kin.p[par]);
  }
  return out;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

GeneralizedState random_state(const RobotModel& model, std::mt19937_64& rng,
                              double vmax) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  GeneralizedState s = GeneralizedState::neutral(model);
  for (int i = 0; i < 3; ++i) s.q[i] = unit(rng);
  Eigen::Quaterniond quat(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  s.set_base_quaternion(quat.normalized());
  for (int j = 0; j < model.n_joints(); ++j) {
    const auto& lim = model.joint_body(j).joint.position_limits;
    std::uniform_real_distribution<double> in_lim(lim[0], lim[1]);
    s.q[7 + j] = in_lim(rng);
  }
  for (int i = 0; i < model.nv(); ++i) s.qd[i] = vmax * unit(rng);
  if (model.fixed_base()) {
    s.q.head<7>() << 0, 0, 0, 1, 0, 0, 0;
    s.qd.head<6>().setZero();
  }
  return s;
}

Vec3 brute_force_com(const RobotModel& model, const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state.q);
  Vec3 sum = Vec3::Zero();
  double mass = 0.0;
  for (int i = 0; i < model.num_bodies(); ++i) {
    const Body& b = model.body(i);
    const size_t u = static_cast<size_t>(i);
    sum += b.mass * (kin.p[u] + kin.R[u] * b.com);
    mass += b.mass;
  }
  return mass > 0.0 ? Vec3(sum / mass) : Vec3::Zero();
}

Vec6 brute_force_momentum(const RobotModel& model,
                          const GeneralizedState& state) {
  const Kinematics kin = forward_kinematics(model, state.q);
  const auto motion = world_motion(model, kin, state);
  const Vec3 G = brute_force_com(model, state);
  Vec3 k = Vec3::Zero();
  Vec3 l = Vec3::Zero();
  for (int i = 0; i < model.num_bodies(); ++i) {
    const Body& b = model.body(i);
    const size_t u = static_cast<size_t>(i);
    const Vec3 r = kin.R[u] * b.com;
    const Vec3 c = kin.p[u] + r;
    const Vec3 c_dot = motion[u].v + motion[u].omega.cross(r);
    const Mat3 I_world = kin.R[u] * b.inertia_about_com * kin.R[u].transpose();
    k += I_world * motion[u].omega + b.mass * (c - G).cross(c_dot);
    l += b.mass * c_dot;
  }
  Vec6 h;
  h << k, l;
  return h;
}

Vec6 finite_difference_bias(const RobotModel& model,
                            const GeneralizedState& state, double step) {
  GeneralizedState plus = state, minus = state;
  plus.q = integrate_configuration(model, state.q, state.qd, step);
  minus.q = integrate_configuration(model, state.q, state.qd, -step);
  const Vec6 hp = compute_cmm(model, plus) * state.qd;
  const Vec6 hm = compute_cmm(model, minus) * state.qd;
  return (hp - hm) / (2.0 * step);
}

Vec6 column_slice_reference(const Matrix6X& cmm, const CommandVel& cmd) {
  return cmm.middleCols<3>(2) * Vec3(cmd.wz, cmd.vx, cmd.vy);
}

CheckResult check_cmm_brute_force(const RobotModel& model, int states,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int n = 0; n < states; ++n) {
    const GeneralizedState s = random_state(model, rng);
    const Vec6 oracle = brute_force_momentum(model, s);
    const Vec6 h = compute_cmm(model, s) * s.qd;
    worst = std::max(worst, (h - oracle).norm() / std::max(oracle.norm(), 1e-12));
  }
  return {"cmm brute-force equivalence", worst < 1e-9, worst, 1e-9,
          std::to_string(states) + " random states, relative error"};
}

CheckResult check_decomposition(const RobotModel& model, int states,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int n = 0; n < states; ++n) {
    const GeneralizedState s = random_state(model, rng);
    const Matrix6X A = compute_cmm(model, s);
    const MomentumDecomposition d = decompose_momentum(model, A, s.qd);
    const Vec6 h = A * s.qd;
    worst = std::max(worst,
                     (d.base + d.legs + d.arms - h).cwiseAbs().maxCoeff());
  }
  return {"limb decomposition additivity", worst < 1e-10, worst, 1e-10,
          std::to_string(states) + " random states, max abs component"};
}

CheckResult check_momentum_conservation(const RobotModel& model,
                                        double duration) {
  SimOptions opts;
  opts.gravity = Vec3::Zero();
  const Simulator sim(model, opts);
  GeneralizedState g = GeneralizedState::neutral(model);
  g.q[2] = 50.0;  // far above the ground
  g.joint_positions() = model.q_ref();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < model.nv(); ++i) g.qd[i] = 0.5 * unit(rng);
  if (model.fixed_base()) g.qd.head<6>().setZero();

  SimState s = sim.make_state(g);
  const Vec6 h0 = compute_cmm(model, s.gen) * s.gen.qd;
  const double dt = 0.001;
  const int steps = static_cast<int>(std::lround(duration / dt));
  double worst = 0.0;
  VecX tau(model.n_joints());
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    for (int j = 0; j < model.n_joints(); ++j) {
      tau[j] = 2.0 * std::sin(2.0 * M_PI * (1.0 + 0.3 * j) * t);
    }
    s = sim.step(s, tau, dt);
    const Vec6 h = compute_cmm(model, s.gen) * s.gen.qd;
    worst = std::max(worst, (h - h0).cwiseAbs().maxCoeff());
  }
  const bool ok = worst < 1e-8 && !s.invalid;
  return {"momentum conservation", ok, worst, 1e-8,
          "gravity-free, contact-free rollout with internal torques"};
}

CheckResult check_bias_finite_difference(const RobotModel& model, int states,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int n = 0; n < states; ++n) {
    const GeneralizedState s = random_state(model, rng);
    const Vec6 fd = finite_difference_bias(model, s, 1e-6);
    worst = std::max(worst,
                     (fd - momentum_rate_bias(model, s)).cwiseAbs().maxCoeff());
  }
  return {"momentum rate bias vs finite difference", worst < 1e-4, worst, 1e-4,
          std::to_string(states) + " random states, step 1e-6"};
}

std::vector<CheckResult> check_reference_momentum(const RobotModel& model,
                                                  int states,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double zero_worst = 0.0;
  double slice_worst = 0.0;
  for (int n = 0; n < states; ++n) {
    const GeneralizedState s = random_state(model, rng);
    const Matrix6X A = compute_cmm(model, s);
    zero_worst = std::max(
        zero_worst, reference_momentum(model, s, {}).cwiseAbs().maxCoeff());
    const CommandVel cmd{unit(rng), unit(rng), unit(rng)};
    slice_worst = std::max(slice_worst,
                           (reference_momentum(model, s, cmd) -
                            column_slice_reference(A, cmd))
                               .cwiseAbs()
                               .maxCoeff());
  }
  return {
      {"reference momentum, zero command", zero_worst == 0.0, zero_worst, 0.0,
       "must be exactly zero"},
      {"reference momentum, column-slice oracle", slice_worst < 1e-12,
       slice_worst, 1e-12, std::to_string(states) + " random states"},
  };
}

CheckResult check_newton_euler(const RobotModel& model,
                               const std::vector<SimState>& trajectory,
                               double dt, const Vec3& gravity, int window) {
  const auto& points = model.contact_points();
  const size_t n = trajectory.size();
  if (n < static_cast<size_t>(window) + 1) {
    return {"newton-euler consistency", false, 0.0, 0.02,
            "trajectory too short"};
  }
  std::vector<Vec6> h(n), wrench(n, Vec6::Zero());
  double contact_steps = 0;
  for (size_t k = 0; k < n; ++k) {
    const SimState& s = trajectory[k];
    h[k] = compute_cmm(model, s.gen) * s.gen.qd;
    if (k + 1 >= n) continue;
    const Vec3 r = brute_force_com(model, s.gen);
    // Forces applied over step k are recorded in state k + 1.
    const SimState& next = trajectory[k + 1];
    Vec3 moment = Vec3::Zero();
    Vec3 force = model.total_mass() * gravity;
    bool touching = false;
    for (size_t c = 0; c < points.size(); ++c) {
      const Vec3& f = next.contact_forces[c];
      moment += (next.contact_positions[c] - r).cross(f);
      force += f;
      touching = touching || f.z() > 0.0;
    }
    if (s.external_wrench && s.time < s.external_wrench->expiry - 1e-9) {
      const SpatialForce& w = s.external_wrench->wrench;
      moment += w.moment + (s.gen.base_position() - r).cross(w.force);
      force += w.force;
    }
    contact_steps += touching ? 1 : 0;
    wrench[k] << moment, force;
  }

  double worst = 0.0;
  for (size_t k = 0; k + static_cast<size_t>(window) < n; k += static_cast<size_t>(window)) {
    const Vec6 fd = (h[k + static_cast<size_t>(window)] - h[k]) / (window * dt);
    Vec6 mean = Vec6::Zero();
    for (int i = 0; i < window; ++i) mean += wrench[k + static_cast<size_t>(i)];
    mean /= window;
    worst = std::max(worst, (fd - mean).norm() / std::max(mean.norm(), 1e-9));
  }
  std::ostringstream detail;
  detail << n - 1 << " steps, " << static_cast<int>(contact_steps)
         << " with ground contact, window " << window;
  return {"newton-euler consistency", worst < 0.02 && contact_steps > 0, worst,
          0.02, detail.str()};
}

std::vector<SimState> stepping_rollout(const RobotModel& model,
                                       double duration, std::uint64_t seed) {
  const Simulator sim(model);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  GeneralizedState g = GeneralizedState::neutral(model);
  g.joint_positions() = model.q_ref();
  for (int j = 0; j < model.n_joints(); ++j) g.q[7 + j] += 0.02 * unit(rng);
  // Drop from just above the ground so the soles start in light contact.
  const Kinematics kin = forward_kinematics(model, g.q);
  double lowest = 0.0;
  for (const auto& c : model.contact_points()) {
    lowest = std::min(lowest, kin.point_position(c.body, c.offset).z());
  }
  g.q[2] = -lowest + 0.005;

  std::vector<SimState> traj;
  SimState s = sim.make_state(g);
  traj.push_back(s);
  const double dt = 0.001;
  const double period = 0.8;
  VecX tau(model.n_joints());
  const int steps = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k < steps && !s.invalid; ++k) {
    const double phase = 2.0 * M_PI * s.time / period;
    VecX target = model.q_ref();
    for (int j = 0; j < model.n_joints(); ++j) {
      const Body& b = model.joint_body(j);
      const double side = b.joint.name.rfind("left", 0) == 0 ? 1.0 : -1.0;
      const double wave = side * std::sin(phase);
      if (b.limb == Limb::leg) {
        if (b.joint.name.find("hip_pitch") != std::string::npos) {
          target[j] += 0.25 * wave;
        } else if (b.joint.name.find("knee") != std::string::npos) {
          target[j] += 0.3 * std::max(0.0, wave);
        }
      } else if (b.joint.name.find("shoulder_pitch") != std::string::npos) {
        target[j] -= 0.4 * wave;
      }
    }
    const VecX q = s.gen.joint_positions();
    const VecX qd = s.gen.joint_velocities();
    tau = 60.0 * (target - q) - 2.0 * qd;
    s = sim.step(s, tau, dt);
    traj.push_back(s);
  }
  return traj;
}

std::vector<CheckResult> run_dynamics_suite(const RobotModel& model,
                                            std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(check_cmm_brute_force(model, 1000, seed));
  out.push_back(check_decomposition(model, 1000, seed + 1));
  out.push_back(check_momentum_conservation(model, 1.0));
  const auto traj = stepping_rollout(model, 2.0, seed + 2);
  out.push_back(check_newton_euler(model, traj, 0.001, kDefaultGravity, 10));
  out.push_back(check_bias_finite_difference(model, 100, seed + 3));
  for (auto& r : check_reference_momentum(model, 100, seed + 4)) {
    out.push_back(std::move(r));
  }
  for (auto& r : out) {
    if (r.detail.empty()) r.detail = fmt_num(r.measured);
  }
  return out;
}

}  // namespace armswing::validation
