#include "armswing/toy_envs.hpp"

#include <algorithm>
#include <cmath>

namespace armswing {

PendulumConfig PendulumConfig::from_config(const Config& c) {
  PendulumConfig p;
  p.mass = c.get_double("pendulum.mass", p.mass);
  p.length = c.get_double("pendulum.length", p.length);
  p.damping = c.get_double("pendulum.damping", p.damping);
  p.max_torque = c.get_double("pendulum.max_torque", p.max_torque);
  p.dt = c.get_double("pendulum.dt", p.dt);
  p.substeps = c.get_int("pendulum.substeps", p.substeps);
  p.episode_steps = c.get_int("pendulum.episode_steps", p.episode_steps);
  p.init_angle = c.get_double("pendulum.init_angle", p.init_angle);
  p.init_rate = c.get_double("pendulum.init_rate", p.init_rate);
  p.fall_angle = c.get_double("pendulum.fall_angle", p.fall_angle);
  if (!(p.mass > 0 && p.length > 0 && p.dt > 0) || p.substeps < 1 || p.episode_steps < 1) {
    throw ConfigError("pendulum mass, length, dt, substeps and episode_steps must be positive");
  }
  return p;
}

PendulumBalanceEnv::PendulumBalanceEnv(PendulumConfig cfg) : cfg_(cfg) {}

double PendulumBalanceEnv::reward(double theta, double omega, double action) {
  return std::exp(-theta * theta / 0.05 - 0.01 * omega * omega) - 0.001 * action * action;
}

void PendulumBalanceEnv::set_state(double theta, double omega) {
  theta_ = theta;
  omega_ = omega;
}

Transition PendulumBalanceEnv::make(double reward, bool terminated, bool truncated) const {
  Transition t;
  const VecX o = Eigen::Vector2d(theta_, omega_);
  t.obs = {o};
  t.global_obs = o;
  t.rewards = {reward};
  t.components = {{{"balance", reward}}};
  t.tracking = reward;
  t.terminated = terminated;
  t.truncated = truncated;
  return t;
}

Transition PendulumBalanceEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  theta_ = cfg_.init_angle * u(rng_);
  omega_ = cfg_.init_rate * u(rng_);
  steps_ = 0;
  return make(0.0, false, false);
}

Transition PendulumBalanceEnv::step(const std::vector<VecX>& actions) {
  const double a = std::clamp(actions.at(0)[0], -1.0, 1.0);
  const double u = cfg_.max_torque * a;
  const double inertia = cfg_.mass * cfg_.length * cfg_.length;
  const double h = cfg_.dt / cfg_.substeps;
  for (int k = 0; k < cfg_.substeps; ++k) {
    const double acc = cfg_.gravity / cfg_.length * std::sin(theta_) +
                       (u - cfg_.damping * omega_) / inertia;
    omega_ += h * acc;
    theta_ += h * omega_;
  }
  ++steps_;
  const bool fallen = !(std::abs(theta_) <= cfg_.fall_angle);
  const double r = fallen ? 0.0 : reward(theta_, omega_, a);
  return make(r, fallen, !fallen && steps_ >= cfg_.episode_steps);
}

double pendulum_pd_action(double theta, double omega, const PendulumConfig& cfg) {
  const double kp = 3.0 * cfg.mass * cfg.gravity * cfg.length;
  const double kd = 2.0 * std::sqrt(kp * cfg.mass * cfg.length * cfg.length);
  return std::clamp((-kp * theta - kd * omega) / cfg.max_torque, -1.0, 1.0);
}

double pendulum_pd_return(const PendulumConfig& cfg, int episodes, std::uint64_t seed) {
  PendulumBalanceEnv env(cfg);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Transition t = env.reset(seed + static_cast<std::uint64_t>(e));
    while (!t.terminated && !t.truncated) {
      t = env.step({VecX::Constant(1, pendulum_pd_action(env.angle(), env.rate(), cfg))});
      total += t.rewards[0];
    }
  }
  return total / std::max(1, episodes);
}

ToyCoopConfig ToyCoopConfig::from_config(const Config& c) {
  ToyCoopConfig t;
  t.cart_mass = c.get_double("toy.cart_mass", t.cart_mass);
  t.link_mass = c.get_double("toy.link_mass", t.link_mass);
  t.link_length = c.get_double("toy.link_length", t.link_length);
  t.cart_damping = c.get_double("toy.cart_damping", t.cart_damping);
  t.joint_damping = c.get_double("toy.joint_damping", t.joint_damping);
  t.max_force = c.get_double("toy.max_force", t.max_force);
  t.max_torque = c.get_double("toy.max_torque", t.max_torque);
  t.dt = c.get_double("toy.dt", t.dt);
  t.substeps = c.get_int("toy.substeps", t.substeps);
  t.episode_steps = c.get_int("toy.episode_steps", t.episode_steps);
  t.command_period = c.get_double("toy.command_period", t.command_period);
  t.command_range = c.get_double("toy.command_range", t.command_range);
  t.sigma = c.get_double("toy.sigma", t.sigma);
  t.cam_scale = c.get_double("toy.cam_scale", t.cam_scale);
  t.init_noise = c.get_double("toy.init_noise", t.init_noise);
  t.w_cam = c.get_double("toy.w_cam", t.w_cam);
  t.w_dcam = c.get_double("toy.w_dcam", t.w_dcam);
  t.w_arm_effort = c.get_double("toy.w_arm_effort", t.w_arm_effort);
  t.w_vt = c.get_double("toy.w_vt", t.w_vt);
  t.w_cart_effort = c.get_double("toy.w_cart_effort", t.w_cart_effort);
  if (!(t.cart_mass > 0 && t.link_mass > 0 && t.link_length > 0 && t.dt > 0 && t.sigma > 0 &&
        t.cam_scale > 0 && t.command_period > 0) ||
      t.substeps < 1 || t.episode_steps < 1) {
    throw ConfigError("toy masses, lengths, dt, sigma, cam_scale, command_period, substeps and "
                      "episode_steps must be positive");
  }
  return t;
}

ToyCoopEnv::ToyCoopEnv(ToyCoopConfig cfg) : cfg_(cfg) {}

void ToyCoopEnv::set_state(const Eigen::Vector3d& q, const Eigen::Vector3d& qd) {
  q_ = q;
  qd_ = qd;
}

namespace {

struct ArmJacobians {
  Eigen::Matrix<double, 2, 3> j1, j2;
  Eigen::Vector2d p1, p2;
};

ArmJacobians arm_jacobians(const Eigen::Vector3d& q, double l) {
  const double s1 = std::sin(q[1]), c1 = std::cos(q[1]);
  const double s12 = std::sin(q[1] + q[2]), c12 = std::cos(q[1] + q[2]);
  ArmJacobians j;
  j.p1 = {q[0] + l * s1, -l * c1};
  j.p2 = j.p1 + Eigen::Vector2d(l * s12, -l * c12);
  j.j1 << 1, l * c1, 0, 0, l * s1, 0;
  j.j2 << 1, l * c1 + l * c12, l * c12, 0, l * s1 + l * s12, l * s12;
  return j;
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

Eigen::Matrix3d ToyCoopEnv::mass_matrix() const {
  const ArmJacobians j = arm_jacobians(q_, cfg_.link_length);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = cfg_.cart_mass;
  m += cfg_.link_mass * (j.j1.transpose() * j.j1 + j.j2.transpose() * j.j2);
  return m;
}

Eigen::Vector3d ToyCoopEnv::bias_forces() const {
  const double l = cfg_.link_length;
  const ArmJacobians j = arm_jacobians(q_, l);
  const double w1 = qd_[1], w12 = qd_[1] + qd_[2];
  const Eigen::Vector2d a1(-l * std::sin(q_[1]) * w1 * w1, l * std::cos(q_[1]) * w1 * w1);
  const Eigen::Vector2d a2 =
      a1 + Eigen::Vector2d(-l * std::sin(q_[1] + q_[2]) * w12 * w12,
                           l * std::cos(q_[1] + q_[2]) * w12 * w12);
  const Eigen::Vector2d g(0.0, cfg_.gravity);
  return cfg_.link_mass * (j.j1.transpose() * (a1 + g) + j.j2.transpose() * (a2 + g));
}

double ToyCoopEnv::angular_momentum() const {
  const ArmJacobians j = arm_jacobians(q_, cfg_.link_length);
  const double mc = cfg_.cart_mass, m = cfg_.link_mass;
  const Eigen::Vector2d pc(q_[0], 0.0), vc(qd_[0], 0.0);
  const Eigen::Vector2d v1 = j.j1 * qd_, v2 = j.j2 * qd_;
  const Eigen::Vector2d com = (mc * pc + m * j.p1 + m * j.p2) / (mc + 2 * m);
  return mc * cross2(pc - com, vc) + m * cross2(j.p1 - com, v1) + m * cross2(j.p2 - com, v2);
}

double ToyCoopEnv::kinetic_energy() const { return 0.5 * qd_.dot(mass_matrix() * qd_); }

double ToyCoopEnv::potential_energy() const {
  const ArmJacobians j = arm_jacobians(q_, cfg_.link_length);
  return cfg_.link_mass * cfg_.gravity * (j.p1.y() + j.p2.y());
}

void ToyCoopEnv::integrate(const Eigen::Vector3d& tau, double h) {
  const Eigen::Vector3d qdd = mass_matrix().ldlt().solve(tau - bias_forces());
  qd_ += h * qdd;
  q_ += h * qd_;
}

Transition ToyCoopEnv::make(const RewardComponents& arm, const RewardComponents& cart,
                            bool truncated) const {
  const double k = angular_momentum();
  Transition t;
  VecX a(8), c(4), g(10);
  a << qd_[0], k, q_[1], q_[2], qd_[1], qd_[2], prev_arm_;
  c << qd_[0], k, cmd_, prev_cart_;
  g << qd_[0], k, cmd_, q_[1], q_[2], qd_[1], qd_[2], prev_arm_, prev_cart_;
  const bool bad = !(a.allFinite() && c.allFinite());
  t.obs = {bad ? VecX(VecX::Zero(8)) : a, bad ? VecX(VecX::Zero(4)) : c};
  t.global_obs = bad ? VecX(VecX::Zero(10)) : g;
  t.components = {arm, cart};
  double ra = 0.0, rc = 0.0;
  const double wa[] = {cfg_.w_cam, cfg_.w_dcam, -cfg_.w_arm_effort};
  const double wc[] = {cfg_.w_vt, -cfg_.w_cart_effort};
  for (size_t i = 0; i < arm.size(); ++i) ra += wa[i] * arm[i].second;
  for (size_t i = 0; i < cart.size(); ++i) rc += wc[i] * cart[i].second;
  t.rewards = {bad ? 0.0 : ra, bad ? 0.0 : rc};
  t.tracking = cart.empty() || bad ? 0.0 : cart[0].second;
  t.terminated = bad;
  t.truncated = !bad && truncated;
  return t;
}

Transition ToyCoopEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  q_ = {0.0, cfg_.init_noise * u(rng_), cfg_.init_noise * u(rng_)};
  qd_ = {0.0, cfg_.init_noise * u(rng_), cfg_.init_noise * u(rng_)};
  prev_arm_.setZero();
  prev_cart_ = 0.0;
  cmd_ = cfg_.command_range * u(rng_);
  steps_ = 0;
  return make({{"cam", 0.0}, {"dcam", 0.0}, {"effort", 0.0}}, {{"vt", 0.0}, {"effort", 0.0}},
              false);
}

Transition ToyCoopEnv::step(const std::vector<VecX>& actions) {
  const Eigen::Vector2d arm = actions.at(0).head<2>().cwiseMax(-1.0).cwiseMin(1.0);
  const double cart = std::clamp(actions.at(1)[0], -1.0, 1.0);
  const double k0 = angular_momentum();
  const double h = cfg_.dt / cfg_.substeps;
  for (int s = 0; s < cfg_.substeps; ++s) {
    const Eigen::Vector3d tau(cfg_.max_force * cart - cfg_.cart_damping * qd_[0],
                              cfg_.max_torque * arm[0] - cfg_.joint_damping * qd_[1],
                              cfg_.max_torque * arm[1] - cfg_.joint_damping * qd_[2]);
    integrate(tau, h);
  }
  prev_arm_ = arm;
  prev_cart_ = cart;
  ++steps_;

  const double k = angular_momentum();
  const double kdot = (k - k0) / cfg_.dt;
  const double e = (cmd_ - qd_[0]) / (1.0 + std::abs(cmd_));
  const double kn = k / cfg_.cam_scale;
  const RewardComponents ra{{"cam", std::exp(-kn * kn / cfg_.sigma)},
                            {"dcam", -std::min(0.0, k * kdot)},
                            {"effort", arm.squaredNorm()}};
  const RewardComponents rc{{"vt", std::exp(-e * e / cfg_.sigma)}, {"effort", cart * cart}};

  const int period = std::max(1, static_cast<int>(std::lround(cfg_.command_period / cfg_.dt)));
  if (steps_ % period == 0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    cmd_ = cfg_.command_range * u(rng_);
  }
  return make(ra, rc, steps_ >= cfg_.episode_steps);
}

}  // namespace armswing
