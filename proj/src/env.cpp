#include "armswing/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace armswing {

namespace {

constexpr double kTimeEps = 1e-9;

std::array<double, 2> read_range(const Config& cfg, const std::string& key,
                                 const std::array<double, 2>& fallback) {
  const auto v = cfg.get_doubles(key, {fallback[0], fallback[1]});
  if (v.size() != 2 || !(v[0] <= v[1])) {
    throw ConfigError("field '" + key + "' must be 'lo, hi' with lo <= hi");
  }
  return {v[0], v[1]};
}

void read_weights(const Config& cfg, const std::string& prefix,
                  RewardComponents& weights) {
  for (auto& [name, w] : weights) w = cfg.get_double(prefix + name, w);
}

void require_positive(double v, const std::string& key) {
  if (!(v > 0.0)) throw ConfigError("field '" + key + "' must be positive");
}

double sum_sq(const VecX& v) { return v.squaredNorm(); }

}  // namespace

const char* to_string(AgentKind a) {
  return a == AgentKind::arm ? "arm" : "leg";
}

int AgentSpec::obs_dim() const {
  int n = 0;
  for (const auto& b : obs_layout) n += b.dim;
  return n;
}

double AgentSpec::weight(const std::string& name) const {
  for (const auto& [k, w] : reward_weights) {
    if (k == name) return w;
  }
  return 0.0;
}

int AgentSpec::block_offset(const std::string& name) const {
  int at = 0;
  for (const auto& b : obs_layout) {
    if (b.name == name) return at;
    at += b.dim;
  }
  throw std::out_of_range("no observation block '" + name + "'");
}

EnvConfig EnvConfig::from_config(const Config& cfg) {
  EnvConfig e;
  e.model_path = cfg.get_string("env.model", "");
  e.dt = cfg.get_double("env.dt", e.dt);
  e.decimation = cfg.get_int("env.decimation", e.decimation);
  e.sigma = cfg.get_double("env.sigma", e.sigma);
  e.gait_period = cfg.get_double("env.gait_period", e.gait_period);
  e.episode_length = cfg.get_double("env.episode_length", e.episode_length);
  e.command_resample = cfg.get_double("env.command_resample", e.command_resample);
  e.action_scale = cfg.get_double("env.action_scale", e.action_scale);
  e.kp_leg = cfg.get_double("env.kp_leg", e.kp_leg);
  e.kd_leg = cfg.get_double("env.kd_leg", e.kd_leg);
  e.kp_arm = cfg.get_double("env.kp_arm", e.kp_arm);
  e.kd_arm = cfg.get_double("env.kd_arm", e.kd_arm);
  e.reset_noise = cfg.get_double("env.reset_noise", e.reset_noise);
  e.min_height_ratio = cfg.get_double("env.min_height_ratio", e.min_height_ratio);
  e.max_tilt_deg = cfg.get_double("env.max_tilt_deg", e.max_tilt_deg);
  e.joint_limit_margin =
      cfg.get_double("env.joint_limit_margin", e.joint_limit_margin);
  e.commands.vx = read_range(cfg, "env.cmd_vx", e.commands.vx);
  e.commands.vy = read_range(cfg, "env.cmd_vy", e.commands.vy);
  e.commands.wz = read_range(cfg, "env.cmd_wz", e.commands.wz);
  e.commands.zero_fraction =
      cfg.get_double("env.cmd_zero_fraction", e.commands.zero_fraction);

  const std::string mode = cfg.get_string("env.arm_mode", "learned");
  if (mode == "learned") {
    e.arm_mode = ArmMode::learned;
  } else if (mode == "fixed") {
    e.arm_mode = ArmMode::fixed;
  } else {
    throw ConfigError("field 'env.arm_mode' must be learned or fixed, got '" +
                      mode + "'");
  }
  read_weights(cfg, "reward.arm.", e.arm_weights);
  read_weights(cfg, "reward.leg.", e.leg_weights);

  for (const auto& text : cfg.get_all("env.disturbance")) {
    std::vector<double> v;
    std::istringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        v.clear();
        break;
      }
    }
    if (v.size() != 5 || !(v[4] > 0.0)) {
      throw ConfigError(
          "field 'env.disturbance' must be 'time, tx, ty, tz, duration' with "
          "duration > 0, got '" + text + "'");
    }
    e.disturbances.push_back({v[0], Vec3(v[1], v[2], v[3]), v[4]});
  }

  require_positive(e.dt, "env.dt");
  if (e.decimation < 1) throw ConfigError("field 'env.decimation' must be >= 1");
  require_positive(e.sigma, "env.sigma");
  require_positive(e.gait_period, "env.gait_period");
  require_positive(e.episode_length, "env.episode_length");
  require_positive(e.command_resample, "env.command_resample");
  if (e.commands.zero_fraction < 0.0 || e.commands.zero_fraction > 1.0) {
    throw ConfigError("field 'env.cmd_zero_fraction' must be in [0, 1]");
  }
  return e;
}

void GaitClock::advance(double dt) {
  phase += dt / period;
  phase -= std::floor(phase);
}

double GaitClock::contact_schedule() const {
  return std::cos(2.0 * M_PI * phase);
}

Vec3 mixed_frame_cam(const Vec3& k_world, const Mat3& base_rotation) {
  const Vec3 k_base = base_rotation.transpose() * k_world;
  return {k_base.x(), k_base.y(), k_world.z()};
}

double tracking_reward(const VecX& reference, const VecX& actual,
                       double sigma) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    const double e = (reference[i] - actual[i]) / (1.0 + std::abs(reference[i]));
    sq += e * e;
  }
  return std::exp(-sq / sigma);
}

double cam_reward(double kz_ref, double kz, double sigma) {
  return tracking_reward(VecX::Constant(1, kz_ref), VecX::Constant(1, kz), sigma);
}

double cam_damping_reward(const Vec2& k_xy, const Vec2& kdot_xy) {
  return -std::min(0.0, k_xy.dot(kdot_xy));
}

double velocity_tracking_reward(const CommandVel& cmd, const Vec3& actual,
                                double sigma) {
  return tracking_reward(cmd.as_vector(), actual, sigma);
}

double contact_schedule_reward(bool right_contact, bool left_contact,
                               double phi_contact) {
  return ((right_contact ? 1.0 : 0.0) - (left_contact ? 1.0 : 0.0)) *
         phi_contact;
}

double joint_limit_penalty(const RobotModel& model, const VecX& joint_q,
                           const std::vector<int>& joints, double margin) {
  double p = 0.0;
  for (int j : joints) {
    const auto& lim = model.joint_body(j).joint.position_limits;
    const double centre = 0.5 * (lim[0] + lim[1]);
    const double half = 0.5 * (lim[1] - lim[0]);
    const double excess = std::abs(joint_q[j] - centre) - margin * half;
    if (excess > 0.0) p += excess * excess;
  }
  return p;
}

CommandVel sample_command(std::mt19937_64& rng, const CommandRanges& r) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto draw = [&](const std::array<double, 2>& range) {
    return range[0] + (range[1] - range[0]) * u01(rng);
  };
  CommandVel c{draw(r.vx), draw(r.vy), draw(r.wz)};
  if (u01(rng) < r.zero_fraction) c = {};
  return c;
}

double base_tilt_deg(const Mat3& R) {
  const double c = std::clamp(R(2, 2), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

namespace {

std::vector<ObsBlock> base_blocks() {
  return {{"base_height", 1},  {"base_heading", 1}, {"base_lin_vel", 3},
          {"base_ang_vel", 3}, {"projected_gravity", 3}};
}

}  // namespace

AgentSpec make_arm_spec(int n_arm, const EnvConfig& cfg) {
  AgentSpec s;
  s.agent = AgentKind::arm;
  s.obs_layout = base_blocks();
  s.obs_layout.insert(s.obs_layout.end(), {{"q_arm", n_arm},
                                           {"qd_arm", n_arm},
                                           {"prev_action_arm", n_arm},
                                           {"cam", 3},
                                           {"cam_target", 3}});
  s.action_dim = n_arm;
  s.reward_weights = cfg.arm_weights;
  s.sigma_track = cfg.sigma;
  return s;
}

AgentSpec make_leg_spec(int n_leg, const EnvConfig& cfg) {
  AgentSpec s;
  s.agent = AgentKind::leg;
  s.obs_layout = base_blocks();
  s.obs_layout.insert(s.obs_layout.end(), {{"cam", 3},
                                           {"command", 3},
                                           {"phase", 2},
                                           {"q_leg", n_leg},
                                           {"qd_leg", n_leg},
                                           {"prev_action_leg", n_leg}});
  s.action_dim = n_leg;
  s.reward_weights = cfg.leg_weights;
  s.sigma_track = cfg.sigma;
  return s;
}

std::vector<ObsBlock> global_obs_layout(int n_leg, int n_arm) {
  std::vector<ObsBlock> l = base_blocks();
  l.insert(l.end(), {{"command", 3},
                     {"phase", 2},
                     {"cam", 3},
                     {"cam_target", 3},
                     {"q_leg", n_leg},
                     {"q_arm", n_arm},
                     {"qd_leg", n_leg},
                     {"qd_arm", n_arm},
                     {"prev_action_leg", n_leg},
                     {"prev_action_arm", n_arm}});
  return l;
}

int global_obs_dim(int n_leg, int n_arm) {
  int n = 0;
  for (const auto& b : global_obs_layout(n_leg, n_arm)) n += b.dim;
  return n;
}

LocomotionEnv::LocomotionEnv(std::shared_ptr<const RobotModel> model,
                             EnvConfig cfg)
    : model_(std::move(model)),
      cfg_(std::move(cfg)),
      sim_(*model_),
      arm_spec_(make_arm_spec(model_->n_arm(), cfg_)),
      leg_spec_(make_leg_spec(model_->n_leg(), cfg_)) {
  for (int j = 0; j < model_->n_joints(); ++j) {
    (model_->joint_body(j).limb == Limb::leg ? leg_joints_ : arm_joints_)
        .push_back(j);
  }
  if (model_->contact_points().empty()) {
    throw ModelError("locomotion needs toe and heel contact points");
  }
  prev_arm_ = last_arm_ = VecX::Zero(model_->n_arm());
  prev_leg_ = last_leg_ = VecX::Zero(model_->n_leg());
  clock_.period = cfg_.gait_period;

  GeneralizedState g = GeneralizedState::neutral(*model_);
  g.joint_positions() = model_->q_ref();
  const Kinematics kin = forward_kinematics(*model_, g.q);
  double lowest = 0.0;
  for (const auto& c : model_->contact_points()) {
    lowest = std::min(lowest, kin.point_position(c.body, c.offset).z());
  }
  nominal_height_ = -lowest;
  state_ = sim_.make_state(g);
}

void LocomotionEnv::set_state(const SimState& state) {
  state_ = state;
  cq_ = compute_centroidal(*model_, state_.gen);
  ref_ = reference_momentum(cq_.cmm, cmd_);
  prev_k_ = cq_.k();
}

void LocomotionEnv::schedule_disturbance(const Disturbance& d) {
  pending_.push_back(d);
}

LocomotionStep LocomotionEnv::reset_full(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  GeneralizedState g = GeneralizedState::neutral(*model_);
  g.joint_positions() = model_->q_ref();
  if (cfg_.reset_noise > 0.0) {
    for (int j = 0; j < model_->n_joints(); ++j) {
      const auto& lim = model_->joint_body(j).joint.position_limits;
      g.q[7 + j] = std::clamp(g.q[7 + j] + cfg_.reset_noise * noise(rng_),
                              lim[0], lim[1]);
    }
  }
  const Kinematics kin = forward_kinematics(*model_, g.q);
  double lowest = 0.0;
  for (const auto& c : model_->contact_points()) {
    lowest = std::min(lowest, kin.point_position(c.body, c.offset).z());
  }
  g.q[2] = -lowest;

  state_ = sim_.make_state(g);
  cmd_ = sample_command(rng_, cfg_.commands);
  next_resample_ = cfg_.command_resample;
  clock_ = GaitClock{0.0, cfg_.gait_period};
  prev_arm_.setZero();
  prev_leg_.setZero();
  last_arm_.setZero();
  last_leg_.setZero();
  pending_ = cfg_.disturbances;
  cq_ = compute_centroidal(*model_, state_.gen);
  ref_ = reference_momentum(cq_.cmm, cmd_);
  prev_k_ = cq_.k();
  return make_step(false, 0.0, 0.0);
}

LocomotionStep LocomotionEnv::act(const VecX& arm_action,
                                  const VecX& leg_action) {
  const RobotModel& m = *model_;
  prev_arm_ = last_arm_;
  prev_leg_ = last_leg_;
  last_arm_ = cfg_.arm_mode == ArmMode::fixed
                  ? VecX::Zero(m.n_arm())
                  : VecX(arm_action.cwiseMax(-1.0).cwiseMin(1.0));
  last_leg_ = leg_action.cwiseMax(-1.0).cwiseMin(1.0);

  VecX q_des = m.q_ref();
  VecX kp(m.n_joints()), kd(m.n_joints());
  for (size_t i = 0; i < leg_joints_.size(); ++i) {
    const int j = leg_joints_[i];
    q_des[j] += cfg_.action_scale * last_leg_[static_cast<Eigen::Index>(i)];
    kp[j] = cfg_.kp_leg;
    kd[j] = cfg_.kd_leg;
  }
  for (size_t i = 0; i < arm_joints_.size(); ++i) {
    const int j = arm_joints_[i];
    q_des[j] += cfg_.action_scale * last_arm_[static_cast<Eigen::Index>(i)];
    kp[j] = cfg_.kp_arm;
    kd[j] = cfg_.kd_arm;
  }

  double tau_sq_arm = 0.0, tau_sq_leg = 0.0;
  int steps = 0;
  for (int k = 0; k < cfg_.decimation && !state_.invalid; ++k) {
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (state_.time >= it->time - kTimeEps) {
        state_ = apply_disturbance(state_, SpatialForce{it->torque, Vec3::Zero()},
                                   it->duration);
        it = pending_.erase(it);
      } else {
        ++it;
      }
    }
    const VecX q = state_.gen.joint_positions();
    const VecX qd = state_.gen.joint_velocities();
    const VecX tau = sim_.clamp_torques(
        (kp.array() * (q_des - q).array() - kd.array() * qd.array()).matrix());
    for (int j : arm_joints_) tau_sq_arm += tau[j] * tau[j];
    for (int j : leg_joints_) tau_sq_leg += tau[j] * tau[j];
    state_ = sim_.step(state_, tau, cfg_.dt);
    ++steps;
    if (observer_) observer_(state_);
  }
  if (steps > 0) {
    tau_sq_arm /= steps;
    tau_sq_leg /= steps;
  }
  clock_.advance(cfg_.dt * cfg_.decimation);
  return make_step(true, tau_sq_arm, tau_sq_leg);
}

void LocomotionEnv::fill_base_blocks(VecX& out, int& at) const {
  const Mat3 R = base_rotation(state_.gen.q);
  out[at++] = state_.gen.q[2];
  out[at++] = std::atan2(R(1, 0), R(0, 0));
  out.segment<3>(at) = state_.gen.qd.segment<3>(3);
  at += 3;
  out.segment<3>(at) = state_.gen.qd.segment<3>(0);
  at += 3;
  out.segment<3>(at) = R.transpose() * Vec3(0.0, 0.0, -1.0);
  at += 3;
}

VecX LocomotionEnv::observe_arm() const {
  const Mat3 R = base_rotation(state_.gen.q);
  VecX o(arm_spec_.obs_dim());
  int at = 0;
  fill_base_blocks(o, at);
  for (int j : arm_joints_) o[at++] = state_.gen.q[7 + j];
  for (int j : arm_joints_) o[at++] = state_.gen.qd[6 + j];
  o.segment(at, last_arm_.size()) = last_arm_;
  at += static_cast<int>(last_arm_.size());
  o.segment<3>(at) = mixed_frame_cam(cq_.k(), R);
  at += 3;
  o.segment<3>(at) = mixed_frame_cam(ref_.head<3>(), R);
  return o;
}

VecX LocomotionEnv::observe_leg() const {
  const Mat3 R = base_rotation(state_.gen.q);
  VecX o(leg_spec_.obs_dim());
  int at = 0;
  fill_base_blocks(o, at);
  o.segment<3>(at) = mixed_frame_cam(cq_.k(), R);
  at += 3;
  o.segment<3>(at) = cmd_.as_vector();
  at += 3;
  o[at++] = std::sin(2.0 * M_PI * clock_.phase);
  o[at++] = std::cos(2.0 * M_PI * clock_.phase);
  for (int j : leg_joints_) o[at++] = state_.gen.q[7 + j];
  for (int j : leg_joints_) o[at++] = state_.gen.qd[6 + j];
  o.segment(at, last_leg_.size()) = last_leg_;
  return o;
}

VecX LocomotionEnv::observe_global() const {
  const Mat3 R = base_rotation(state_.gen.q);
  VecX o(global_obs_dim());
  int at = 0;
  fill_base_blocks(o, at);
  o.segment<3>(at) = cmd_.as_vector();
  at += 3;
  o[at++] = std::sin(2.0 * M_PI * clock_.phase);
  o[at++] = std::cos(2.0 * M_PI * clock_.phase);
  o.segment<3>(at) = mixed_frame_cam(cq_.k(), R);
  at += 3;
  o.segment<3>(at) = mixed_frame_cam(ref_.head<3>(), R);
  at += 3;
  for (int j : leg_joints_) o[at++] = state_.gen.q[7 + j];
  for (int j : arm_joints_) o[at++] = state_.gen.q[7 + j];
  for (int j : leg_joints_) o[at++] = state_.gen.qd[6 + j];
  for (int j : arm_joints_) o[at++] = state_.gen.qd[6 + j];
  o.segment(at, last_leg_.size()) = last_leg_;
  at += static_cast<int>(last_leg_.size());
  o.segment(at, last_arm_.size()) = last_arm_;
  return o;
}

bool LocomotionEnv::check_termination() const {
  if (state_.invalid) return true;
  if (state_.gen.q[2] < cfg_.min_height_ratio * nominal_height_) return true;
  return base_tilt_deg(base_rotation(state_.gen.q)) > cfg_.max_tilt_deg;
}

LocomotionStep LocomotionEnv::make_step(bool evaluate_rewards,
                                        double torque_sq_arm,
                                        double torque_sq_leg) {
  const RobotModel& m = *model_;
  LocomotionStep out;
  if (!state_.invalid) {
    cq_ = compute_centroidal(m, state_.gen);
    if (resample_commands_ && state_.time >= next_resample_ - kTimeEps) {
      cmd_ = sample_command(rng_, cfg_.commands);
      next_resample_ += cfg_.command_resample;
    }
    ref_ = reference_momentum(cq_.cmm, cmd_);
  }
  const Mat3 R = base_rotation(state_.gen.q);
  const double policy_dt = cfg_.dt * cfg_.decimation;

  EnvStepInfo& info = out.info;
  info.centroidal = cq_;
  info.reference = ref_;
  info.kdot_fd = (cq_.k() - prev_k_) / policy_dt;
  info.grm = grm_about_cp(state_, m.contact_points());
  info.base_velocity_cmd_frame = {state_.gen.qd[3], state_.gen.qd[4],
                                  (R * state_.gen.qd.head<3>()).z()};
  prev_k_ = cq_.k();

  VecX q_arm(arm_joints_.size()), qd_arm(arm_joints_.size());
  VecX q_leg(leg_joints_.size()), qd_leg(leg_joints_.size());
  for (size_t i = 0; i < arm_joints_.size(); ++i) {
    q_arm[static_cast<Eigen::Index>(i)] = state_.gen.q[7 + arm_joints_[i]];
    qd_arm[static_cast<Eigen::Index>(i)] = state_.gen.qd[6 + arm_joints_[i]];
  }
  for (size_t i = 0; i < leg_joints_.size(); ++i) {
    q_leg[static_cast<Eigen::Index>(i)] = state_.gen.q[7 + leg_joints_[i]];
    qd_leg[static_cast<Eigen::Index>(i)] = state_.gen.qd[6 + leg_joints_[i]];
  }
  const VecX joint_q = state_.gen.joint_positions();

  const bool on = evaluate_rewards;
  out.reward_arm = {
      {"cam", on ? cam_reward(ref_[2], cq_.k().z(), cfg_.sigma) : 0.0},
      {"dcam", on ? cam_damping_reward(cq_.k().head<2>(), info.kdot_fd.head<2>())
                  : 0.0},
      {"action_rate", on ? -sum_sq(last_arm_ - prev_arm_) : 0.0},
      {"joint_vel", on ? -sum_sq(qd_arm) : 0.0},
      {"torque", on ? -torque_sq_arm : 0.0},
      {"joint_limit",
       on ? -joint_limit_penalty(m, joint_q, arm_joints_, cfg_.joint_limit_margin)
          : 0.0},
  };
  out.reward_leg = {
      {"vt", on ? velocity_tracking_reward(cmd_, info.base_velocity_cmd_frame,
                                           cfg_.sigma)
                : 0.0},
      {"cs", on ? contact_schedule_reward(state_.in_contact(Foot::right),
                                          state_.in_contact(Foot::left),
                                          clock_.contact_schedule())
                : 0.0},
      {"action_rate", on ? -sum_sq(last_leg_ - prev_leg_) : 0.0},
      {"joint_vel", on ? -sum_sq(qd_leg) : 0.0},
      {"torque", on ? -torque_sq_leg : 0.0},
      {"joint_limit",
       on ? -joint_limit_penalty(m, joint_q, leg_joints_, cfg_.joint_limit_margin)
          : 0.0},
  };
  for (const auto& [name, v] : out.reward_arm) {
    out.total_arm += arm_spec_.weight(name) * v;
  }
  for (const auto& [name, v] : out.reward_leg) {
    out.total_leg += leg_spec_.weight(name) * v;
  }

  out.terminated = check_termination();
  out.truncated =
      !out.terminated && state_.time >= cfg_.episode_length - kTimeEps;
  out.obs_arm = observe_arm();
  out.obs_leg = observe_leg();
  out.obs_global = observe_global();
  if (state_.invalid) {
    // Keep learners away from non-finite inputs after a blow-up.
    for (VecX* v : {&out.obs_arm, &out.obs_leg, &out.obs_global}) {
      *v = v->unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
    }
  }
  return out;
}

std::string LocomotionEnv::agent_name(int agent) const {
  return agent == 0 ? "arm" : "leg";
}

int LocomotionEnv::local_obs_dim(int agent) const {
  return agent == 0 ? arm_spec_.obs_dim() : leg_spec_.obs_dim();
}

int LocomotionEnv::global_obs_dim() const {
  return armswing::global_obs_dim(model_->n_leg(), model_->n_arm());
}

int LocomotionEnv::action_dim(int agent) const {
  return agent == 0 ? model_->n_arm() : model_->n_leg();
}

Transition LocomotionEnv::to_transition(const LocomotionStep& s) const {
  Transition t;
  t.obs = {s.obs_arm, s.obs_leg};
  t.global_obs = s.obs_global;
  t.rewards = {s.total_arm, s.total_leg};
  t.components = {s.reward_arm, s.reward_leg};
  t.tracking = s.reward_leg.front().second;
  t.terminated = s.terminated;
  t.truncated = s.truncated;
  return t;
}

Transition LocomotionEnv::reset(std::uint64_t seed) {
  return to_transition(reset_full(seed));
}

Transition LocomotionEnv::step(const std::vector<VecX>& actions) {
  return to_transition(act(actions.at(0), actions.at(1)));
}

}  // namespace armswing
