#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "armswing/centroidal.hpp"
#include "armswing/config.hpp"
#include "armswing/multi_agent_env.hpp"
#include "armswing/simulator.hpp"

namespace armswing {

enum class AgentKind { arm, leg };
const char* to_string(AgentKind a);

struct ObsBlock {
  std::string name;
  int dim = 0;
};

struct AgentSpec {
  AgentKind agent = AgentKind::arm;
  std::vector<ObsBlock> obs_layout;
  int action_dim = 0;
  RewardComponents reward_weights;
  double sigma_track = 0.25;

  int obs_dim() const;
  double weight(const std::string& name) const;
  // Offset of a block inside the observation vector; throws if absent.
  int block_offset(const std::string& name) const;
};

struct CommandRanges {
  std::array<double, 2> vx{-0.8, 1.3};
  std::array<double, 2> vy{-0.4, 0.4};
  std::array<double, 2> wz{-1.0, 1.0};
  double zero_fraction = 0.1;
};

struct Disturbance {
  double time = 0.0;  // s after reset
  Vec3 torque = Vec3::Zero();
  double duration = 0.1;
};

enum class ArmMode { learned, fixed };

struct EnvConfig {
  std::string model_path;
  double dt = 0.001;
  int decimation = 10;
  double sigma = 0.25;
  double gait_period = 0.8;
  double episode_length = 10.0;
  double command_resample = 10.0;  // s between command draws
  double action_scale = 0.5;
  double kp_leg = 300.0, kd_leg = 3.0;
  double kp_arm = 30.0, kd_arm = 1.0;
  double reset_noise = 0.05;
  double min_height_ratio = 0.45;
  double max_tilt_deg = 60.0;
  double joint_limit_margin = 0.9;  // fraction of the half range
  CommandRanges commands;
  ArmMode arm_mode = ArmMode::learned;
  RewardComponents arm_weights{{"cam", 1.0},         {"dcam", 0.05},
                               {"action_rate", 0.01}, {"joint_vel", 1e-3},
                               {"torque", 1e-5},      {"joint_limit", 1.0}};
  RewardComponents leg_weights{{"vt", 1.0},           {"cs", 0.3},
                               {"action_rate", 0.01}, {"joint_vel", 1e-3},
                               {"torque", 1e-5},      {"joint_limit", 1.0}};
  std::vector<Disturbance> disturbances;

  /// Reads the `env.*` and `reward.*` keys.
  static EnvConfig from_config(const Config& cfg);
};

struct GaitClock {
  double phase = 0.0;  // [0, 1)
  double period = 0.8;

  void advance(double dt);
  // cos(2 pi phase): +1 asks for right stance, -1 for left.
  double contact_schedule() const;
};

/// x, y of the world-frame angular momentum expressed in the base frame,
/// z kept in the world frame.
Vec3 mixed_frame_cam(const Vec3& k_world, const Mat3& base_rotation);

/// exp(-sum_i ((ref_i - actual_i) / (1 + |ref_i|))^2 / sigma)
double tracking_reward(const VecX& reference, const VecX& actual, double sigma);
double cam_reward(double kz_ref, double kz, double sigma);
/// -min(0, k_xy . kdot_xy): positive only while horizontal CAM shrinks.
double cam_damping_reward(const Vec2& k_xy, const Vec2& kdot_xy);
double velocity_tracking_reward(const CommandVel& cmd, const Vec3& actual,
                                double sigma);
double contact_schedule_reward(bool right_contact, bool left_contact,
                               double phi_contact);
/// Sum over joints of the squared excursion beyond `margin` of each
/// joint's half range (measured from the range centre).
double joint_limit_penalty(const RobotModel& model, const VecX& joint_q,
                           const std::vector<int>& joints, double margin);

CommandVel sample_command(std::mt19937_64& rng, const CommandRanges& ranges);

/// Tilt of the base z axis from vertical, in degrees.
double base_tilt_deg(const Mat3& base_rotation);

AgentSpec make_arm_spec(int n_arm, const EnvConfig& cfg);
AgentSpec make_leg_spec(int n_leg, const EnvConfig& cfg);
std::vector<ObsBlock> global_obs_layout(int n_leg, int n_arm);
int global_obs_dim(int n_leg, int n_arm);

struct EnvStepInfo {
  CentroidalQuantities centroidal;
  Vec6 reference = Vec6::Zero();  // A_G q_ref-dot
  Vec3 kdot_fd = Vec3::Zero();    // finite difference over the policy step
  GrmSample grm;
  Vec3 base_velocity_cmd_frame = Vec3::Zero();  // (vx, vy) body, wz world
};

struct LocomotionStep {
  VecX obs_arm, obs_leg, obs_global;
  RewardComponents reward_arm, reward_leg;  // unweighted components
  double total_arm = 0.0, total_leg = 0.0;  // weighted sums
  bool terminated = false;
  bool truncated = false;
  EnvStepInfo info;
};

/// Arm/leg locomotion task on the floating-base model: residual joint
/// targets tracked by a 1 kHz PD loop, rewards evaluated at the policy rate.
class LocomotionEnv : public MultiAgentEnv {
 public:
  LocomotionEnv(std::shared_ptr<const RobotModel> model, EnvConfig cfg);

  const RobotModel& model() const { return *model_; }
  const EnvConfig& config() const { return cfg_; }
  const AgentSpec& arm_spec() const { return arm_spec_; }
  const AgentSpec& leg_spec() const { return leg_spec_; }
  const SimState& state() const { return state_; }
  const CommandVel& command() const { return cmd_; }
  const GaitClock& clock() const { return clock_; }
  double nominal_height() const { return nominal_height_; }
  double episode_time() const { return state_.time; }

  LocomotionStep reset_full(std::uint64_t seed);
  LocomotionStep act(const VecX& arm_action, const VecX& leg_action);

  void set_command(const CommandVel& cmd) { cmd_ = cmd; }
  /// Replaces the simulator state and refreshes the centroidal cache.
  void set_state(const SimState& state);
  void set_command_resampling(bool on) { resample_commands_ = on; }
  /// Torque disturbance on the base at `time` (s after reset).
  void schedule_disturbance(const Disturbance& d);
  /// Called after each 1 kHz simulator step.
  void set_substep_observer(std::function<void(const SimState&)> fn) {
    observer_ = std::move(fn);
  }

  // Observation builders on the current state.
  VecX observe_arm() const;
  VecX observe_leg() const;
  VecX observe_global() const;
  bool check_termination() const;

  // MultiAgentEnv: agent 0 = arm, agent 1 = leg.
  int num_agents() const override { return 2; }
  std::string agent_name(int agent) const override;
  int local_obs_dim(int agent) const override;
  int global_obs_dim() const override;
  int action_dim(int agent) const override;
  Transition reset(std::uint64_t seed) override;
  Transition step(const std::vector<VecX>& actions) override;

 private:
  void fill_base_blocks(VecX& out, int& at) const;
  LocomotionStep make_step(bool evaluate_rewards, double torque_sq_arm,
                           double torque_sq_leg);
  Transition to_transition(const LocomotionStep& s) const;

  std::shared_ptr<const RobotModel> model_;
  EnvConfig cfg_;
  Simulator sim_;
  AgentSpec arm_spec_, leg_spec_;
  std::vector<int> arm_joints_, leg_joints_;  // joint indices (0-based)

  SimState state_;
  CommandVel cmd_;
  GaitClock clock_;
  VecX prev_arm_, prev_leg_, last_arm_, last_leg_;
  Vec3 prev_k_ = Vec3::Zero();
  CentroidalQuantities cq_;
  Vec6 ref_ = Vec6::Zero();
  double nominal_height_ = 0.0;
  double next_resample_ = 0.0;
  bool resample_commands_ = true;
  std::vector<Disturbance> pending_;
  std::mt19937_64 rng_;
  std::function<void(const SimState&)> observer_;
};

}  // namespace armswing
