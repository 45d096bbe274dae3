#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "armswing/config.hpp"
#include "armswing/multi_agent_env.hpp"
#include "armswing/net.hpp"

namespace armswing {

enum class Arch { single, dtde, ctde, ctce };
const char* to_string(Arch a);
Arch parse_arch(const std::string& name);  // throws ConfigError
inline constexpr Arch kAllArchs[] = {Arch::single, Arch::dtde, Arch::ctde, Arch::ctce};

enum class ObsSource { local, global };

struct Wiring {
  ObsSource actor = ObsSource::local;
  ObsSource critic = ObsSource::global;
  bool joint = false;  // one learner acting for every agent
};
Wiring wiring(Arch a);

// Mapping between environment agents and learners. In `single` one learner
// acts for all agents on the global view and receives the summed reward.
int num_learners(Arch a, int num_agents);
VecX actor_input(Arch a, int learner, const Transition& t);
VecX critic_input(Arch a, int learner, const Transition& t);
double learner_reward(Arch a, int learner, const Transition& t);
std::vector<VecX> split_actions(Arch a, const std::vector<VecX>& learner_actions,
                                const std::vector<int>& agent_action_dims);

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  int epochs = 5;
  int minibatches = 4;
  double entropy_coef = 0.005;
  double max_grad_norm = 1.0;
  double kl_abort = 0.5;
  double obs_clip = 10.0;
};

struct NetConfig {
  std::vector<int> actor_hidden{256, 128};
  std::vector<int> critic_hidden{256, 128};
  double init_log_std = -1.0;
  double actor_output_scale = 0.01;
};

struct TrainConfig {
  Arch arch = Arch::ctde;
  PpoConfig ppo;
  NetConfig net;
  int horizon = 24;
  int num_envs = 256;
  int iterations = 100;
  std::uint64_t seed = 1;
  int threads = 1;

  /// Reads `train.*`, `ppo.*` and `net.*` keys.
  static TrainConfig from_config(const Config& cfg);
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rewards, values and dones are (T x N); `bootstrap` holds V(s_T) per
/// environment. dones(t, n) marks that the episode ended after step t.
struct Advantages {
  MatX advantages;
  MatX returns;
};
Advantages gae(const MatX& rewards, const MatX& values, const MatX& dones,
               const VecX& bootstrap, double gamma, double lambda);

/// Population variance.
double advantage_variance(const VecX& advantages);

double clipped_surrogate(double ratio, double advantage, double clip);

struct PpoBatch {
  MatX actor_obs;   // normalized rows
  MatX critic_obs;  // normalized rows
  MatX actions;
  VecX log_probs;
  VecX advantages;  // raw
  VecX returns;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  bool kl_aborted = false;
  int minibatch_updates = 0;
};

struct Learner {
  LearnerModel model;
  Adam actor_opt;
  Adam critic_opt;
};

Learner make_learner(const std::string& name, int actor_in, int critic_in, int action_dim,
                     const NetConfig& net, const PpoConfig& ppo, std::mt19937_64& rng);

/// Clipped-surrogate PPO with minibatched epochs, per-update advantage
/// normalisation and gradient-norm clipping. Stops early when the KL
/// estimate of a minibatch exceeds `kl_abort` (that minibatch is not applied).
PpoStats ppo_update(Learner& learner, const PpoBatch& batch, const PpoConfig& cfg,
                    std::mt19937_64& rng);

/// Gradient of the mean clipped surrogate with respect to the actor's mean
/// network, on raw (un-normalized) transitions.
VecX surrogate_gradient(Arch a, int learner, const LearnerModel& model,
                        const std::vector<Transition>& transitions, const MatX& actions,
                        const VecX& old_log_probs, const VecX& advantages, double clip);

struct LearnerMetrics {
  std::string name;
  double reward_mean = 0.0;  // per step
  double adv_var = 0.0;
  PpoStats ppo;
};

struct IterationMetrics {
  int iteration = 0;
  double wall_clock_s = 0.0;
  long env_steps = 0;
  double r_vt_mean = 0.0;
  double episode_return_mean = std::numeric_limits<double>::quiet_NaN();
  double episode_length_mean = std::numeric_limits<double>::quiet_NaN();
  int episodes = 0;
  std::vector<LearnerMetrics> learners;
  // Per environment agent, mean of each unweighted reward component.
  std::vector<std::string> agent_names;
  std::vector<RewardComponents> components;

  bool finite() const;
};

std::string metrics_csv_header(const IterationMetrics& m);
std::string metrics_csv_row(const IterationMetrics& m);

class Trainer {
 public:
  Trainer(EnvFactory factory, TrainConfig cfg, std::string task = "");

  IterationMetrics iterate();
  int iteration() const { return iteration_; }
  const TrainConfig& config() const { return cfg_; }
  Arch arch() const { return cfg_.arch; }
  int num_learners() const { return static_cast<int>(learners_.size()); }
  const LearnerModel& learner(int i) const { return learners_[static_cast<size_t>(i)].model; }
  const std::vector<int>& agent_action_dims() const { return action_dims_; }

  Checkpoint checkpoint() const;
  void load(const Checkpoint& ckpt);

 private:
  struct EnvSlot {
    std::unique_ptr<MultiAgentEnv> env;
    Transition current;
    std::mt19937_64 rng;
    std::uint64_t episodes = 0;
    double ep_return = 0.0;
    int ep_length = 0;
  };
  struct Rollout;
  void collect(Rollout& r, int env_begin, int env_end);
  void reset_slot(EnvSlot& slot, int index) const;

  EnvFactory factory_;
  TrainConfig cfg_;
  std::string task_;
  std::vector<Learner> learners_;
  std::vector<EnvSlot> slots_;
  std::vector<int> action_dims_;
  std::vector<std::string> agent_names_;
  std::mt19937_64 update_rng_;
  int iteration_ = 0;
  std::chrono::steady_clock::time_point start_;
};

/// Runs `cfg.iterations` iterations; `on_iteration` sees each row as it is
/// produced.
std::vector<IterationMetrics> train(
    const EnvFactory& factory, const TrainConfig& cfg, const std::string& task = "",
    const std::function<void(const IterationMetrics&, const Trainer&)>& on_iteration = {});

/// Acts with the policies of a checkpoint on an environment's transitions.
class PolicyRunner {
 public:
  /// Throws CheckpointError when the checkpoint does not fit `env`,
  /// naming both sets of dimensions.
  PolicyRunner(Checkpoint ckpt, const MultiAgentEnv& env);

  Arch arch() const { return arch_; }
  const Checkpoint& checkpoint() const { return ckpt_; }
  /// Deterministic (mean) actions when `rng` is null.
  std::vector<VecX> act(const Transition& t, std::mt19937_64* rng = nullptr) const;

 private:
  Checkpoint ckpt_;
  Arch arch_;
  std::vector<int> action_dims_;
  double obs_clip_;
};

/// Average return of the deterministic policy over `episodes` episodes,
/// summing all agents' rewards.
double evaluate_return(const PolicyRunner& runner, MultiAgentEnv& env, int episodes,
                       std::uint64_t seed, int max_steps = 100000);

}  // namespace armswing
