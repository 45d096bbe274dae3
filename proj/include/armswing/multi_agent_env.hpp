#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "armswing/spatial.hpp"

namespace armswing {

using RewardComponents = std::vector<std::pair<std::string, double>>;

/// One environment transition as seen by the learners. All agents share the
/// same underlying transition.
struct Transition {
  std::vector<VecX> obs;         // per agent, local view
  VecX global_obs;               // full view for centralized critics/actors
  std::vector<double> rewards;   // per agent, weighted sum of components
  std::vector<RewardComponents> components;
  double tracking = 0.0;         // velocity-tracking reward of this step
  bool terminated = false;
  bool truncated = false;
};

class MultiAgentEnv {
 public:
  virtual ~MultiAgentEnv() = default;

  virtual int num_agents() const = 0;
  virtual std::string agent_name(int agent) const = 0;
  virtual int local_obs_dim(int agent) const = 0;
  virtual int global_obs_dim() const = 0;
  virtual int action_dim(int agent) const = 0;

  virtual Transition reset(std::uint64_t seed) = 0;
  /// Actions are raw policy outputs; the environment clamps them.
  virtual Transition step(const std::vector<VecX>& actions) = 0;
};

using EnvFactory = std::function<std::unique_ptr<MultiAgentEnv>()>;

}  // namespace armswing
