#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "armswing/spatial.hpp"

namespace armswing {

using RowMatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Feed-forward network, tanh on hidden layers and identity output. All
/// parameters live in one flat vector: for each layer the row-major weight
/// matrix (out x in) followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }

  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  Eigen::Map<const RowMatX> weight(int layer) const;
  Eigen::Map<RowMatX> weight(int layer);
  Eigen::Map<const VecX> bias(int layer) const;
  Eigen::Map<VecX> bias(int layer);

  /// Uniform fan-in initialisation, biases zero. The last layer is scaled
  /// by `output_scale`.
  void init(std::mt19937_64& rng, double output_scale = 1.0);

  struct Cache {
    std::vector<MatX> act;  // act[0] = input, act[l+1] = output of layer l
  };

  VecX forward(const VecX& x) const;
  /// Rows are samples.
  MatX forward_batch(const MatX& x, Cache* cache = nullptr) const;

  /// Gradient of sum_rows <grad_out_row, output_row> with respect to the
  /// parameters, added into `grad`. Optionally returns the input gradient.
  void backward_batch(const Cache& cache, const MatX& grad_out, VecX& grad,
                      MatX* grad_in = nullptr) const;
  VecX backward(const VecX& x, const VecX& grad_out) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights
  VecX params_;
};

/// Diagonal Gaussian with a state-independent learnable log std.
class GaussianPolicy {
 public:
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 1.0;

  GaussianPolicy() = default;
  GaussianPolicy(std::vector<int> sizes, double init_log_std);

  Mlp& mean_net() { return mean_; }
  const Mlp& mean_net() const { return mean_; }
  VecX& log_std() { return log_std_; }
  const VecX& log_std() const { return log_std_; }
  int action_dim() const { return mean_.output_dim(); }

  void clamp_log_std();
  VecX mean(const VecX& obs) const { return mean_.forward(obs); }
  VecX sample(const VecX& obs, std::mt19937_64& rng) const;
  double log_prob(const VecX& obs, const VecX& action) const;
  double entropy() const;

  /// Gradients of log_prob(obs, action) with respect to the mean-network
  /// parameters and log_std.
  void log_prob_gradient(const VecX& obs, const VecX& action, VecX& grad_net,
                         VecX& grad_log_std) const;

 private:
  Mlp mean_;
  VecX log_std_;
};

/// Log density of a diagonal Gaussian, row by row.
VecX gaussian_log_prob(const MatX& mean, const VecX& log_std, const MatX& action);

/// Running mean and variance over observation vectors (Chan et al. merge).
class RunningNorm {
 public:
  static constexpr double kMinStd = 1e-6;

  RunningNorm() = default;
  explicit RunningNorm(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const VecX& mean() const { return mean_; }
  const VecX& var() const { return var_; }

  void update(const VecX& x);
  /// Rows are samples.
  void update_batch(const MatX& batch);
  void set(double count, const VecX& mean, const VecX& var);

  VecX normalize(const VecX& x) const;
  MatX normalize(const MatX& batch) const;

 private:
  double count_ = 0.0;
  VecX mean_, var_;
};

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(VecX& params, const VecX& grad);
  void reset() {
    m.resize(0);
    v.resize(0);
    t = 0;
  }

  VecX m, v;
  long t = 0;
};

/// Actor, critic and their input normalisers for one learner.
struct LearnerModel {
  std::string name;
  GaussianPolicy actor;
  Mlp critic;
  RunningNorm actor_norm;
  RunningNorm critic_norm;
};

struct Checkpoint {
  std::string arch;
  std::string task;
  std::vector<LearnerModel> learners;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout (all integers u32 little-endian, strings as u32 length +
/// bytes, floats f64 little-endian):
///
///   "MARLCKPT" version arch task num_learners
///   per learner: name, actor layer count + sizes, critic layer count +
///                sizes, actor norm dim, critic norm dim
///   per learner: actor params, log_std, critic params,
///                actor norm (count, mean, var), critic norm (count, mean, var)
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace armswing
