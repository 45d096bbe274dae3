#include "armswing/net.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace armswing {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least two layer sizes");
  Eigen::Index n = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw std::invalid_argument("mlp layer sizes must be positive");
    }
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = VecX::Zero(n);
}

Eigen::Map<const RowMatX> Mlp::weight(int l) const {
  const auto i = static_cast<size_t>(l);
  return {params_.data() + offsets_[i], sizes_[i + 1], sizes_[i]};
}

Eigen::Map<RowMatX> Mlp::weight(int l) {
  const auto i = static_cast<size_t>(l);
  return {params_.data() + offsets_[i], sizes_[i + 1], sizes_[i]};
}

Eigen::Map<const VecX> Mlp::bias(int l) const {
  const auto i = static_cast<size_t>(l);
  return {params_.data() + offsets_[i] + sizes_[i + 1] * sizes_[i], sizes_[i + 1]};
}

Eigen::Map<VecX> Mlp::bias(int l) {
  const auto i = static_cast<size_t>(l);
  return {params_.data() + offsets_[i] + sizes_[i + 1] * sizes_[i], sizes_[i + 1]};
}

void Mlp::init(std::mt19937_64& rng, double output_scale) {
  params_.setZero();
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[static_cast<size_t>(l)]));
    const double scale = l + 1 == num_layers() ? output_scale : 1.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * u(rng);
  }
}

VecX Mlp::forward(const VecX& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("mlp input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
  VecX a = x;
  for (int l = 0; l < num_layers(); ++l) {
    VecX z = weight(l) * a + bias(l);
    a = l + 1 < num_layers() ? VecX(z.array().tanh()) : z;
  }
  return a;
}

MatX Mlp::forward_batch(const MatX& x, Cache* cache) const {
  if (x.cols() != input_dim()) {
    throw std::invalid_argument("mlp input has dimension " + std::to_string(x.cols()) +
                                ", expected " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->act.assign(static_cast<size_t>(num_layers()) + 1, MatX());
    cache->act[0] = x;
  }
  MatX a = x;
  for (int l = 0; l < num_layers(); ++l) {
    MatX z = a * weight(l).transpose();
    z.rowwise() += bias(l).transpose();
    if (l + 1 < num_layers()) z = z.array().tanh();
    a = std::move(z);
    if (cache) cache->act[static_cast<size_t>(l) + 1] = a;
  }
  return a;
}

void Mlp::backward_batch(const Cache& cache, const MatX& grad_out, VecX& grad,
                         MatX* grad_in) const {
  if (grad.size() != num_params()) grad = VecX::Zero(num_params());
  MatX dz = grad_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto i = static_cast<size_t>(l);
    const MatX& a_in = cache.act[i];
    Eigen::Map<RowMatX> gw(grad.data() + offsets_[i], sizes_[i + 1], sizes_[i]);
    gw.noalias() += dz.transpose() * a_in;
    Eigen::Map<VecX>(grad.data() + offsets_[i] + sizes_[i + 1] * sizes_[i], sizes_[i + 1]) +=
        dz.colwise().sum().transpose();
    if (l == 0 && !grad_in) break;
    MatX da = dz * weight(l);
    if (l > 0) {
      dz = da.array() * (1.0 - a_in.array().square());
    } else {
      *grad_in = std::move(da);
    }
  }
}

VecX Mlp::backward(const VecX& x, const VecX& grad_out) const {
  Cache cache;
  forward_batch(x.transpose(), &cache);
  VecX grad = VecX::Zero(num_params());
  backward_batch(cache, grad_out.transpose(), grad);
  return grad;
}

GaussianPolicy::GaussianPolicy(std::vector<int> sizes, double init_log_std)
    : mean_(std::move(sizes)) {
  log_std_ = VecX::Constant(mean_.output_dim(), init_log_std);
  clamp_log_std();
}

void GaussianPolicy::clamp_log_std() {
  log_std_ = log_std_.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);
}

VecX GaussianPolicy::sample(const VecX& obs, std::mt19937_64& rng) const {
  std::normal_distribution<double> n;
  VecX a = mean(obs);
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += std::exp(log_std_[i]) * n(rng);
  return a;
}

VecX gaussian_log_prob(const MatX& mean, const VecX& log_std, const MatX& action) {
  const Eigen::ArrayXd inv_std = (-log_std.array()).exp();
  const MatX z = ((action - mean).array().rowwise() * inv_std.transpose()).matrix();
  const double c = -log_std.sum() - 0.5 * static_cast<double>(log_std.size()) * kLog2Pi;
  return (-0.5 * z.rowwise().squaredNorm()).array() + c;
}

double GaussianPolicy::log_prob(const VecX& obs, const VecX& action) const {
  return gaussian_log_prob(mean(obs).transpose(), log_std_, action.transpose())[0];
}

double GaussianPolicy::entropy() const {
  return log_std_.sum() + 0.5 * static_cast<double>(log_std_.size()) * (1.0 + kLog2Pi);
}

void GaussianPolicy::log_prob_gradient(const VecX& obs, const VecX& action,
                                       VecX& grad_net, VecX& grad_log_std) const {
  Mlp::Cache cache;
  const VecX mu = mean_.forward_batch(obs.transpose(), &cache).row(0).transpose();
  const Eigen::ArrayXd var = (2.0 * log_std_.array()).exp();
  const VecX diff = action - mu;
  const VecX d_mu = (diff.array() / var).matrix();
  grad_net = VecX::Zero(mean_.num_params());
  mean_.backward_batch(cache, d_mu.transpose(), grad_net);
  grad_log_std = (diff.array().square() / var - 1.0).matrix();
}

RunningNorm::RunningNorm(int dim) : mean_(VecX::Zero(dim)), var_(VecX::Ones(dim)) {}

void RunningNorm::update(const VecX& x) { update_batch(MatX(x.transpose())); }

void RunningNorm::update_batch(const MatX& batch) {
  if (batch.rows() == 0) return;
  if (batch.cols() != dim()) throw std::invalid_argument("normalizer dimension mismatch");
  const double nb = static_cast<double>(batch.rows());
  const VecX mb = batch.colwise().mean().transpose();
  const VecX vb = (batch.rowwise() - mb.transpose()).colwise().squaredNorm().transpose() / nb;
  if (count_ == 0.0) {
    count_ = nb;
    mean_ = mb;
    var_ = vb;
    return;
  }
  const double n = count_ + nb;
  const VecX delta = mb - mean_;
  mean_ += delta * (nb / n);
  var_ = (var_ * count_ + vb * nb + delta.cwiseProduct(delta) * (count_ * nb / n)) / n;
  count_ = n;
}

void RunningNorm::set(double count, const VecX& mean, const VecX& var) {
  count_ = count;
  mean_ = mean;
  var_ = var;
}

VecX RunningNorm::normalize(const VecX& x) const {
  return ((x - mean_).array() / var_.array().sqrt().max(kMinStd)).matrix();
}

MatX RunningNorm::normalize(const MatX& batch) const {
  const Eigen::ArrayXd inv = 1.0 / var_.array().sqrt().max(kMinStd);
  return ((batch.rowwise() - mean_.transpose()).array().rowwise() * inv.transpose()).matrix();
}

void Adam::step(VecX& params, const VecX& grad) {
  if (m.size() != params.size()) {
    m = VecX::Zero(params.size());
    v = VecX::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw CheckpointError("cannot write checkpoint '" + path + "'");
  }
  void u32(std::uint32_t v) { raw(byteswap_if_big(v)); }
  void f64(double v) { raw(byteswap_if_big(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const VecX& v) {
    for (double x : v) f64(x);
  }
  void bytes(const char* p, size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("failed while writing checkpoint '" + path_ + "'");
  }

 private:
  template <class T>
  void raw(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw CheckpointError("cannot open checkpoint '" + path + "'");
  }
  std::uint32_t u32() { return byteswap_if_big(raw<std::uint32_t>()); }
  double f64() { return byteswap_if_big(raw<double>()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 16)) fail("string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  VecX vec(Eigen::Index n) {
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  std::vector<int> sizes() {
    const std::uint32_t n = u32();
    if (n < 2 || n > 64) fail("layer count out of range");
    std::vector<int> s(n);
    for (auto& x : s) {
      x = static_cast<int>(u32());
      if (x <= 0 || x > (1 << 20)) fail("layer size out of range");
    }
    return s;
  }
  void bytes(char* p, size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    check();
  }
  void expect_end() {
    in_.peek();
    if (!in_.eof()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) {
    throw CheckpointError("corrupt checkpoint '" + path_ + "': " + what);
  }

 private:
  template <class T>
  T raw() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  void check() {
    if (!in_) fail("unexpected end of file");
  }
  std::ifstream in_;
  std::string path_;
};

constexpr char kMagic[8] = {'M', 'A', 'R', 'L', 'C', 'K', 'P', 'T'};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.str(ckpt.arch);
  w.str(ckpt.task);
  w.u32(static_cast<std::uint32_t>(ckpt.learners.size()));
  for (const auto& l : ckpt.learners) {
    w.str(l.name);
    for (const Mlp* net : {&l.actor.mean_net(), &l.critic}) {
      w.u32(static_cast<std::uint32_t>(net->sizes().size()));
      for (int s : net->sizes()) w.u32(static_cast<std::uint32_t>(s));
    }
    w.u32(static_cast<std::uint32_t>(l.actor_norm.dim()));
    w.u32(static_cast<std::uint32_t>(l.critic_norm.dim()));
  }
  for (const auto& l : ckpt.learners) {
    w.vec(l.actor.mean_net().params());
    w.vec(l.actor.log_std());
    w.vec(l.critic.params());
    for (const RunningNorm* n : {&l.actor_norm, &l.critic_norm}) {
      w.f64(n->count());
      w.vec(n->mean());
      w.vec(n->var());
    }
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[sizeof(kMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  c.arch = r.str();
  c.task = r.str();
  const std::uint32_t n = r.u32();
  if (n == 0 || n > 16) r.fail("learner count out of range");
  std::vector<std::array<int, 2>> norm_dims;
  for (std::uint32_t i = 0; i < n; ++i) {
    LearnerModel l;
    l.name = r.str();
    l.actor = GaussianPolicy(r.sizes(), 0.0);
    l.critic = Mlp(r.sizes());
    const int da = static_cast<int>(r.u32());
    const int dc = static_cast<int>(r.u32());
    if (da != l.actor.mean_net().input_dim() || dc != l.critic.input_dim()) {
      r.fail("normalizer dimension does not match network input");
    }
    l.actor_norm = RunningNorm(da);
    l.critic_norm = RunningNorm(dc);
    c.learners.push_back(std::move(l));
  }
  for (auto& l : c.learners) {
    l.actor.mean_net().params() = r.vec(l.actor.mean_net().num_params());
    l.actor.log_std() = r.vec(l.actor.action_dim());
    l.critic.params() = r.vec(l.critic.num_params());
    for (RunningNorm* nm : {&l.actor_norm, &l.critic_norm}) {
      const double count = r.f64();
      VecX mean = r.vec(nm->dim());
      VecX var = r.vec(nm->dim());
      nm->set(count, mean, var);
    }
  }
  r.expect_end();
  return c;
}

}  // namespace armswing
