#include "armswing/marl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

namespace armswing {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

MatX clip_rows(MatX m, double limit) {
  return m.cwiseMax(-limit).cwiseMin(limit);
}

void clip_norm(VecX& g, double max_norm) {
  const double n = g.norm();
  if (max_norm > 0.0 && n > max_norm) g *= max_norm / n;
}

MatX gather(const MatX& m, const std::vector<Eigen::Index>& idx, size_t b, size_t e) {
  MatX out(static_cast<Eigen::Index>(e - b), m.cols());
  for (size_t i = b; i < e; ++i) out.row(static_cast<Eigen::Index>(i - b)) = m.row(idx[i]);
  return out;
}

VecX gather(const VecX& v, const std::vector<Eigen::Index>& idx, size_t b, size_t e) {
  VecX out(static_cast<Eigen::Index>(e - b));
  for (size_t i = b; i < e; ++i) out[static_cast<Eigen::Index>(i - b)] = v[idx[i]];
  return out;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

}  // namespace

const char* to_string(Arch a) {
  switch (a) {
    case Arch::single: return "single";
    case Arch::dtde: return "dtde";
    case Arch::ctde: return "ctde";
    case Arch::ctce: return "ctce";
  }
  return "?";
}

Arch parse_arch(const std::string& name) {
  for (Arch a : kAllArchs) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown architecture '" + name + "' (expected single, dtde, ctde or ctce)");
}

Wiring wiring(Arch a) {
  switch (a) {
    case Arch::single: return {ObsSource::global, ObsSource::global, true};
    case Arch::dtde: return {ObsSource::local, ObsSource::local, false};
    case Arch::ctde: return {ObsSource::local, ObsSource::global, false};
    case Arch::ctce: return {ObsSource::global, ObsSource::global, false};
  }
  return {};
}

int num_learners(Arch a, int num_agents) { return wiring(a).joint ? 1 : num_agents; }

VecX actor_input(Arch a, int learner, const Transition& t) {
  return wiring(a).actor == ObsSource::global ? t.global_obs
                                              : t.obs.at(static_cast<size_t>(learner));
}

VecX critic_input(Arch a, int learner, const Transition& t) {
  return wiring(a).critic == ObsSource::global ? t.global_obs
                                               : t.obs.at(static_cast<size_t>(learner));
}

double learner_reward(Arch a, int learner, const Transition& t) {
  if (wiring(a).joint) return std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0);
  return t.rewards.at(static_cast<size_t>(learner));
}

std::vector<VecX> split_actions(Arch a, const std::vector<VecX>& learner_actions,
                                const std::vector<int>& dims) {
  if (!wiring(a).joint) return learner_actions;
  std::vector<VecX> out;
  Eigen::Index at = 0;
  for (int d : dims) {
    out.push_back(learner_actions.at(0).segment(at, d));
    at += d;
  }
  return out;
}

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig t;
  t.arch = parse_arch(cfg.get_string("train.arch", to_string(t.arch)));
  t.iterations = cfg.get_int("train.iterations", t.iterations);
  t.horizon = cfg.get_int("train.horizon", t.horizon);
  t.num_envs = cfg.get_int("train.num_envs", t.num_envs);
  t.threads = cfg.get_int("train.threads", t.threads);
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<int>(t.seed)));

  PpoConfig& p = t.ppo;
  p.gamma = cfg.get_double("ppo.gamma", p.gamma);
  p.lambda = cfg.get_double("ppo.lambda", p.lambda);
  p.clip = cfg.get_double("ppo.clip", p.clip);
  const double lr = cfg.get_double("ppo.lr", p.lr_actor);
  p.lr_actor = cfg.get_double("ppo.lr_actor", lr);
  p.lr_critic = cfg.get_double("ppo.lr_critic", lr);
  p.epochs = cfg.get_int("ppo.epochs", p.epochs);
  p.minibatches = cfg.get_int("ppo.minibatches", p.minibatches);
  p.entropy_coef = cfg.get_double("ppo.entropy_coef", p.entropy_coef);
  p.max_grad_norm = cfg.get_double("ppo.max_grad_norm", p.max_grad_norm);
  p.kl_abort = cfg.get_double("ppo.kl_abort", p.kl_abort);
  p.obs_clip = cfg.get_double("ppo.obs_clip", p.obs_clip);

  NetConfig& n = t.net;
  n.actor_hidden = cfg.get_ints("net.actor_hidden", n.actor_hidden);
  n.critic_hidden = cfg.get_ints("net.critic_hidden", n.critic_hidden);
  n.init_log_std = cfg.get_double("net.init_log_std", n.init_log_std);
  n.actor_output_scale = cfg.get_double("net.actor_output_scale", n.actor_output_scale);

  auto positive = [](int v, const char* key) {
    if (v < 1) throw ConfigError(std::string("field '") + key + "' must be >= 1");
  };
  positive(t.iterations, "train.iterations");
  positive(t.horizon, "train.horizon");
  positive(t.num_envs, "train.num_envs");
  positive(t.threads, "train.threads");
  positive(p.epochs, "ppo.epochs");
  positive(p.minibatches, "ppo.minibatches");
  if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw ConfigError("field 'ppo.gamma' must be in (0, 1]");
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) {
    throw ConfigError("field 'ppo.lambda' must be in [0, 1]");
  }
  for (int h : n.actor_hidden) positive(h, "net.actor_hidden");
  for (int h : n.critic_hidden) positive(h, "net.critic_hidden");
  return t;
}

Advantages gae(const MatX& rewards, const MatX& values, const MatX& dones,
               const VecX& bootstrap, double gamma, double lambda) {
  const Eigen::Index T = rewards.rows(), N = rewards.cols();
  if (values.rows() != T || values.cols() != N || dones.rows() != T || dones.cols() != N ||
      bootstrap.size() != N) {
    throw std::invalid_argument("gae: inconsistent shapes");
  }
  Advantages out{MatX(T, N), MatX(T, N)};
  for (Eigen::Index n = 0; n < N; ++n) {
    double next_value = bootstrap[n];
    double next_adv = 0.0;
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const double live = 1.0 - dones(t, n);
      const double delta = rewards(t, n) + gamma * live * next_value - values(t, n);
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages(t, n) = next_adv;
      next_value = values(t, n);
    }
  }
  out.returns = out.advantages + values;
  return out;
}

double advantage_variance(const VecX& a) {
  if (a.size() == 0) throw std::invalid_argument("advantage_variance: empty batch");
  const double mean = a.mean();
  return (a.array() - mean).square().mean();
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

Learner make_learner(const std::string& name, int actor_in, int critic_in, int action_dim,
                     const NetConfig& net, const PpoConfig& ppo, std::mt19937_64& rng) {
  Learner l;
  l.model.name = name;
  l.model.actor =
      GaussianPolicy(layer_sizes(actor_in, net.actor_hidden, action_dim), net.init_log_std);
  l.model.actor.mean_net().init(rng, net.actor_output_scale);
  l.model.critic = Mlp(layer_sizes(critic_in, net.critic_hidden, 1));
  l.model.critic.init(rng);
  l.model.actor_norm = RunningNorm(actor_in);
  l.model.critic_norm = RunningNorm(critic_in);
  l.actor_opt.lr = ppo.lr_actor;
  l.critic_opt.lr = ppo.lr_critic;
  return l;
}

PpoStats ppo_update(Learner& learner, const PpoBatch& b, const PpoConfig& cfg,
                    std::mt19937_64& rng) {
  GaussianPolicy& actor = learner.model.actor;
  Mlp& critic = learner.model.critic;
  const Eigen::Index B = b.actor_obs.rows();
  const Eigen::Index np = actor.mean_net().num_params();
  const int d = actor.action_dim();

  VecX adv = b.advantages;
  if (B > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().mean());
    adv = (adv.array() - mean) / (sd + 1e-8);
  }

  std::vector<Eigen::Index> perm(static_cast<size_t>(B));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  const size_t mb =
      std::max<size_t>(1, static_cast<size_t>(B) / static_cast<size_t>(cfg.minibatches));

  PpoStats s;
  int n_stats = 0;
  for (int epoch = 0; epoch < cfg.epochs && !s.kl_aborted; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (size_t start = 0; start < perm.size(); start += mb) {
      const size_t end = std::min(perm.size(), start + mb);
      const MatX x = gather(b.actor_obs, perm, start, end);
      const MatX act = gather(b.actions, perm, start, end);
      const VecX old_lp = gather(b.log_probs, perm, start, end);
      const VecX a = gather(adv, perm, start, end);
      const auto n = static_cast<double>(end - start);

      Mlp::Cache cache;
      const MatX mu = actor.mean_net().forward_batch(x, &cache);
      const VecX lp = gaussian_log_prob(mu, actor.log_std(), act);
      const Eigen::ArrayXd log_ratio = (lp - old_lp).array();
      const Eigen::ArrayXd ratio = log_ratio.exp();
      const double kl = ((ratio - 1.0) - log_ratio).mean();
      if (!std::isfinite(kl)) throw TrainingError("non-finite KL estimate for learner '" +
                                                  learner.model.name + "'");
      if (kl > cfg.kl_abort) {
        s.kl_aborted = true;
        s.kl = std::max(s.kl, kl);
        break;
      }

      const Eigen::ArrayXd inv_var = (-2.0 * actor.log_std().array()).exp();
      MatX d_mu(mu.rows(), d);
      VecX d_log_std = VecX::Constant(d, -cfg.entropy_coef);
      double surr = 0.0, clipped = 0.0;
      for (Eigen::Index i = 0; i < mu.rows(); ++i) {
        const double r = ratio[i];
        surr += clipped_surrogate(r, a[i], cfg.clip);
        if (std::abs(r - 1.0) > cfg.clip) clipped += 1.0;
        const double rc = std::clamp(r, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double coef = r * a[i] <= rc * a[i] ? -a[i] * r / n : 0.0;
        const Eigen::ArrayXd diff = (act.row(i) - mu.row(i)).transpose().array();
        d_mu.row(i) = (coef * diff * inv_var).matrix().transpose();
        d_log_std += (coef * (diff.square() * inv_var - 1.0)).matrix();
      }
      const double policy_loss = -surr / n - cfg.entropy_coef * actor.entropy();
      if (!std::isfinite(policy_loss)) {
        throw TrainingError("non-finite policy loss for learner '" + learner.model.name + "'");
      }

      VecX g_net = VecX::Zero(np);
      actor.mean_net().backward_batch(cache, d_mu, g_net);
      VecX g(np + d), p(np + d);
      g << g_net, d_log_std;
      p << actor.mean_net().params(), actor.log_std();
      clip_norm(g, cfg.max_grad_norm);
      learner.actor_opt.step(p, g);
      actor.mean_net().params() = p.head(np);
      actor.log_std() = p.tail(d);
      actor.clamp_log_std();

      const MatX cx = gather(b.critic_obs, perm, start, end);
      const VecX ret = gather(b.returns, perm, start, end);
      Mlp::Cache ccache;
      const VecX v = critic.forward_batch(cx, &ccache).col(0);
      const VecX err = v - ret;
      const double value_loss = 0.5 * err.squaredNorm() / n;
      if (!std::isfinite(value_loss)) {
        throw TrainingError("non-finite value loss for learner '" + learner.model.name + "'");
      }
      VecX g_c = VecX::Zero(critic.num_params());
      critic.backward_batch(ccache, err / n, g_c);
      clip_norm(g_c, cfg.max_grad_norm);
      learner.critic_opt.step(critic.params(), g_c);

      s.policy_loss += -surr / n;
      s.value_loss += value_loss;
      s.kl += kl;
      s.clip_fraction += clipped / n;
      ++n_stats;
      ++s.minibatch_updates;
    }
  }
  if (n_stats > 0) {
    s.policy_loss /= n_stats;
    s.value_loss /= n_stats;
    if (!s.kl_aborted) s.kl /= n_stats;
    s.clip_fraction /= n_stats;
  }
  s.entropy = actor.entropy();
  return s;
}

VecX surrogate_gradient(Arch a, int learner, const LearnerModel& model,
                        const std::vector<Transition>& transitions, const MatX& actions,
                        const VecX& old_log_probs, const VecX& advantages, double clip) {
  const auto B = static_cast<Eigen::Index>(transitions.size());
  MatX x(B, model.actor.mean_net().input_dim());
  for (Eigen::Index i = 0; i < B; ++i) {
    x.row(i) = actor_input(a, learner, transitions[static_cast<size_t>(i)]).transpose();
  }
  x = clip_rows(model.actor_norm.normalize(x), 10.0);
  Mlp::Cache cache;
  const MatX mu = model.actor.mean_net().forward_batch(x, &cache);
  const VecX lp = gaussian_log_prob(mu, model.actor.log_std(), actions);
  const Eigen::ArrayXd inv_var = (-2.0 * model.actor.log_std().array()).exp();
  MatX d_mu(B, mu.cols());
  for (Eigen::Index i = 0; i < B; ++i) {
    const double r = std::exp(lp[i] - old_log_probs[i]);
    const double rc = std::clamp(r, 1.0 - clip, 1.0 + clip);
    const double coef =
        r * advantages[i] <= rc * advantages[i] ? advantages[i] * r / static_cast<double>(B) : 0.0;
    d_mu.row(i) =
        (coef * (actions.row(i) - mu.row(i)).transpose().array() * inv_var).matrix().transpose();
  }
  VecX g = VecX::Zero(model.actor.mean_net().num_params());
  model.actor.mean_net().backward_batch(cache, d_mu, g);
  return g;
}

bool IterationMetrics::finite() const {
  if (!std::isfinite(r_vt_mean)) return false;
  for (const auto& l : learners) {
    for (double v : {l.reward_mean, l.adv_var, l.ppo.policy_loss, l.ppo.value_loss,
                     l.ppo.entropy, l.ppo.kl}) {
      if (!std::isfinite(v)) return false;
    }
  }
  for (const auto& c : components) {
    for (const auto& [k, v] : c) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::string metrics_csv_header(const IterationMetrics& m) {
  std::ostringstream h;
  h << "iteration,wall_clock_s[s],env_steps[steps],r_vt_mean[-],episode_return_mean[-],"
       "episode_length_mean[steps],episodes[count]";
  for (const auto& l : m.learners) {
    const std::string p = l.name + "_";
    h << ',' << p << "reward_mean[-]," << p << "adv_var[-]," << p << "policy_loss[-]," << p
      << "value_loss[-]," << p << "entropy[nats]," << p << "kl[nats]," << p
      << "clip_fraction[-]," << p << "kl_aborted[bool]";
  }
  for (size_t a = 0; a < m.components.size(); ++a) {
    for (const auto& [k, v] : m.components[a]) h << ',' << m.agent_names[a] << '.' << k << "[-]";
  }
  return h.str();
}

std::string metrics_csv_row(const IterationMetrics& m) {
  std::ostringstream r;
  r << m.iteration << ',' << fmt(m.wall_clock_s) << ',' << m.env_steps << ',' << fmt(m.r_vt_mean)
    << ',' << fmt(m.episode_return_mean) << ',' << fmt(m.episode_length_mean) << ','
    << m.episodes;
  for (const auto& l : m.learners) {
    r << ',' << fmt(l.reward_mean) << ',' << fmt(l.adv_var) << ',' << fmt(l.ppo.policy_loss)
      << ',' << fmt(l.ppo.value_loss) << ',' << fmt(l.ppo.entropy) << ',' << fmt(l.ppo.kl)
      << ',' << fmt(l.ppo.clip_fraction) << ',' << (l.ppo.kl_aborted ? 1 : 0);
  }
  for (const auto& c : m.components) {
    for (const auto& [k, v] : c) r << ',' << fmt(v);
  }
  return r.str();
}

struct Trainer::Rollout {
  int T = 0, N = 0;
  // Per learner, rows indexed t * N + n.
  std::vector<MatX> actor_raw, critic_raw, actor_obs, critic_obs, actions;
  std::vector<VecX> log_probs;
  std::vector<MatX> values, rewards;  // T x N
  std::vector<MatX> raw_rewards;      // T x N, without bootstrap terms
  std::vector<VecX> bootstrap;
  MatX dones;
  // Per environment.
  std::vector<double> tracking_sum;
  std::vector<std::vector<RewardComponents>> component_sum;
  std::vector<std::vector<double>> ep_returns;
  std::vector<std::vector<int>> ep_lengths;
};

Trainer::Trainer(EnvFactory factory, TrainConfig cfg, std::string task)
    : factory_(std::move(factory)), cfg_(std::move(cfg)), task_(std::move(task)) {
  const auto n = static_cast<size_t>(cfg_.num_envs);
  slots_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    slots_[i].env = factory_();
    slots_[i].rng.seed(mix(cfg_.seed, i, 0xac7));
  }
  const MultiAgentEnv& env = *slots_[0].env;
  for (int a = 0; a < env.num_agents(); ++a) {
    action_dims_.push_back(env.action_dim(a));
    agent_names_.push_back(env.agent_name(a));
  }
  std::mt19937_64 init_rng(mix(cfg_.seed, 0x1417));
  const Wiring w = wiring(cfg_.arch);
  const int L = armswing::num_learners(cfg_.arch, env.num_agents());
  for (int l = 0; l < L; ++l) {
    const int in_actor = w.actor == ObsSource::global ? env.global_obs_dim() : env.local_obs_dim(l);
    const int in_critic =
        w.critic == ObsSource::global ? env.global_obs_dim() : env.local_obs_dim(l);
    const int act = w.joint ? std::accumulate(action_dims_.begin(), action_dims_.end(), 0)
                            : action_dims_[static_cast<size_t>(l)];
    learners_.push_back(make_learner(w.joint ? "joint" : agent_names_[static_cast<size_t>(l)],
                                     in_actor, in_critic, act, cfg_.net, cfg_.ppo, init_rng));
  }
  update_rng_.seed(mix(cfg_.seed, 0x0bd));
  for (size_t i = 0; i < n; ++i) reset_slot(slots_[i], static_cast<int>(i));
  start_ = std::chrono::steady_clock::now();
}

void Trainer::reset_slot(EnvSlot& slot, int index) const {
  slot.current = slot.env->reset(mix(cfg_.seed, static_cast<std::uint64_t>(index), slot.episodes));
  ++slot.episodes;
  slot.ep_return = 0.0;
  slot.ep_length = 0;
}

void Trainer::collect(Rollout& r, int b, int e) {
  const int L = num_learners();
  const Arch arch = cfg_.arch;
  const int n = e - b;
  auto& slots = slots_;
  for (int t = 0; t < r.T; ++t) {
    std::vector<MatX> mean(static_cast<size_t>(L));
    std::vector<VecX> value(static_cast<size_t>(L));
    for (int l = 0; l < L; ++l) {
      const auto li = static_cast<size_t>(l);
      const LearnerModel& m = learners_[li].model;
      MatX xa(n, m.actor.mean_net().input_dim()), xc(n, m.critic.input_dim());
      for (int i = 0; i < n; ++i) {
        const Transition& cur = slots[static_cast<size_t>(b + i)].current;
        xa.row(i) = actor_input(arch, l, cur).transpose();
        xc.row(i) = critic_input(arch, l, cur).transpose();
      }
      const MatX na = clip_rows(m.actor_norm.normalize(xa), cfg_.ppo.obs_clip);
      const MatX nc = clip_rows(m.critic_norm.normalize(xc), cfg_.ppo.obs_clip);
      mean[li] = m.actor.mean_net().forward_batch(na);
      value[li] = m.critic.forward_batch(nc).col(0);
      const Eigen::Index row0 = static_cast<Eigen::Index>(t) * r.N + b;
      r.actor_raw[li].middleRows(row0, n) = xa;
      r.critic_raw[li].middleRows(row0, n) = xc;
      r.actor_obs[li].middleRows(row0, n) = na;
      r.critic_obs[li].middleRows(row0, n) = nc;
      r.values[li].row(t).segment(b, n) = value[li].transpose();
    }

    for (int i = 0; i < n; ++i) {
      const int env_index = b + i;
      EnvSlot& slot = slots[static_cast<size_t>(env_index)];
      const Eigen::Index row = static_cast<Eigen::Index>(t) * r.N + env_index;
      std::normal_distribution<double> noise;
      std::vector<VecX> acts(static_cast<size_t>(L));
      for (int l = 0; l < L; ++l) {
        const auto li = static_cast<size_t>(l);
        const GaussianPolicy& actor = learners_[li].model.actor;
        VecX a = mean[li].row(i).transpose();
        for (Eigen::Index k = 0; k < a.size(); ++k) {
          a[k] += std::exp(actor.log_std()[k]) * noise(slot.rng);
        }
        r.actions[li].row(row) = a.transpose();
        r.log_probs[li][row] =
            gaussian_log_prob(mean[li].row(i), actor.log_std(), a.transpose())[0];
        acts[li] = std::move(a);
      }

      Transition next = slot.env->step(split_actions(arch, acts, action_dims_));
      const bool done = next.terminated || next.truncated;
      for (int l = 0; l < L; ++l) {
        double rew = learner_reward(arch, l, next);
        r.raw_rewards[static_cast<size_t>(l)](t, env_index) = rew;
        if (next.truncated && !next.terminated) {
          const LearnerModel& m = learners_[static_cast<size_t>(l)].model;
          const VecX c = clip_rows(m.critic_norm.normalize(MatX(critic_input(arch, l, next).transpose())),
                                   cfg_.ppo.obs_clip)
                             .row(0)
                             .transpose();
          rew += cfg_.ppo.gamma * m.critic.forward(c)[0];
        }
        r.rewards[static_cast<size_t>(l)](t, env_index) = rew;
      }
      r.dones(t, env_index) = done ? 1.0 : 0.0;

      r.tracking_sum[static_cast<size_t>(env_index)] += next.tracking;
      auto& comp = r.component_sum[static_cast<size_t>(env_index)];
      if (comp.empty()) {
        comp = next.components;
        for (auto& c : comp) {
          for (auto& kv : c) kv.second = 0.0;
        }
      }
      for (size_t a = 0; a < comp.size(); ++a) {
        for (size_t k = 0; k < comp[a].size(); ++k) comp[a][k].second += next.components[a][k].second;
      }
      slot.ep_return += std::accumulate(next.rewards.begin(), next.rewards.end(), 0.0);
      ++slot.ep_length;
      if (done) {
        r.ep_returns[static_cast<size_t>(env_index)].push_back(slot.ep_return);
        r.ep_lengths[static_cast<size_t>(env_index)].push_back(slot.ep_length);
        reset_slot(slot, env_index);
      } else {
        slot.current = std::move(next);
      }
    }
  }

  for (int l = 0; l < L; ++l) {
    const auto li = static_cast<size_t>(l);
    const LearnerModel& m = learners_[li].model;
    MatX xc(n, m.critic.input_dim());
    for (int i = 0; i < n; ++i) {
      xc.row(i) = critic_input(arch, l, slots[static_cast<size_t>(b + i)].current).transpose();
    }
    r.bootstrap[li].segment(b, n) =
        m.critic.forward_batch(clip_rows(m.critic_norm.normalize(xc), cfg_.ppo.obs_clip)).col(0);
  }
}

IterationMetrics Trainer::iterate() {
  const int L = num_learners();
  const int T = cfg_.horizon, N = cfg_.num_envs;
  const Eigen::Index rows = static_cast<Eigen::Index>(T) * N;
  Rollout r;
  r.T = T;
  r.N = N;
  for (int l = 0; l < L; ++l) {
    const LearnerModel& m = learners_[static_cast<size_t>(l)].model;
    const int da = m.actor.mean_net().input_dim(), dc = m.critic.input_dim();
    r.actor_raw.emplace_back(rows, da);
    r.critic_raw.emplace_back(rows, dc);
    r.actor_obs.emplace_back(rows, da);
    r.critic_obs.emplace_back(rows, dc);
    r.actions.emplace_back(rows, m.actor.action_dim());
    r.log_probs.emplace_back(rows);
    r.values.emplace_back(T, N);
    r.rewards.emplace_back(T, N);
    r.raw_rewards.emplace_back(T, N);
    r.bootstrap.emplace_back(N);
  }
  r.dones = MatX::Zero(T, N);
  r.tracking_sum.assign(static_cast<size_t>(N), 0.0);
  r.component_sum.resize(static_cast<size_t>(N));
  r.ep_returns.resize(static_cast<size_t>(N));
  r.ep_lengths.resize(static_cast<size_t>(N));

  const int threads = std::clamp(cfg_.threads, 1, N);
  if (threads == 1) {
    collect(r, 0, N);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    for (int k = 0; k < threads; ++k) {
      const int b = N * k / threads, e = N * (k + 1) / threads;
      pool.emplace_back([&, k, b, e] {
        try {
          collect(r, b, e);
        } catch (...) {
          errors[static_cast<size_t>(k)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  IterationMetrics out;
  out.iteration = ++iteration_;
  out.agent_names = agent_names_;
  for (int l = 0; l < L; ++l) {
    const auto li = static_cast<size_t>(l);
    Learner& learner = learners_[li];
    const Advantages adv =
        gae(r.rewards[li], r.values[li], r.dones, r.bootstrap[li], cfg_.ppo.gamma, cfg_.ppo.lambda);
    PpoBatch batch;
    batch.actor_obs = std::move(r.actor_obs[li]);
    batch.critic_obs = std::move(r.critic_obs[li]);
    batch.actions = std::move(r.actions[li]);
    batch.log_probs = std::move(r.log_probs[li]);
    batch.advantages.resize(rows);
    batch.returns.resize(rows);
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n) {
        const Eigen::Index row = static_cast<Eigen::Index>(t) * N + n;
        batch.advantages[row] = adv.advantages(t, n);
        batch.returns[row] = adv.returns(t, n);
      }
    }
    LearnerMetrics lm;
    lm.name = learner.model.name;
    lm.reward_mean = r.raw_rewards[li].mean();
    lm.adv_var = advantage_variance(batch.advantages);
    lm.ppo = ppo_update(learner, batch, cfg_.ppo, update_rng_);
    out.learners.push_back(lm);

    learner.model.actor_norm.update_batch(r.actor_raw[li]);
    learner.model.critic_norm.update_batch(r.critic_raw[li]);
  }

  double tracking = 0.0;
  double ret = 0.0, len = 0.0;
  for (int n = 0; n < N; ++n) {
    const auto ni = static_cast<size_t>(n);
    tracking += r.tracking_sum[ni];
    for (size_t k = 0; k < r.ep_returns[ni].size(); ++k) {
      ret += r.ep_returns[ni][k];
      len += r.ep_lengths[ni][k];
      ++out.episodes;
    }
    if (out.components.empty()) {
      out.components = r.component_sum[ni];
    } else {
      for (size_t a = 0; a < out.components.size(); ++a) {
        for (size_t k = 0; k < out.components[a].size(); ++k) {
          out.components[a][k].second += r.component_sum[ni][a][k].second;
        }
      }
    }
  }
  const auto total = static_cast<double>(rows);
  out.r_vt_mean = tracking / total;
  for (auto& c : out.components) {
    for (auto& kv : c) kv.second /= total;
  }
  if (out.episodes > 0) {
    out.episode_return_mean = ret / out.episodes;
    out.episode_length_mean = len / out.episodes;
  }
  out.env_steps = static_cast<long>(iteration_) * static_cast<long>(rows);
  out.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return out;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.arch = to_string(cfg_.arch);
  c.task = task_;
  for (const auto& l : learners_) c.learners.push_back(l.model);
  return c;
}

void Trainer::load(const Checkpoint& ckpt) {
  if (ckpt.arch != to_string(cfg_.arch) || ckpt.learners.size() != learners_.size()) {
    throw CheckpointError("checkpoint architecture '" + ckpt.arch +
                          "' does not match trainer architecture '" + to_string(cfg_.arch) + "'");
  }
  for (size_t i = 0; i < learners_.size(); ++i) {
    const LearnerModel& src = ckpt.learners[i];
    LearnerModel& dst = learners_[i].model;
    if (src.actor.mean_net().sizes() != dst.actor.mean_net().sizes() ||
        src.critic.sizes() != dst.critic.sizes()) {
      throw CheckpointError("checkpoint network shapes do not match learner '" + dst.name + "'");
    }
    dst = src;
    learners_[i].actor_opt.reset();
    learners_[i].critic_opt.reset();
  }
}

std::vector<IterationMetrics> train(
    const EnvFactory& factory, const TrainConfig& cfg, const std::string& task,
    const std::function<void(const IterationMetrics&, const Trainer&)>& on_iteration) {
  Trainer trainer(factory, cfg, task);
  std::vector<IterationMetrics> out;
  for (int i = 0; i < cfg.iterations; ++i) {
    out.push_back(trainer.iterate());
    if (on_iteration) on_iteration(out.back(), trainer);
  }
  return out;
}

namespace {

std::string dims_text(const std::vector<int>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

}  // namespace

PolicyRunner::PolicyRunner(Checkpoint ckpt, const MultiAgentEnv& env)
    : ckpt_(std::move(ckpt)), arch_(parse_arch(ckpt_.arch)), obs_clip_(PpoConfig{}.obs_clip) {
  const Wiring w = wiring(arch_);
  std::vector<int> want_in, want_out, have_in, have_out;
  for (int a = 0; a < env.num_agents(); ++a) action_dims_.push_back(env.action_dim(a));
  const int L = armswing::num_learners(arch_, env.num_agents());
  for (int l = 0; l < L; ++l) {
    want_in.push_back(w.actor == ObsSource::global ? env.global_obs_dim() : env.local_obs_dim(l));
    want_out.push_back(w.joint ? std::accumulate(action_dims_.begin(), action_dims_.end(), 0)
                               : action_dims_[static_cast<size_t>(l)]);
  }
  for (const auto& l : ckpt_.learners) {
    have_in.push_back(l.actor.mean_net().input_dim());
    have_out.push_back(l.actor.action_dim());
  }
  if (want_in != have_in || want_out != have_out) {
    throw CheckpointError("checkpoint does not fit the environment: checkpoint actor inputs " +
                          dims_text(have_in) + ", actions " + dims_text(have_out) +
                          "; environment actor inputs " + dims_text(want_in) + ", actions " +
                          dims_text(want_out));
  }
}

std::vector<VecX> PolicyRunner::act(const Transition& t, std::mt19937_64* rng) const {
  std::vector<VecX> acts;
  for (size_t l = 0; l < ckpt_.learners.size(); ++l) {
    const LearnerModel& m = ckpt_.learners[l];
    const VecX x = m.actor_norm.normalize(actor_input(arch_, static_cast<int>(l), t))
                       .cwiseMax(-obs_clip_)
                       .cwiseMin(obs_clip_);
    acts.push_back(rng ? m.actor.sample(x, *rng) : m.actor.mean(x));
  }
  return split_actions(arch_, acts, action_dims_);
}

double evaluate_return(const PolicyRunner& runner, MultiAgentEnv& env, int episodes,
                       std::uint64_t seed, int max_steps) {
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Transition t = env.reset(mix(seed, static_cast<std::uint64_t>(e), 0xe7a1));
    for (int k = 0; k < max_steps; ++k) {
      t = env.step(runner.act(t));
      total += std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0);
      if (t.terminated || t.truncated) break;
    }
  }
  return total / std::max(1, episodes);
}

}  // namespace armswing
