// Acceptance runner: one PASS/FAIL line per criterion, grouped in suites.
//
//   acceptance --suite dynamics|rewards|learning|archcompare|pipeline|long
//              [--out DIR] [--long]
//
// The long suite takes hours and only runs with --long; otherwise it reports
// NOT RUN. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "armswing/experiments.hpp"
#include "armswing/toy_envs.hpp"

using namespace armswing;
namespace fs = std::filesystem;

namespace {

struct Report {
  std::string suite;
  int failed = 0;

  void line(const std::string& criterion, bool ok, const std::string& detail) {
    std::printf("%s  [%s] %s: %s\n", ok ? "PASS" : "FAIL", suite.c_str(), criterion.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  void not_run(const std::string& criterion, const std::string& why) {
    std::printf("NOT RUN  [%s] %s: %s\n", suite.c_str(), criterion.c_str(), why.c_str());
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Config bundled(const std::string& file) {
  return Config::load(std::string(ARMSWING_CONFIG_DIR) + "/" + file);
}

// ------------------------------------------------------------------ dynamics

void dynamics_suite(Report& r) {
  Stopwatch clock;
  const RobotModel model = load_model_file(default_model_path());
  const auto checks = validation::run_dynamics_suite(model, 2024);
  auto find = [&](const std::string& name) -> const validation::CheckResult* {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  };
  const std::pair<const char*, const char*> rows[] = {
      {"cmm brute-force equivalence", "CMM matches brute-force momentum, 1000 states, rel err < 1e-9"},
      {"limb decomposition additivity", "base + legs + arms momentum equals total, 1000 states, < 1e-10"},
      {"momentum conservation", "contact-free gravity-free 1 s rollout, |dh_G| < 1e-8"},
      {"newton-euler consistency", "walking rollout dh_G/dt matches external wrench within 2%"},
      {"momentum rate bias vs finite difference", "Adot qd finite-difference check, 100 states, < 1e-4"},
      {"reference momentum, zero command", "zero command gives exactly zero reference momentum"},
      {"reference momentum, column-slice oracle", "reference momentum matches column-slice oracle < 1e-12"},
  };
  for (const auto& [name, label] : rows) {
    const auto* c = find(name);
    if (!c) {
      r.line(label, false, "check missing from the suite");
      continue;
    }
    r.line(label, c->passed, "measured " + num(c->measured) + ", limit " + num(c->threshold));
  }
  r.line("suite runtime < 2 min", clock.seconds() < 120.0, num(clock.seconds()) + " s");
}

// ------------------------------------------------------------------ rewards

void rewards_suite(Report& r) {
  Stopwatch clock;
  const double sigma = 0.25;
  {
    const double at_zero = velocity_tracking_reward({0.7, -0.2, 0.4}, Vec3(0.7, -0.2, 0.4), sigma);
    // Command 1 against 0: normalized error 1 / (1 + 1) = 0.5, so exponent -1.
    const double half = velocity_tracking_reward({1.0, 0.0, 0.0}, Vec3::Zero(), sigma);
    const double cam_zero = cam_reward(0.3, 0.3, sigma);
    const double cam_half = cam_reward(1.0, 0.0, sigma);
    const bool ok = std::abs(at_zero - 1.0) <= 1e-12 && std::abs(half - std::exp(-1.0)) <= 1e-12 &&
                    std::abs(cam_zero - 1.0) <= 1e-12 && std::abs(cam_half - std::exp(-1.0)) <= 1e-12;
    r.line("tracking rewards: 1 at zero error, e^-1 at 50% normalized error (sigma 0.25)", ok,
           "vt " + num(at_zero) + " / " + num(half) + ", cam " + num(cam_zero) + " / " +
               num(cam_half));
  }
  {
    struct Case {
      Vec2 k, kdot;
      double want;
    };
    const Case cases[] = {
        {{1.0, 0.0}, {-2.0, 0.0}, 2.0},   // shrinking: rewarded by -k.kdot
        {{0.5, -1.0}, {1.0, -0.5}, 0.0},  // growing: nothing
        {{0.0, 0.0}, {3.0, 1.0}, 0.0},    // zero momentum
        {{1.0, 1.0}, {1.0, -1.0}, 0.0},   // orthogonal
        {{0.3, 0.4}, {-0.3, -0.4}, 0.25},
    };
    double worst = 0.0;
    for (const auto& c : cases) worst = std::max(worst, std::abs(cam_damping_reward(c.k, c.kdot) - c.want));
    r.line("CAM damping reward sign and zero cases", worst <= 1e-12, "max error " + num(worst));
  }
  {
    struct Case {
      bool right, left;
      double phi, want;
    };
    const Case table[] = {
        {true, false, 1.0, 1.0},   {false, true, 1.0, -1.0}, {true, true, 1.0, 0.0},
        {false, false, 1.0, 0.0},  {true, false, -1.0, -1.0}, {false, true, -1.0, 1.0},
        {true, false, 0.5, 0.5},   {false, true, 0.0, 0.0},
    };
    double worst = 0.0;
    for (const auto& c : table) {
      worst = std::max(worst, std::abs(contact_schedule_reward(c.right, c.left, c.phi) - c.want));
    }
    r.line("contact schedule indicator table", worst <= 1e-12, "max error " + num(worst));
  }
  r.line("suite runtime < 10 s", clock.seconds() < 10.0, num(clock.seconds()) + " s");
}

// ------------------------------------------------------------------ learning

double rel(const VecX& a, const VecX& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

void learning_suite(Report& r, const fs::path& out) {
  Stopwatch clock;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  {
    Mlp net({5, 12, 8, 3});
    net.init(rng);
    VecX x(5), g(3);
    for (auto& v : x) v = n(rng);
    for (auto& v : g) v = n(rng);
    const VecX analytic = net.backward(x, g);
    VecX fd(net.num_params());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < net.num_params(); ++i) {
      const double keep = net.params()[i];
      net.params()[i] = keep + h;
      const double up = g.dot(net.forward(x));
      net.params()[i] = keep - h;
      const double down = g.dot(net.forward(x));
      net.params()[i] = keep;
      fd[i] = (up - down) / (2 * h);
    }
    const double e = rel(analytic, fd);
    r.line("MLP parameter gradient vs central differences, rel err < 1e-4", e < 1e-4, num(e));
  }
  {
    GaussianPolicy pi({4, 10, 2}, -0.7);
    pi.mean_net().init(rng, 1.0);
    pi.log_std() << -0.3, 0.2;
    VecX x(4), a(2);
    for (auto& v : x) v = n(rng);
    for (auto& v : a) v = n(rng);
    VecX g_net = VecX::Zero(pi.mean_net().num_params()), g_std = VecX::Zero(2);
    pi.log_prob_gradient(x, a, g_net, g_std);
    VecX analytic(g_net.size() + 2), fd(g_net.size() + 2);
    analytic << g_net, g_std;
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      double& p = i < g_net.size() ? pi.mean_net().params()[i] : pi.log_std()[i - g_net.size()];
      const double keep = p;
      p = keep + h;
      const double up = pi.log_prob(x, a);
      p = keep - h;
      const double down = pi.log_prob(x, a);
      p = keep;
      fd[i] = (up - down) / (2 * h);
    }
    const double e = rel(analytic, fd);
    r.line("Gaussian log-prob gradient vs central differences, rel err < 1e-4", e < 1e-4, num(e));
  }
  {
    MatX rew = MatX::Ones(3, 1), val = MatX::Zero(3, 1), done = MatX::Zero(3, 1);
    done(2, 0) = 1.0;
    const Advantages a = gae(rew, val, done, VecX::Zero(1), 0.9, 0.9);
    // Sum of (gamma lambda)^l over the remaining steps with unit TD errors.
    const double want[] = {1.0 + 0.81 + 0.81 * 0.81, 1.0 + 0.81, 1.0};
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) worst = std::max(worst, std::abs(a.advantages(t, 0) - want[t]));
    r.line("GAE three-step hand case (r = 1, V = 0, gamma = lambda = 0.9)", worst <= 1e-12,
           "advantages " + num(a.advantages(0, 0)) + ", " + num(a.advantages(1, 0)) + ", " +
               num(a.advantages(2, 0)) + "; max error " + num(worst));
  }
  {
    const int T = 10;
    MatX rew(T, 1), val(T, 1), done = MatX::Zero(T, 1);
    for (int t = 0; t < T; ++t) rew(t, 0) = n(rng), val(t, 0) = n(rng);
    done(T - 1, 0) = 1.0;
    const Advantages a = gae(rew, val, done, VecX::Zero(1), 1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
      double ret = 0.0;
      for (int k = t; k < T; ++k) ret += rew(k, 0);
      worst = std::max(worst, std::abs(a.returns(t, 0) - ret));
    }
    r.line("GAE with lambda = gamma = 1 equals Monte-Carlo returns", worst <= 1e-12,
           "max error " + num(worst));
  }
  {
    NetConfig net;
    net.actor_hidden = {16};
    net.critic_hidden = {16};
    PpoConfig ppo;
    ppo.epochs = 1;
    ppo.minibatches = 1;
    std::mt19937_64 init(3);
    Learner l = make_learner("a", 3, 3, 2, net, ppo, init);
    const int B = 64;
    PpoBatch b;
    b.actor_obs.resize(B, 3);
    b.actions.resize(B, 2);
    b.advantages.resize(B);
    for (int i = 0; i < B; ++i) {
      for (int k = 0; k < 3; ++k) b.actor_obs(i, k) = n(rng);
      const VecX mu = l.model.actor.mean(b.actor_obs.row(i).transpose());
      for (int k = 0; k < 2; ++k) b.actions(i, k) = mu[k] + 0.4 * n(rng);
      b.advantages[i] = n(rng);
    }
    b.critic_obs = b.actor_obs;
    b.returns = VecX::Zero(B);
    MatX mu(B, 2);
    for (int i = 0; i < B; ++i) mu.row(i) = l.model.actor.mean(b.actor_obs.row(i).transpose()).transpose();
    b.log_probs = gaussian_log_prob(mu, l.model.actor.log_std(), b.actions);
    // Mean log-prob of the actions whose advantage is above the batch mean.
    const double cut = b.advantages.mean();
    auto favoured = [&] {
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < B; ++i) {
        if (b.advantages[i] <= cut) continue;
        sum += l.model.actor.log_prob(b.actor_obs.row(i).transpose(), b.actions.row(i).transpose());
        ++count;
      }
      return sum / count;
    };
    const double before = favoured();
    ppo_update(l, b, ppo, rng);
    const double after = favoured();
    r.line("PPO update raises the log-prob of positively advantaged actions", after > before,
           "mean over favoured actions " + num(before) + " -> " + num(after));
  }
  {
    TrainConfig cfg;
    cfg.arch = Arch::ctde;
    cfg.num_envs = 4;
    cfg.horizon = 16;
    cfg.net.actor_hidden = {32, 16};
    cfg.net.critic_hidden = {32, 16};
    Trainer trainer([] { return std::make_unique<ToyCoopEnv>(); }, cfg, "toy-coop");
    trainer.iterate();
    fs::create_directories(out);
    const std::string a = (out / "roundtrip-a.bin").string(), b = (out / "roundtrip-b.bin").string();
    const Checkpoint original = trainer.checkpoint();
    save_checkpoint(a, original);
    const Checkpoint loaded = load_checkpoint(a);
    save_checkpoint(b, loaded);
    bool same = loaded.arch == original.arch && loaded.task == original.task &&
                loaded.learners.size() == original.learners.size();
    for (size_t i = 0; same && i < loaded.learners.size(); ++i) {
      const auto &x = original.learners[i], &y = loaded.learners[i];
      same = x.actor.mean_net().params() == y.actor.mean_net().params() &&
             x.actor.log_std() == y.actor.log_std() && x.critic.params() == y.critic.params() &&
             x.actor_norm.mean() == y.actor_norm.mean() && x.actor_norm.var() == y.actor_norm.var() &&
             x.critic_norm.mean() == y.critic_norm.mean() && x.critic_norm.var() == y.critic_norm.var();
    }
    const bool bytes = git_blob_sha1(a) == git_blob_sha1(b);
    r.line("checkpoint round trip is bit-exact", same && bytes,
           std::string("parameters ") + (same ? "identical" : "differ") + ", re-saved file " +
               (bytes ? "identical" : "differs"));
  }
  r.line("suite runtime < 5 min", clock.seconds() < 300.0, num(clock.seconds()) + " s");
}

// ------------------------------------------------------------------ arch compare

// Arm-actor gradient before and after perturbing everything the arm agent
// does not observe locally.
double locality_change(MultiAgentEnv& env, Arch arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<Transition> base, moved;
  Transition t = env.reset(seed);
  for (int i = 0; i < 32; ++i) {
    std::vector<VecX> acts;
    for (int a = 0; a < env.num_agents(); ++a) {
      VecX v(env.action_dim(a));
      for (auto& x : v) x = 0.1 * n(rng);
      acts.push_back(v);
    }
    t = env.step(acts);
    if (t.terminated || t.truncated) t = env.reset(seed + static_cast<std::uint64_t>(i) + 1);
    base.push_back(t);
    Transition p = t;
    for (size_t a = 1; a < p.obs.size(); ++a) {
      for (auto& x : p.obs[a]) x += n(rng);
    }
    for (auto& x : p.global_obs) x += n(rng);
    moved.push_back(p);
  }
  const Wiring w = wiring(arch);
  const int in = w.actor == ObsSource::global ? env.global_obs_dim() : env.local_obs_dim(0);
  NetConfig net;
  net.actor_hidden = {32};
  net.critic_hidden = {32};
  net.actor_output_scale = 1.0;
  std::mt19937_64 init(seed + 7);
  const Learner l = make_learner("arm", in, env.global_obs_dim(), env.action_dim(0), net, {}, init);
  const auto B = static_cast<Eigen::Index>(base.size());
  MatX actions(B, env.action_dim(0)), mu(B, env.action_dim(0));
  VecX adv(B);
  for (Eigen::Index i = 0; i < B; ++i) {
    mu.row(i) = l.model.actor.mean(actor_input(arch, 0, base[static_cast<size_t>(i)])).transpose();
    for (Eigen::Index k = 0; k < actions.cols(); ++k) actions(i, k) = mu(i, k) + 0.3 * n(rng);
    adv[i] = n(rng);
  }
  const VecX lp = gaussian_log_prob(mu, l.model.actor.log_std(), actions);
  const VecX g0 = surrogate_gradient(arch, 0, l.model, base, actions, lp, adv, 0.2);
  const VecX g1 = surrogate_gradient(arch, 0, l.model, moved, actions, lp, adv, 0.2);
  return (g1 - g0).cwiseAbs().maxCoeff();
}

void archcompare_suite(Report& r, const fs::path& out) {
  ExperimentOptions opt;
  opt.config = bundled("toy_coop.cfg");
  opt.out = out;
  opt.name = "toy-coop";
  opt.deterministic = true;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  const int iterations = opt.config.get_int("train.iterations", 300);

  Stopwatch clock;
  const ArchCompareResult res = cmd_toy_coop(opt, seeds, iterations);
  const double minutes = clock.seconds() / 60.0;
  const ArchSummary *single = res.find(Arch::single), *dtde = res.find(Arch::dtde),
                    *ctde = res.find(Arch::ctde);
  const bool complete = single && dtde && ctde && single->seeds == 10 && dtde->seeds == 10 &&
                        ctde->seeds == 10;
  std::string vt = "median final r_vt ctde " + num(ctde->median_final_r_vt) + ", dtde " +
                   num(dtde->median_final_r_vt) + ", single " + num(single->median_final_r_vt);
  r.line("CTDE median final r_vt >= DTDE >= Single (10 seeds, toy-coop)",
         complete && ctde->median_final_r_vt >= dtde->median_final_r_vt &&
             dtde->median_final_r_vt >= single->median_final_r_vt,
         vt);
  r.line("CTDE median final advantage variance < DTDE (arm agent, 10 seeds)",
         complete && ctde->median_final_adv_var < dtde->median_final_adv_var,
         "ctde " + num(ctde->median_final_adv_var) + ", dtde " + num(dtde->median_final_adv_var));

  ToyCoopEnv toy;
  auto model = std::make_shared<const RobotModel>(load_model_file(default_model_path()));
  LocomotionEnv humanoid(model, EnvConfig::from_config(bundled("humanoid.cfg")));
  const double toy_ctde = locality_change(toy, Arch::ctde, 1);
  const double hum_ctde = locality_change(humanoid, Arch::ctde, 2);
  const double toy_ctce = locality_change(toy, Arch::ctce, 1);
  r.line("CTDE actor gradient unchanged when other-agent observations are perturbed",
         toy_ctde == 0.0 && hum_ctde == 0.0 && toy_ctce > 0.0,
         "max change toy " + num(toy_ctde) + ", humanoid " + num(hum_ctde) +
             " (ctce control " + num(toy_ctce) + ")");
  r.line("suite runtime within 60 min", minutes <= 60.0, num(minutes) + " min");
}

// ------------------------------------------------------------------ pipeline

void pipeline_suite(Report& r, const fs::path& out) {
  Stopwatch clock;
  ExperimentOptions opt;
  opt.config = bundled("humanoid.cfg");
  opt.config.set("train.iterations", "20");
  opt.config.set("train.arch", "ctde");
  opt.out = out;
  opt.name = "pipeline-ctde";
  opt.deterministic = true;
  bool trained = false;
  std::string detail;
  try {
    const TrainResult res = cmd_train(opt);
    bool finite = res.metrics.size() == 20;
    for (const auto& m : res.metrics) finite = finite && m.finite();
    trained = finite && fs::exists(res.dir / "ckpt-final.bin") && fs::exists(res.dir / "metrics.csv");
    detail = std::to_string(res.metrics.size()) + " iterations, final r_vt " +
             num(res.metrics.back().r_vt_mean) + (finite ? ", metrics finite" : ", NON-FINITE metrics");
  } catch (const std::exception& e) {
    detail = std::string("failed: ") + e.what();
  }
  r.line("train --arch ctde on the mini-humanoid for 20 iterations, metrics finite", trained, detail);

  {
    const Task task = make_task(bundled("humanoid.cfg"));
    LocomotionEnv env(task.model, task.env);
    env.reset_full(5);
    env.set_command_resampling(false);
    env.set_command({});
    bool fell = false;
    while (env.episode_time() < 2.0 - 1e-9 && !fell) {
      fell = env.act(VecX::Zero(task.model->n_arm()), VecX::Zero(task.model->n_leg())).terminated;
    }
    r.line("zero-action PD baseline stands for >= 2 s", !fell,
           "stood " + num(env.episode_time()) + " s");
  }

  {
    // The untrained policy's near-zero residuals reproduce the standing PD
    // baseline, which makes it the stable reference policy.
    const Task task = make_task(bundled("humanoid.cfg"));
    Config c = bundled("humanoid.cfg");
    TrainConfig tc = TrainConfig::from_config(c);
    tc.num_envs = 1;
    Trainer untrained(task.factory, tc, task.name);
    fs::create_directories(out / "pipeline-untrained");
    const std::string untrained_path = (out / "pipeline-untrained" / "ckpt-final.bin").string();
    save_checkpoint(untrained_path, untrained.checkpoint());
    const std::string trained_path = (out / "pipeline-ctde" / "ckpt-final.bin").string();

    ExperimentOptions popt;
    popt.config = bundled("humanoid.cfg");
    popt.out = out;
    popt.name = "pipeline-push-grid";
    popt.deterministic = true;
    try {
      std::vector<std::string> ckpts{untrained_path};
      if (fs::exists(trained_path)) ckpts.push_back(trained_path);
      const PushGridResult g = cmd_push_grid(popt, ckpts, 5);
      const size_t mid = 2;  // 5 x 5 grid: index 2 is zero torque
      const bool stable_ok = g.policies[0].success[mid][mid];
      std::string d = "untrained " + std::to_string(g.policies[0].successes()) + "/25 cells, zero cell " +
                      (stable_ok ? "ok" : "FAILED");
      if (g.policies.size() > 1) {
        d += "; briefly trained " + std::to_string(g.policies[1].successes()) + "/25, zero cell " +
             (g.policies[1].success[mid][mid] ? "ok" : "failed");
      }
      r.line("push-grid on untrained and briefly trained checkpoints, zero-disturbance cell "
             "succeeds for the stable policy",
             stable_ok && g.policies.size() == ckpts.size() && ckpts.size() == 2, d);
    } catch (const std::exception& e) {
      r.line("push-grid on untrained and briefly trained checkpoints", false,
             std::string("failed: ") + e.what());
    }
  }
  r.line("suite runtime < 10 min", clock.seconds() < 600.0, num(clock.seconds()) + " s");
}

// ------------------------------------------------------------------ long

void long_suite(Report& r, const fs::path& out, bool enabled) {
  const char* criteria[] = {
      "CTDE mini-humanoid training reaches mean r_vt > 0.7",
      "cam-trace: arm k_z anti-phase with leg k_z (negative correlation)",
      "grm-dist: peak |m_z| with arm swing < with fixed arms",
  };
  if (!enabled) {
    for (const char* c : criteria) r.not_run(c, "hours of training; pass --long to run");
    return;
  }
  auto train_until = [&](const std::string& name, const std::string& task, double& final_vt) {
    ExperimentOptions opt;
    opt.config = bundled("humanoid.cfg");
    opt.config.set("task", task);
    opt.config.set("train.iterations", std::to_string(opt.config.get_int("long.max_iterations", 3000)));
    opt.out = out;
    opt.name = name;
    opt.deterministic = true;
    const TrainResult res = cmd_train(opt);
    std::vector<double> vt;
    for (const auto& m : res.metrics) vt.push_back(m.r_vt_mean);
    final_vt = tail_mean(vt);
    return (res.dir / "ckpt-final.bin").string();
  };
  double vt_arms = 0.0, vt_fixed = 0.0;
  const std::string arms = train_until("long-ctde", "humanoid", vt_arms);
  r.line(criteria[0], vt_arms > 0.7, "final r_vt " + num(vt_arms));
  const std::string fixed = train_until("long-ctde-fixed-arms", "humanoid-fixed-arms", vt_fixed);

  ExperimentOptions opt;
  opt.config = bundled("humanoid.cfg");
  opt.out = out;
  opt.deterministic = true;
  opt.name = "long-cam-trace";
  const CamTraceResult cam = cmd_cam_trace(opt, arms, 10.0, {0.5, 0.0, 0.0});
  r.line(criteria[1], cam.arm_leg_correlation < 0.0,
         "correlation " + num(cam.arm_leg_correlation));
  opt.name = "long-grm";
  const GrmResult grm = cmd_grm_dist(opt, {arms, fixed}, 10, {0.5, 0.0, 0.0});
  r.line(criteria[2],
         grm.policies.size() == 2 && grm.policies[0].complete && grm.policies[1].complete &&
             grm.policies[0].peak_abs < grm.policies[1].peak_abs,
         "peak with arms " + num(grm.policies[0].peak_abs) + ", fixed arms " +
             num(grm.policies[1].peak_abs) + " (fixed-arm r_vt " + num(vt_fixed) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> suites;
  std::string out = (fs::temp_directory_path() / "armswing-acceptance").string();
  bool run_long = false;
  app.add_option("--suite", suites, "dynamics, rewards, learning, archcompare, pipeline, long")
      ->check(CLI::IsMember({"dynamics", "rewards", "learning", "archcompare", "pipeline", "long"}));
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_flag("--long", run_long, "Actually run the long suite");
  CLI11_PARSE(app, argc, argv);
  if (suites.empty()) suites = {"dynamics", "rewards", "learning", "archcompare", "pipeline", "long"};

  int failed = 0;
  for (const auto& s : suites) {
    Report r{s};
    try {
      if (s == "dynamics") dynamics_suite(r);
      if (s == "rewards") rewards_suite(r);
      if (s == "learning") learning_suite(r, fs::path(out) / "learning");
      if (s == "archcompare") archcompare_suite(r, fs::path(out) / "archcompare");
      if (s == "pipeline") pipeline_suite(r, fs::path(out) / "pipeline");
      if (s == "long") long_suite(r, fs::path(out) / "long", run_long);
    } catch (const std::exception& e) {
      r.line("suite completed", false, e.what());
    }
    failed += r.failed;
  }
  std::printf("%s: %d failed criteria\n", failed ? "FAILED" : "OK", failed);
  return failed ? 1 : 0;
}
