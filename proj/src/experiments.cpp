#include "armswing/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "armswing/svg.hpp"
#include "armswing/toy_envs.hpp"

namespace armswing {

namespace fs = std::filesystem;

namespace {

void say(const ExperimentOptions& opt, const std::string& line) {
  if (opt.log) *opt.log << line << std::endl;
}

fs::path prepare_dir(const ExperimentOptions& opt, const std::string& fallback_name) {
  const fs::path dir = opt.out / (opt.name.empty() ? fallback_name : opt.name);
  fs::create_directories(dir / "plots");
  return dir;
}

std::string hex(const unsigned char* p, unsigned n) {
  std::ostringstream o;
  for (unsigned i = 0; i < n; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(p[i]);
  return o.str();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// config.txt echoes the effective config; manifest.txt records what is
// needed to rerun and check the outputs.
void write_run_files(const fs::path& dir, const ExperimentOptions& opt, const std::string& command,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
  {
    std::ofstream f(dir / "config.txt");
    f << opt.config.dump();
  }
  std::ofstream m(dir / "manifest.txt");
  m << "command = " << command << '\n'
    << "seed = " << opt.seed << '\n'
    << "deterministic = " << (opt.deterministic ? "true" : "false") << '\n'
    << "threads = " << opt.threads << '\n';
  for (const auto& [k, v] : extra) m << k << " = " << v << '\n';
  m << "\n# config\n" << opt.config.dump();
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
}

std::string model_hash(const Task& task) {
  return task.model_path.empty() ? "none" : git_blob_sha1(task.model_path);
}

std::string policy_label(const std::string& path) {
  const fs::path p(path);
  const std::string stem = p.stem().string();
  if (stem.rfind("ckpt", 0) == 0 && p.has_parent_path() && !p.parent_path().filename().empty()) {
    return p.parent_path().filename().string();
  }
  return stem;
}

Transition observation(const LocomotionStep& s) {
  Transition t;
  t.obs = {s.obs_arm, s.obs_leg};
  t.global_obs = s.obs_global;
  return t;
}

struct HumanoidPolicy {
  std::string label;
  std::string path;
  Task task;
  std::unique_ptr<PolicyRunner> runner;
};

HumanoidPolicy load_humanoid_policy(const ExperimentOptions& opt, const std::string& path,
                                    double min_episode_length) {
  HumanoidPolicy p;
  p.path = path;
  p.label = policy_label(path);
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.task.rfind("humanoid", 0) != 0) {
    throw CheckpointError(path + ": checkpoint was trained on task '" + ckpt.task +
                          "', this command needs a humanoid policy");
  }
  p.task = make_task(opt.config, ckpt.task);
  p.task.env.episode_length = std::max(p.task.env.episode_length, min_episode_length);
  LocomotionEnv probe(p.task.model, p.task.env);
  try {
    p.runner = std::make_unique<PolicyRunner>(std::move(ckpt), probe);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  return p;
}

std::vector<double> numbers(const std::vector<std::string>& cells) {
  std::vector<double> out;
  for (const auto& c : cells) out.push_back(c == "nan" || c.empty() ? std::nan("") : std::stod(c));
  return out;
}

}  // namespace

std::string resolve_model_path(const std::string& path) {
  if (path.empty()) return default_model_path();
  const fs::path p(path);
  if (p.is_absolute() || fs::exists(p)) {
    if (!fs::exists(p)) throw ModelError("model file not found: '" + path + "'");
    return p.string();
  }
  const fs::path bundled = fs::path(ARMSWING_DATA_DIR) / p;
  if (fs::exists(bundled)) return bundled.string();
  throw ModelError("model file not found: '" + path + "' (also looked in " +
                   std::string(ARMSWING_DATA_DIR) + ")");
}

Task make_task(const Config& cfg, const std::string& task_name) {
  Task t;
  t.name = task_name.empty() ? cfg.get_string("task", "humanoid") : task_name;
  if (t.name == "toy-coop") {
    const ToyCoopConfig tc = ToyCoopConfig::from_config(cfg);
    t.factory = [tc] { return std::make_unique<ToyCoopEnv>(tc); };
  } else if (t.name == "pendulum") {
    const PendulumConfig pc = PendulumConfig::from_config(cfg);
    t.factory = [pc] { return std::make_unique<PendulumBalanceEnv>(pc); };
  } else if (t.name == "humanoid" || t.name == "humanoid-fixed-arms") {
    t.env = EnvConfig::from_config(cfg);
    if (!task_name.empty()) {
      t.env.arm_mode = t.name == "humanoid" ? ArmMode::learned : ArmMode::fixed;
    }
    t.name = t.env.arm_mode == ArmMode::fixed ? "humanoid-fixed-arms" : "humanoid";
    t.model_path = resolve_model_path(t.env.model_path);
    t.model = std::make_shared<const RobotModel>(load_model_file(t.model_path));
    t.factory = [model = t.model, env = t.env] {
      return std::make_unique<LocomotionEnv>(model, env);
    };
  } else {
    throw ConfigError("field 'task' must be humanoid, humanoid-fixed-arms, toy-coop or pendulum, "
                      "got '" + t.name + "'");
  }
  return t;
}

std::string git_blob_sha1(const std::string& path) {
  const std::string content = read_file(path);
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 failed for " + path);
  return hex(md, len);
}

// ---------------------------------------------------------------- statistics

double tail_mean(const std::vector<double>& s, double fraction) {
  if (s.empty()) return std::nan("");
  const auto n = std::max<size_t>(1, static_cast<size_t>(std::floor(fraction * s.size())));
  return std::accumulate(s.end() - static_cast<long>(n), s.end(), 0.0) / static_cast<double>(n);
}

double head_mean(const std::vector<double>& s, double fraction) {
  if (s.empty()) return std::nan("");
  const auto n = std::max<size_t>(1, static_cast<size_t>(std::floor(fraction * s.size())));
  return std::accumulate(s.begin(), s.begin() + static_cast<long>(n), 0.0) /
         static_cast<double>(n);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto i = static_cast<size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double f = pos - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = std::min(a.size(), b.size());
  if (n < 2) return std::nan("");
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) ma += a[i], mb += b[i];
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : std::nan("");
}

int count_touchdowns(const std::vector<StanceFoot>& stance) {
  auto left = [](StanceFoot s) { return s == StanceFoot::left || s == StanceFoot::both; };
  auto right = [](StanceFoot s) { return s == StanceFoot::right || s == StanceFoot::both; };
  int n = 0;
  for (size_t i = 1; i < stance.size(); ++i) {
    if (left(stance[i]) && !left(stance[i - 1])) ++n;
    if (right(stance[i]) && !right(stance[i - 1])) ++n;
  }
  return n;
}

// ---------------------------------------------------------------- train/eval

TrainResult cmd_train(const ExperimentOptions& opt) {
  const Task task = make_task(opt.config);
  TrainConfig tc = TrainConfig::from_config(opt.config);
  tc.seed = opt.seed;
  tc.threads = opt.threads;
  const int checkpoint_every = opt.config.get_int("train.checkpoint_every", 0);
  // Sections read by the other commands may share the file.
  opt.config.check_all_used({"eval.", "push.", "grm.", "cam.", "compare."});

  TrainResult out;
  out.dir = prepare_dir(opt, task.name + "-" + to_string(tc.arch) + "-s" + std::to_string(opt.seed));
  write_run_files(out.dir, opt, "train",
                  {{"task", task.name},
                   {"arch", to_string(tc.arch)},
                   {"model", task.model_path.empty() ? "none" : task.model_path},
                   {"model_sha1", model_hash(task)}});

  const std::string metrics_path = (out.dir / "metrics.csv").string();
  std::ofstream csv(metrics_path);
  if (!csv) throw std::runtime_error("cannot write " + metrics_path);
  Trainer trainer(task.factory, tc, task.name);
  for (int i = 0; i < tc.iterations; ++i) {
    IterationMetrics m = trainer.iterate();
    if (opt.deterministic) m.wall_clock_s = 0.0;
    if (i == 0) csv << metrics_csv_header(m) << '\n';
    csv << metrics_csv_row(m) << '\n';
    csv.flush();
    if (!csv) throw std::runtime_error("write failed for " + metrics_path);
    if (!m.finite()) {
      throw TrainingError("non-finite metrics at iteration " + std::to_string(m.iteration));
    }
    if (checkpoint_every > 0 && m.iteration % checkpoint_every == 0) {
      save_checkpoint((out.dir / ("ckpt-" + std::to_string(m.iteration) + ".bin")).string(),
                      trainer.checkpoint());
    }
    std::ostringstream line;
    line << "iter " << m.iteration << "  r_vt " << std::setprecision(4) << m.r_vt_mean;
    for (const auto& l : m.learners) line << "  " << l.name << " adv_var " << l.adv_var;
    say(opt, line.str());
    out.metrics.push_back(std::move(m));
  }
  csv.close();
  const std::string ckpt = (out.dir / "ckpt-final.bin").string();
  save_checkpoint(ckpt, trainer.checkpoint());
  {
    std::ofstream m(out.dir / "manifest.txt", std::ios::app);
    m << "\n# outputs\ncheckpoint_sha1 = " << git_blob_sha1(ckpt) << '\n';
  }
  plot_training(metrics_path, out.dir / "plots");
  return out;
}

EvalResult cmd_eval(const ExperimentOptions& opt, const std::string& checkpoint, int episodes) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  const Task task = make_task(opt.config, ckpt.task);
  auto env = task.factory();
  const PolicyRunner runner(std::move(ckpt), *env);
  const int max_steps = opt.config.get_int("eval.max_steps", 100000);

  EvalResult out;
  out.dir = prepare_dir(opt, "eval-" + policy_label(checkpoint));
  write_run_files(out.dir, opt, "eval",
                  {{"checkpoint", checkpoint},
                   {"checkpoint_sha1", git_blob_sha1(checkpoint)},
                   {"task", task.name},
                   {"model_sha1", model_hash(task)}});
  CsvTable t;
  t.header = {"episode[-]", "return[-]", "length[steps]", "r_vt_mean[-]", "terminated[-]"};
  for (int e = 0; e < episodes; ++e) {
    Transition tr = env->reset(opt.seed * 1000003ull + static_cast<std::uint64_t>(e));
    double ret = 0.0, vt = 0.0;
    int len = 0;
    while (len < max_steps) {
      tr = env->step(runner.act(tr));
      ret += std::accumulate(tr.rewards.begin(), tr.rewards.end(), 0.0);
      vt += tr.tracking;
      ++len;
      if (tr.terminated || tr.truncated) break;
    }
    out.mean_return += ret;
    out.mean_length += len;
    out.mean_r_vt += vt / std::max(1, len);
    t.add_row({std::to_string(e), format_number(ret), std::to_string(len),
               format_number(vt / std::max(1, len)), tr.terminated ? "1" : "0"});
  }
  out.episodes = episodes;
  if (episodes > 0) {
    out.mean_return /= episodes;
    out.mean_length /= episodes;
    out.mean_r_vt /= episodes;
  }
  write_csv((out.dir / "eval.csv").string(), t);
  return out;
}

// ---------------------------------------------------------------- cam trace

CamTraceResult cmd_cam_trace(const ExperimentOptions& opt, const std::string& checkpoint,
                             double duration, const CommandVel& cmd) {
  HumanoidPolicy p = load_humanoid_policy(opt, checkpoint, duration + 1.0);
  LocomotionEnv env(p.task.model, p.task.env);

  CamTraceResult out;
  out.dir = prepare_dir(opt, "cam-trace-" + p.label);
  write_run_files(out.dir, opt, "cam-trace",
                  {{"checkpoint", checkpoint},
                   {"checkpoint_sha1", git_blob_sha1(checkpoint)},
                   {"duration", format_number(duration)},
                   {"command", format_number(cmd.vx) + ", " + format_number(cmd.vy) + ", " +
                                   format_number(cmd.wz)},
                   {"model_sha1", model_hash(p.task)}});

  CsvTable& t = out.table;
  t.header = {"t[s]",          "kz_total[kg m^2/s]", "kz_base[kg m^2/s]", "kz_legs[kg m^2/s]",
              "kz_arms[kg m^2/s]", "kz_ref[kg m^2/s]"};
  LocomotionStep s = env.reset_full(opt.seed);
  env.set_command_resampling(false);
  env.set_command(cmd);
  env.set_state(env.state());  // refresh the reference for the new command
  s.obs_arm = env.observe_arm();
  s.obs_leg = env.observe_leg();
  s.obs_global = env.observe_global();

  std::vector<double> err, arms, legs;
  while (env.episode_time() < duration - 1e-9) {
    const auto a = p.runner->act(observation(s));
    s = env.act(a[0], a[1]);
    const CentroidalQuantities& c = s.info.centroidal;
    const double ref = s.info.reference[2];
    t.add_row({format_number(env.episode_time()), format_number(c.h[2]),
               format_number(c.h_base[2]), format_number(c.h_legs[2]),
               format_number(c.h_arms[2]), format_number(ref)});
    err.push_back(c.h[2] - ref);
    arms.push_back(c.h_arms[2]);
    legs.push_back(c.h_legs[2]);
    if (s.terminated) {
      out.fell = true;
      break;
    }
  }
  double sq = 0.0;
  for (double e : err) sq += e * e;
  out.rms_tracking_error = err.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(err.size()));
  out.arm_leg_correlation = pearson(arms, legs);

  const std::string csv = (out.dir / "cam_trace.csv").string();
  write_csv(csv, t);
  CsvTable summary;
  summary.header = {"policy[-]", "rms_tracking_error[kg m^2/s]", "arm_leg_correlation[-]",
                    "fell[-]"};
  summary.add_row({p.label, format_number(out.rms_tracking_error),
                   format_number(out.arm_leg_correlation), out.fell ? "1" : "0"});
  write_csv((out.dir / "cam_summary.csv").string(), summary);
  plot_cam_trace(csv, (out.dir / "plots" / "cam_trace.svg").string());
  return out;
}

// ---------------------------------------------------------------- grm

GrmResult cmd_grm_dist(const ExperimentOptions& opt, const std::vector<std::string>& checkpoints,
                       int steps, const CommandVel& cmd) {
  if (checkpoints.empty()) throw ConfigError("grm-dist needs at least one checkpoint");
  GrmResult out;
  out.dir = prepare_dir(opt, "grm-dist");
  std::vector<std::pair<std::string, std::string>> extra{{"steps", std::to_string(steps)}};
  for (const auto& c : checkpoints) extra.emplace_back("checkpoint", c + " " + git_blob_sha1(c));

  CsvTable samples;
  samples.header = {"policy[-]", "t[s]", "stance[-]", "mz[N m]"};
  CsvTable summary;
  summary.header = {"policy[-]", "samples[-]", "steps[-]", "p5[N m]", "p50[N m]", "p95[N m]",
                    "peak_abs_mz[N m]", "complete[-]", "note[-]"};
  for (const auto& path : checkpoints) {
    // Two touchdowns per gait period; allow twice the nominal time.
    const double gait = EnvConfig::from_config(opt.config).gait_period;
    const double limit = 2.0 * gait * (0.5 * steps + 1.0) + 1.0;
    HumanoidPolicy p = load_humanoid_policy(opt, path, limit + 1.0);
    extra.emplace_back("model_sha1", model_hash(p.task));
    LocomotionEnv env(p.task.model, p.task.env);
    LocomotionStep s = env.reset_full(opt.seed);
    env.set_command_resampling(false);
    env.set_command(cmd);
    env.set_state(env.state());
    s.obs_arm = env.observe_arm();
    s.obs_leg = env.observe_leg();
    s.obs_global = env.observe_global();

    std::vector<StanceFoot> stance{s.info.grm.stance_foot};
    std::vector<double> mz;
    bool fell = false;
    int touchdowns = 0;
    while (env.episode_time() < limit && touchdowns < steps) {
      const auto a = p.runner->act(observation(s));
      s = env.act(a[0], a[1]);
      stance.push_back(s.info.grm.stance_foot);
      touchdowns = count_touchdowns(stance);
      const StanceFoot f = s.info.grm.stance_foot;
      if (f == StanceFoot::left || f == StanceFoot::right) {
        mz.push_back(s.info.grm.mz);
        samples.add_row({p.label, format_number(env.episode_time()), to_string(f),
                         format_number(s.info.grm.mz)});
      }
      if (s.terminated) {
        fell = true;
        break;
      }
    }
    GrmSummary g;
    g.policy = p.label;
    g.samples = static_cast<int>(mz.size());
    g.steps = touchdowns;
    g.complete = touchdowns >= steps && !fell;
    if (!mz.empty()) {
      g.p5 = percentile(mz, 0.05);
      g.p50 = percentile(mz, 0.5);
      g.p95 = percentile(mz, 0.95);
      for (double v : mz) g.peak_abs = std::max(g.peak_abs, std::abs(v));
    } else {
      g.p5 = g.p50 = g.p95 = std::nan("");
    }
    if (fell) {
      g.note = "fell after " + std::to_string(touchdowns) + " steps; partial data";
    } else if (touchdowns == 0) {
      g.note = "no steps taken; empty distribution";
    } else if (!g.complete) {
      g.note = "only " + std::to_string(touchdowns) + " steps within the time limit";
    } else {
      g.note = "ok";
    }
    summary.add_row({g.policy, std::to_string(g.samples), std::to_string(g.steps),
                     format_number(g.p5), format_number(g.p50), format_number(g.p95),
                     format_number(g.peak_abs), g.complete ? "1" : "0", g.note});
    say(opt, p.label + ": " + std::to_string(g.samples) + " samples over " +
                 std::to_string(g.steps) + " steps, " + g.note);
    out.policies.push_back(g);
  }
  write_run_files(out.dir, opt, "grm-dist", extra);
  const std::string csv = (out.dir / "grm_samples.csv").string();
  write_csv(csv, samples);
  write_csv((out.dir / "grm_summary.csv").string(), summary);
  plot_grm(csv, (out.dir / "plots" / "grm_violin.svg").string());
  return out;
}

// ---------------------------------------------------------------- push grid

int PushGridPolicy::successes() const {
  int n = 0;
  for (const auto& row : success) n += static_cast<int>(std::count(row.begin(), row.end(), true));
  return n;
}

double PushGridPolicy::area() const {
  if (torques.size() < 2) return 0.0;
  const double span = torques.back() - torques.front();
  const double cell = span * span / static_cast<double>(torques.size() * torques.size());
  return cell * successes();
}

bool push_trial(const PolicyRunner& runner, LocomotionEnv& env, const Vec3& torque,
                std::uint64_t seed, const CommandVel& cmd, double push_time,
                double push_duration, double hold) {
  LocomotionStep s = env.reset_full(seed);
  env.set_command_resampling(false);
  env.set_command(cmd);
  env.set_state(env.state());
  s.obs_arm = env.observe_arm();
  s.obs_leg = env.observe_leg();
  s.obs_global = env.observe_global();
  if (torque.norm() > 0.0) env.schedule_disturbance({push_time, torque, push_duration});
  const double end = push_time + push_duration + hold;
  while (env.episode_time() < end - 1e-9) {
    const auto a = runner.act(observation(s));
    s = env.act(a[0], a[1]);
    if (s.terminated) return false;
  }
  return true;
}

PushGridResult cmd_push_grid(const ExperimentOptions& opt,
                             const std::vector<std::string>& checkpoints, int grid_res,
                             double max_torque) {
  if (checkpoints.empty()) throw ConfigError("push-grid needs at least one checkpoint");
  if (grid_res < 2) throw ConfigError("push-grid resolution must be >= 2");
  const double push_time = opt.config.get_double("push.time", 1.0);
  const double push_duration = opt.config.get_double("push.duration", 0.1);
  const double hold = opt.config.get_double("push.hold", 4.0);
  const CommandVel cmd{opt.config.get_double("push.cmd_vx", 0.0),
                       opt.config.get_double("push.cmd_vy", 0.0),
                       opt.config.get_double("push.cmd_wz", 0.0)};

  PushGridResult out;
  out.dir = prepare_dir(opt, "push-grid");
  std::vector<std::pair<std::string, std::string>> extra{
      {"grid_res", std::to_string(grid_res)}, {"max_torque", format_number(max_torque)}};
  for (const auto& c : checkpoints) extra.emplace_back("checkpoint", c + " " + git_blob_sha1(c));

  std::vector<double> axis(static_cast<size_t>(grid_res));
  for (int i = 0; i < grid_res; ++i) {
    axis[static_cast<size_t>(i)] = -max_torque + 2.0 * max_torque * i / (grid_res - 1);
  }
  CsvTable t;
  t.header = {"policy[-]", "tau_x[N m]", "tau_y[N m]", "success[-]"};
  for (const auto& path : checkpoints) {
    HumanoidPolicy p = load_humanoid_policy(opt, path, push_time + push_duration + hold + 1.0);
    extra.emplace_back("model_sha1", model_hash(p.task));
    PushGridPolicy g;
    g.policy = p.label;
    g.torques = axis;
    g.success.assign(axis.size(), std::vector<bool>(axis.size(), false));

    const int cells = grid_res * grid_res;
    std::vector<char> ok(static_cast<size_t>(cells), 0);
    std::atomic<int> next{0};
    auto worker = [&] {
      LocomotionEnv env(p.task.model, p.task.env);
      for (int c = next++; c < cells; c = next++) {
        const auto ix = static_cast<size_t>(c % grid_res), iy = static_cast<size_t>(c / grid_res);
        ok[static_cast<size_t>(c)] = push_trial(*p.runner, env, Vec3(axis[ix], axis[iy], 0.0),
                                                opt.seed, cmd, push_time, push_duration, hold);
      }
    };
    const int threads = std::clamp(opt.threads, 1, cells);
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (int c = 0; c < cells; ++c) {
      const auto ix = static_cast<size_t>(c % grid_res), iy = static_cast<size_t>(c / grid_res);
      g.success[iy][ix] = ok[static_cast<size_t>(c)] != 0;
      t.add_row({g.policy, format_number(axis[ix]), format_number(axis[iy]),
                 ok[static_cast<size_t>(c)] ? "1" : "0"});
    }
    say(opt, g.policy + ": " + std::to_string(g.successes()) + "/" + std::to_string(cells) +
                 " cells recovered");
    out.policies.push_back(std::move(g));
  }
  CsvTable summary;
  summary.header = {"policy[-]", "successes[-]", "cells[-]", "area[N^2 m^2]", "area_ratio[-]"};
  for (const auto& g : out.policies) {
    const double base = out.policies.front().area();
    const double ratio = base > 0.0 ? g.area() / base : std::nan("");
    out.area_ratio.push_back(ratio);
    summary.add_row({g.policy, std::to_string(g.successes()), std::to_string(grid_res * grid_res),
                     format_number(g.area()), format_number(ratio)});
  }
  write_run_files(out.dir, opt, "push-grid", extra);
  const std::string csv = (out.dir / "push_grid.csv").string();
  write_csv(csv, t);
  write_csv((out.dir / "push_summary.csv").string(), summary);
  plot_push_grid(csv, (out.dir / "plots" / "push_grid.svg").string());
  return out;
}

// ---------------------------------------------------------------- arch compare

const ArchSummary* ArchCompareResult::find(Arch a) const {
  for (const auto& s : summaries) {
    if (s.arch == a) return &s;
  }
  return nullptr;
}

namespace {

ArchCompareResult run_comparison(const ExperimentOptions& opt, const Task& task,
                                 const std::string& command,
                                 const std::vector<std::uint64_t>& seeds, int iterations,
                                 const std::vector<Arch>& archs) {
  if (seeds.empty()) throw ConfigError(command + " needs at least one seed");
  const TrainConfig base = TrainConfig::from_config(opt.config);

  ArchCompareResult out;
  out.dir = prepare_dir(opt, command);
  std::string seed_list, arch_list;
  for (auto s : seeds) seed_list += (seed_list.empty() ? "" : ", ") + std::to_string(s);
  for (auto a : archs) arch_list += (arch_list.empty() ? "" : ", ") + std::string(to_string(a));
  write_run_files(out.dir, opt, command,
                  {{"task", task.name},
                   {"seeds", seed_list},
                   {"archs", arch_list},
                   {"iterations", std::to_string(iterations)},
                   {"model_sha1", model_hash(task)}});

  CsvTable& t = out.curves;
  t.header = {"arch[-]",      "seed[-]",      "iteration[-]",  "r_vt[-]",
              "adv_var_a[-]", "adv_var_b[-]", "reward_a[-]",   "reward_b[-]",
              "wall_clock_s[s]"};
  CsvTable finals;
  finals.header = {"arch[-]", "seed[-]", "status[-]", "final_r_vt[-]", "final_adv_var_a[-]",
                   "initial_adv_var_a[-]"};
  for (Arch arch : archs) {
    ArchSummary sum;
    sum.arch = arch;
    std::vector<double> final_vt, final_av, init_av;
    for (auto seed : seeds) {
      TrainConfig cfg = base;
      cfg.arch = arch;
      cfg.seed = seed;
      cfg.iterations = iterations;
      cfg.threads = opt.threads;
      std::vector<double> vt, av;
      std::vector<std::vector<std::string>> rows;
      try {
        Trainer trainer(task.factory, cfg, task.name);
        for (int i = 0; i < iterations; ++i) {
          const IterationMetrics m = trainer.iterate();
          if (!m.finite()) throw TrainingError("non-finite metrics");
          const auto& l = m.learners;
          rows.push_back({to_string(arch), std::to_string(seed), std::to_string(m.iteration),
                          format_number(m.r_vt_mean), format_number(l[0].adv_var),
                          format_number(l.size() > 1 ? l[1].adv_var : std::nan("")),
                          format_number(l[0].reward_mean),
                          format_number(l.size() > 1 ? l[1].reward_mean : std::nan("")),
                          format_number(opt.deterministic ? 0.0 : m.wall_clock_s)});
          vt.push_back(m.r_vt_mean);
          av.push_back(l[0].adv_var);
        }
      } catch (const std::exception& e) {
        const std::string msg = std::string(to_string(arch)) + " seed " + std::to_string(seed) +
                                " failed: " + e.what();
        out.failures.push_back(msg);
        say(opt, msg);
        finals.add_row({to_string(arch), std::to_string(seed), "failed", "nan", "nan", "nan"});
        continue;
      }
      for (auto& r : rows) t.add_row(std::move(r));
      final_vt.push_back(tail_mean(vt));
      final_av.push_back(tail_mean(av));
      init_av.push_back(head_mean(av));
      finals.add_row({to_string(arch), std::to_string(seed), "ok",
                      format_number(final_vt.back()), format_number(final_av.back()),
                      format_number(init_av.back())});
      std::ostringstream line;
      line << to_string(arch) << " seed " << seed << ": final r_vt " << std::setprecision(4)
           << final_vt.back() << ", final adv_var " << final_av.back();
      say(opt, line.str());
    }
    sum.seeds = static_cast<int>(final_vt.size());
    if (!final_vt.empty()) {
      sum.median_final_r_vt = median(final_vt);
      sum.mean_final_r_vt =
          std::accumulate(final_vt.begin(), final_vt.end(), 0.0) / static_cast<double>(sum.seeds);
      double var = 0.0;
      for (double v : final_vt) var += (v - sum.mean_final_r_vt) * (v - sum.mean_final_r_vt);
      sum.std_final_r_vt = std::sqrt(var / static_cast<double>(sum.seeds));
      sum.median_final_adv_var = median(final_av);
      sum.median_initial_adv_var = median(init_av);
    }
    out.summaries.push_back(sum);
  }

  CsvTable table;
  table.header = {"arch[-]",
                  "seeds[-]",
                  "median_final_r_vt[-]",
                  "mean_final_r_vt[-]",
                  "std_final_r_vt[-]",
                  "median_final_adv_var_a[-]",
                  "median_initial_adv_var_a[-]"};
  for (const auto& s : out.summaries) {
    table.add_row({to_string(s.arch), std::to_string(s.seeds), format_number(s.median_final_r_vt),
                   format_number(s.mean_final_r_vt), format_number(s.std_final_r_vt),
                   format_number(s.median_final_adv_var),
                   format_number(s.median_initial_adv_var)});
  }
  const std::string csv = (out.dir / (command == "toy-coop" ? "toy_coop.csv" : "arch_compare.csv"))
                              .string();
  write_csv(csv, t);
  write_csv((out.dir / "runs.csv").string(), finals);
  write_csv((out.dir / "summary.csv").string(), table);
  plot_arch_compare(csv, out.dir / "plots");
  return out;
}

}  // namespace

ArchCompareResult cmd_arch_compare(const ExperimentOptions& opt,
                                   const std::vector<std::uint64_t>& seeds, int iterations,
                                   const std::vector<Arch>& archs) {
  return run_comparison(opt, make_task(opt.config, opt.config.get_string("task", "toy-coop")),
                        "arch-compare", seeds, iterations, archs);
}

ArchCompareResult cmd_toy_coop(const ExperimentOptions& opt,
                               const std::vector<std::uint64_t>& seeds, int iterations) {
  return run_comparison(opt, make_task(opt.config, "toy-coop"), "toy-coop", seeds, iterations,
                        {std::begin(kAllArchs), std::end(kAllArchs)});
}

// ---------------------------------------------------------------- validation

ValidationResult cmd_validate_dynamics(const ExperimentOptions& opt) {
  const std::string path = resolve_model_path(opt.config.get_string("env.model", ""));
  const RobotModel model = load_model_file(path);
  ValidationResult out;
  out.dir = prepare_dir(opt, "validate-dynamics");
  write_run_files(out.dir, opt, "validate-dynamics",
                  {{"model", path}, {"model_sha1", git_blob_sha1(path)}});
  out.checks = validation::run_dynamics_suite(model, opt.seed);
  CsvTable t;
  t.header = {"check[-]", "passed[-]", "measured[-]", "threshold[-]", "detail[-]"};
  out.all_passed = true;
  for (const auto& c : out.checks) {
    out.all_passed = out.all_passed && c.passed;
    std::string detail = c.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    t.add_row({c.name, c.passed ? "1" : "0", format_number(c.measured), format_number(c.threshold),
               detail});
  }
  write_csv((out.dir / "validation.csv").string(), t);
  return out;
}

// ---------------------------------------------------------------- plots

void plot_training(const std::string& metrics_csv, const fs::path& plots_dir) {
  const CsvTable t = read_csv(metrics_csv);
  fs::create_directories(plots_dir);
  const std::vector<double> it = t.column("iteration");
  svg::LinePlot reward{"Velocity tracking", "iteration", "mean r_vt", {}};
  reward.series.push_back({"r_vt", it, t.column("r_vt_mean"), {}, {}});
  svg::write((plots_dir / "reward.svg").string(), svg::render(reward));

  svg::LinePlot adv{"Advantage variance", "iteration", "variance of raw advantages", {}};
  for (const auto& h : t.header) {
    const auto at = h.find("_adv_var");
    if (at != std::string::npos) {
      adv.series.push_back({h.substr(0, at), it, t.column(h), {}, {}});
    }
  }
  svg::write((plots_dir / "adv_var.svg").string(), svg::render(adv));
}

void plot_cam_trace(const std::string& csv, const std::string& svg_path) {
  const CsvTable t = read_csv(csv);
  const auto time = t.column("t");
  svg::LinePlot p{"Vertical centroidal angular momentum", "time [s]", "k_z [kg m^2/s]", {}};
  for (const char* c : {"kz_total", "kz_base", "kz_legs", "kz_arms", "kz_ref"}) {
    p.series.push_back({std::string(c).substr(3), time, t.column(c), {}, {}});
  }
  svg::write(svg_path, svg::render(p));
}

void plot_grm(const std::string& samples_csv, const std::string& svg_path) {
  const CsvTable t = read_csv(samples_csv);
  const auto policy = t.text_column("policy");
  const auto mz = t.column("mz");
  svg::ViolinPlot v{"Vertical ground reaction moment", "m_z [N m]", {}};
  for (size_t i = 0; i < policy.size(); ++i) {
    auto it = std::find_if(v.groups.begin(), v.groups.end(),
                           [&](const svg::ViolinGroup& g) { return g.name == policy[i]; });
    if (it == v.groups.end()) {
      v.groups.push_back({policy[i], {}});
      it = v.groups.end() - 1;
    }
    it->samples.push_back(mz[i]);
  }
  svg::write(svg_path, svg::render(v));
}

void plot_push_grid(const std::string& csv, const std::string& svg_path) {
  const CsvTable t = read_csv(csv);
  const auto policy = t.text_column("policy");
  const auto tx = t.column("tau_x"), ty = t.column("tau_y"), ok = t.column("success");
  svg::RegionPlot plot{"Push recovery", "tau_x [N m]", "tau_y [N m]", {}};
  for (size_t i = 0; i < policy.size(); ++i) {
    if (plot.panels.empty() || plot.panels.back().name != policy[i]) {
      plot.panels.push_back({policy[i], {}, {}, {}});
    }
    auto& p = plot.panels.back();
    auto index = [](std::vector<double>& axis, double v) {
      auto it = std::find(axis.begin(), axis.end(), v);
      if (it == axis.end()) {
        axis.push_back(v);
        std::sort(axis.begin(), axis.end());
        it = std::find(axis.begin(), axis.end(), v);
      }
      return static_cast<size_t>(it - axis.begin());
    };
    index(p.x, tx[i]);
    index(p.y, ty[i]);
  }
  for (auto& p : plot.panels) {
    p.success.assign(p.y.size(), std::vector<bool>(p.x.size(), false));
  }
  size_t panel = 0;
  for (size_t i = 0; i < policy.size(); ++i) {
    while (plot.panels[panel].name != policy[i]) ++panel;
    auto& p = plot.panels[panel];
    const auto ix = static_cast<size_t>(std::find(p.x.begin(), p.x.end(), tx[i]) - p.x.begin());
    const auto iy = static_cast<size_t>(std::find(p.y.begin(), p.y.end(), ty[i]) - p.y.begin());
    p.success[iy][ix] = ok[i] > 0.5;
  }
  svg::write(svg_path, svg::render(plot));
}

void plot_arch_compare(const std::string& curves_csv, const fs::path& plots_dir) {
  const CsvTable t = read_csv(curves_csv);
  fs::create_directories(plots_dir);
  const auto arch = t.text_column("arch");
  const auto iter = numbers(t.text_column("iteration"));
  const auto vt = t.column("r_vt"), av = t.column("adv_var_a");

  auto band_plot = [&](const std::vector<double>& y, const std::string& title,
                       const std::string& ylabel, const std::string& file) {
    svg::LinePlot p{title, "iteration", ylabel, {}};
    std::vector<std::string> names;
    for (const auto& a : arch) {
      if (std::find(names.begin(), names.end(), a) == names.end()) names.push_back(a);
    }
    for (const auto& name : names) {
      std::map<int, std::vector<double>> by_iter;
      for (size_t i = 0; i < arch.size(); ++i) {
        if (arch[i] == name && std::isfinite(y[i])) by_iter[static_cast<int>(iter[i])].push_back(y[i]);
      }
      svg::Series s{name, {}, {}, {}, {}};
      for (const auto& [k, vals] : by_iter) {
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / vals.size());
        s.x.push_back(k);
        s.y.push_back(mean);
        s.lower.push_back(mean - sd);
        s.upper.push_back(mean + sd);
      }
      p.series.push_back(std::move(s));
    }
    svg::write((plots_dir / file).string(), svg::render(p));
  };
  band_plot(vt, "Velocity tracking by architecture (mean +- std over seeds)", "r_vt",
            "r_vt.svg");
  band_plot(av, "Advantage variance, first agent (mean +- std over seeds)", "variance",
            "adv_var.svg");
}

}  // namespace armswing
