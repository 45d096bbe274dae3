// armswing: training, evaluation and the analysis experiments.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "armswing/experiments.hpp"

using namespace armswing;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::string out = "runs";
  std::string name;
  bool deterministic = false;
  int threads = 1;
  bool quiet = false;
};

// Bundled config used when --config is not given.
std::string default_config(const std::string& command) {
  const bool toy = command == "toy-coop" || command == "arch-compare";
  return std::string(ARMSWING_CONFIG_DIR) + (toy ? "/toy_coop.cfg" : "/humanoid.cfg");
}

ExperimentOptions make_options(const Globals& g, const std::string& command) {
  ExperimentOptions o;
  const std::string path = g.config_path.empty() ? default_config(command) : g.config_path;
  o.config = Config::load(path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    o.config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  o.out = g.out;
  o.name = g.name;
  o.seed = g.seed;
  o.deterministic = g.deterministic;
  o.threads = g.threads;
  o.log = g.quiet ? nullptr : &std::cerr;
  return o;
}

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& given, int count,
                                     std::uint64_t first) {
  if (!given.empty()) return given;
  if (count < 1) throw ConfigError("--num-seeds must be >= 1");
  std::vector<std::uint64_t> s(static_cast<size_t>(count));
  std::iota(s.begin(), s.end(), first);
  return s;
}

void print_comparison(const ArchCompareResult& r) {
  std::printf("%-8s %6s %12s %12s %10s %14s %14s\n", "arch", "seeds", "median r_vt", "mean r_vt",
              "std", "median adv_var", "initial adv_var");
  for (const auto& s : r.summaries) {
    std::printf("%-8s %6d %12.4f %12.4f %10.4f %14.4f %14.4f\n", to_string(s.arch), s.seeds,
                s.median_final_r_vt, s.mean_final_r_vt, s.std_final_r_vt, s.median_final_adv_var,
                s.median_initial_adv_var);
  }
  for (const auto& f : r.failures) std::printf("failed: %s\n", f.c_str());
  std::printf("results in %s\n", r.dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arm-swing locomotion: centroidal dynamics, multi-agent PPO and experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Config file (defaults to the bundled one)");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output root directory")->capture_default_str();
  app.add_option("--name", g.name, "Run directory name under --out");
  app.add_flag("--deterministic", g.deterministic,
               "Write wall-clock columns as 0 so reruns give identical files");
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "No progress output");

  auto* train = app.add_subcommand("train", "Train policies on the configured task");
  std::string arch;
  int iters = 0;
  std::string task;
  train->add_option("--arch", arch, "single, dtde, ctde or ctce");
  train->add_option("--iters", iters, "Training iterations");
  train->add_option("--task", task, "humanoid, humanoid-fixed-arms, toy-coop or pendulum");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with deterministic actions");
  std::string checkpoint;
  int episodes = 10;
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--episodes", episodes)->capture_default_str();

  auto* cam = app.add_subcommand("cam-trace", "Decompose vertical CAM along a rollout");
  double duration = 5.0;
  CommandVel cmd{0.5, 0.0, 0.0};
  cam->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  cam->add_option("--duration", duration, "Seconds")->capture_default_str();
  cam->add_option("--vx", cmd.vx, "Commanded forward velocity [m/s]")->capture_default_str();
  cam->add_option("--vy", cmd.vy, "Commanded lateral velocity [m/s]")->capture_default_str();
  cam->add_option("--wz", cmd.wz, "Commanded yaw rate [rad/s]")->capture_default_str();

  auto* grm = app.add_subcommand("grm-dist", "Vertical ground reaction moment distributions");
  std::vector<std::string> checkpoints;
  int steps = 10;
  grm->add_option("checkpoints", checkpoints, "Checkpoint files")->required();
  grm->add_option("--steps", steps, "Walking steps per policy")->capture_default_str();
  grm->add_option("--vx", cmd.vx)->capture_default_str();
  grm->add_option("--vy", cmd.vy)->capture_default_str();
  grm->add_option("--wz", cmd.wz)->capture_default_str();

  auto* push = app.add_subcommand("push-grid", "Push-recovery success over a torque grid");
  int grid_res = 7;
  double max_torque = 15.0;
  push->add_option("checkpoints", checkpoints, "Checkpoint files")->required();
  push->add_option("--grid-res", grid_res, "Cells per axis")->capture_default_str();
  push->add_option("--max-torque", max_torque, "Grid half-width [N m]")->capture_default_str();

  std::vector<std::uint64_t> seeds;
  int num_seeds = 10;
  std::vector<std::string> arch_names;
  auto* compare = app.add_subcommand("arch-compare", "Train all architectures over seeds");
  compare->add_option("--seeds", seeds, "Explicit seed list")->delimiter(',');
  compare->add_option("--num-seeds", num_seeds, "Seeds --seed, --seed+1, ...")
      ->capture_default_str();
  compare->add_option("--iters", iters, "Iterations per run");
  compare->add_option("--archs", arch_names, "Subset of architectures")->delimiter(',');

  auto* toy = app.add_subcommand("toy-coop", "Architecture comparison on the cart-and-arm task");
  toy->add_option("--seeds", seeds, "Explicit seed list")->delimiter(',');
  toy->add_option("--num-seeds", num_seeds)->capture_default_str();
  toy->add_option("--iters", iters, "Iterations per run");

  app.add_subcommand("validate-dynamics", "Run the centroidal and simulator check suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentOptions opt = make_options(g, command);
    if (command == "train") {
      if (!arch.empty()) opt.config.set("train.arch", arch);
      if (iters > 0) opt.config.set("train.iterations", std::to_string(iters));
      if (!task.empty()) opt.config.set("task", task);
      const TrainResult r = cmd_train(opt);
      const auto& last = r.metrics.back();
      std::printf("trained %zu iterations, final r_vt %.4f; run in %s\n", r.metrics.size(),
                  last.r_vt_mean, r.dir.string().c_str());
    } else if (command == "eval") {
      const EvalResult r = cmd_eval(opt, checkpoint, episodes);
      std::printf("%d episodes: mean return %.4f, mean length %.1f, mean r_vt %.4f; %s\n",
                  r.episodes, r.mean_return, r.mean_length, r.mean_r_vt, r.dir.string().c_str());
    } else if (command == "cam-trace") {
      const CamTraceResult r = cmd_cam_trace(opt, checkpoint, duration, cmd);
      std::printf("%zu rows, rms k_z tracking error %.4f, arm/leg k_z correlation %.3f%s; %s\n",
                  r.table.rows.size(), r.rms_tracking_error, r.arm_leg_correlation,
                  r.fell ? " (robot fell)" : "", r.dir.string().c_str());
    } else if (command == "grm-dist") {
      const GrmResult r = cmd_grm_dist(opt, checkpoints, steps, cmd);
      for (const auto& p : r.policies) {
        std::printf("%-24s samples %5d steps %3d p5 %8.3f p50 %8.3f p95 %8.3f peak %8.3f  %s\n",
                    p.policy.c_str(), p.samples, p.steps, p.p5, p.p50, p.p95, p.peak_abs,
                    p.note.c_str());
      }
      std::printf("results in %s\n", r.dir.string().c_str());
    } else if (command == "push-grid") {
      const PushGridResult r = cmd_push_grid(opt, checkpoints, grid_res, max_torque);
      for (size_t i = 0; i < r.policies.size(); ++i) {
        const auto& p = r.policies[i];
        std::printf("%-24s %3d/%d cells, area %.1f, ratio %.3f\n", p.policy.c_str(),
                    p.successes(), grid_res * grid_res, p.area(), r.area_ratio[i]);
      }
      std::printf("results in %s\n", r.dir.string().c_str());
    } else if (command == "arch-compare") {
      std::vector<Arch> archs;
      for (const auto& a : arch_names) archs.push_back(parse_arch(a));
      if (archs.empty()) archs.assign(std::begin(kAllArchs), std::end(kAllArchs));
      const int n = iters > 0 ? iters : opt.config.get_int("train.iterations", 100);
      print_comparison(cmd_arch_compare(opt, seed_list(seeds, num_seeds, g.seed), n, archs));
    } else if (command == "toy-coop") {
      const int n = iters > 0 ? iters : opt.config.get_int("train.iterations", 100);
      print_comparison(cmd_toy_coop(opt, seed_list(seeds, num_seeds, g.seed), n));
    } else if (command == "validate-dynamics") {
      const ValidationResult r = cmd_validate_dynamics(opt);
      std::printf("%-40s %-6s %14s %14s\n", "check", "result", "measured", "threshold");
      for (const auto& c : r.checks) {
        std::printf("%-40s %-6s %14.6g %14.6g\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                    c.measured, c.threshold);
      }
      std::printf("%s; results in %s\n", r.all_passed ? "all checks passed" : "CHECKS FAILED",
                  r.dir.string().c_str());
      return r.all_passed ? 0 : kRuntimeExit;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeExit;
  }
  return 0;
}
