#pragma once

// Commands behind the `armswing` executable. Each writes a self-describing
// directory <out>/<name>/ holding config.txt, manifest.txt, CSV results and
// plots/*.svg rendered from those CSVs.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "armswing/config.hpp"
#include "armswing/csv.hpp"
#include "armswing/env.hpp"
#include "armswing/marl.hpp"
#include "armswing/validation.hpp"

namespace armswing {

struct ExperimentOptions {
  Config config;
  std::filesystem::path out = "runs";
  std::string name;  // run directory; derived from the command when empty
  std::uint64_t seed = 1;
  bool deterministic = false;  // wall-clock columns are written as 0
  int threads = 1;
  std::ostream* log = nullptr;
};

/// humanoid, humanoid-fixed-arms, toy-coop or pendulum.
struct Task {
  std::string name;
  EnvFactory factory;
  std::shared_ptr<const RobotModel> model;  // humanoid tasks only
  EnvConfig env;
  std::string model_path;
};

/// Absolute paths and paths that exist relative to the working directory
/// are used as given, anything else is looked up in the bundled data
/// directory. Throws ModelError naming the path when nothing is found.
std::string resolve_model_path(const std::string& path);

/// Reads `task` (default humanoid) plus the task's own keys. A non-empty
/// `task_name` wins over the config, e.g. the task stored in a checkpoint.
Task make_task(const Config& cfg, const std::string& task_name = "");

/// SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_sha1(const std::string& path);

struct TrainResult {
  std::filesystem::path dir;
  std::vector<IterationMetrics> metrics;
};
TrainResult cmd_train(const ExperimentOptions& opt);

struct EvalResult {
  std::filesystem::path dir;
  int episodes = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double mean_r_vt = 0.0;
};
EvalResult cmd_eval(const ExperimentOptions& opt, const std::string& checkpoint, int episodes);

struct CamTraceResult {
  std::filesystem::path dir;
  CsvTable table;
  double rms_tracking_error = 0.0;   // k_z against its reference
  double arm_leg_correlation = 0.0;  // Pearson, arms k_z vs legs k_z
  bool fell = false;
};
CamTraceResult cmd_cam_trace(const ExperimentOptions& opt, const std::string& checkpoint,
                             double duration, const CommandVel& cmd);

struct GrmSummary {
  std::string policy;
  int samples = 0;
  int steps = 0;
  double p5 = 0.0, p50 = 0.0, p95 = 0.0, peak_abs = 0.0;
  bool complete = false;
  std::string note;
};
struct GrmResult {
  std::filesystem::path dir;
  std::vector<GrmSummary> policies;
};
GrmResult cmd_grm_dist(const ExperimentOptions& opt, const std::vector<std::string>& checkpoints,
                       int steps, const CommandVel& cmd);

struct PushGridPolicy {
  std::string policy;
  std::vector<double> torques;             // grid axis values, N m
  std::vector<std::vector<bool>> success;  // [iy][ix]
  int successes() const;
  double area() const;  // (N m)^2 covered by successful cells
};
struct PushGridResult {
  std::filesystem::path dir;
  std::vector<PushGridPolicy> policies;
  std::vector<double> area_ratio;  // relative to the first policy
};
PushGridResult cmd_push_grid(const ExperimentOptions& opt,
                             const std::vector<std::string>& checkpoints, int grid_res,
                             double max_torque = 15.0);

/// One push-recovery trial: act for `push_time`, apply the base torque for
/// `push_duration`, then require `hold` more seconds without termination.
bool push_trial(const PolicyRunner& runner, LocomotionEnv& env, const Vec3& torque,
                std::uint64_t seed, const CommandVel& cmd, double push_time = 1.0,
                double push_duration = 0.1, double hold = 4.0);

struct ArchSummary {
  Arch arch = Arch::ctde;
  int seeds = 0;
  double median_final_r_vt = 0.0;
  double mean_final_r_vt = 0.0;
  double std_final_r_vt = 0.0;
  double median_final_adv_var = 0.0;  // first learner
  double median_initial_adv_var = 0.0;
};
struct ArchCompareResult {
  std::filesystem::path dir;
  CsvTable curves;  // one row per (arch, seed, iteration)
  std::vector<ArchSummary> summaries;
  std::vector<std::string> failures;
  const ArchSummary* find(Arch a) const;
};
/// Trains every architecture in `archs` on each seed with the config's task.
ArchCompareResult cmd_arch_compare(const ExperimentOptions& opt,
                                   const std::vector<std::uint64_t>& seeds, int iterations,
                                   const std::vector<Arch>& archs = {std::begin(kAllArchs),
                                                                     std::end(kAllArchs)});
/// Same comparison pinned to the cart-and-arm task.
ArchCompareResult cmd_toy_coop(const ExperimentOptions& opt,
                               const std::vector<std::uint64_t>& seeds, int iterations);

struct ValidationResult {
  std::filesystem::path dir;
  std::vector<validation::CheckResult> checks;
  bool all_passed = false;
};
ValidationResult cmd_validate_dynamics(const ExperimentOptions& opt);

// Statistics shared by the commands.
/// Mean over the last `fraction` of the series (at least one element).
double tail_mean(const std::vector<double>& series, double fraction = 0.1);
/// Mean over the first `fraction` of the series (at least one element).
double head_mean(const std::vector<double>& series, double fraction = 0.1);
double median(std::vector<double> v);
/// Linear interpolation between order statistics, p in [0, 1].
double percentile(std::vector<double> v, double p);
double pearson(const std::vector<double>& a, const std::vector<double>& b);
/// Rising edges of per-foot contact (left or right foot entering contact).
int count_touchdowns(const std::vector<StanceFoot>& stance);

// Plots are rendered from the CSV files alone.
void plot_training(const std::string& metrics_csv, const std::filesystem::path& plots_dir);
void plot_cam_trace(const std::string& csv, const std::string& svg_path);
void plot_grm(const std::string& samples_csv, const std::string& svg_path);
void plot_push_grid(const std::string& csv, const std::string& svg_path);
void plot_arch_compare(const std::string& curves_csv, const std::filesystem::path& plots_dir);

}  // namespace armswing
