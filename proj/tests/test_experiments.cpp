#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "armswing/experiments.hpp"

using namespace armswing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("armswing-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentOptions small_humanoid(const fs::path& out, const std::string& name) {
  ExperimentOptions opt;
  opt.config = Config::load(std::string(ARMSWING_CONFIG_DIR) + "/humanoid.cfg");
  opt.config.set("train.iterations", "1");
  opt.config.set("train.num_envs", "1");
  opt.config.set("train.horizon", "8");
  opt.config.set("train.checkpoint_every", "0");
  opt.out = out;
  opt.name = name;
  opt.deterministic = true;
  return opt;
}

}  // namespace

TEST_CASE("csv round trip and unit-suffixed lookup") {
  CsvTable t;
  t.header = {"t[s]", "name[-]", "value[N m]"};
  t.add_row({"0", "a", format_number(1.5)});
  t.add_row({"0.1", "b", format_number(-2.25e-7)});
  CHECK_THROWS(t.add_row({"1", "2"}));

  const fs::path dir = scratch_dir("csv");
  write_csv((dir / "x.csv").string(), t);
  const CsvTable back = read_csv((dir / "x.csv").string());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column_index("value") == 2);
  CHECK(back.column("value[N m]")[1] == doctest::Approx(-2.25e-7));
  CHECK(back.text_column("name") == std::vector<std::string>{"a", "b"});
  CHECK_THROWS(back.column_index("missing"));
  CHECK(parse_csv(to_csv_text(t)).rows == t.rows);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(median(v) == 3.0);
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 1.0) == 5.0);
  CHECK(percentile(v, 0.25) == doctest::Approx(2.0));
  CHECK(percentile(v, 0.05) <= percentile(v, 0.5));
  CHECK(percentile(v, 0.5) <= percentile(v, 0.95));

  std::vector<double> series(20);
  for (size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i);
  CHECK(tail_mean(series) == doctest::Approx(18.5));  // last two
  CHECK(head_mean(series) == doctest::Approx(0.5));   // first two
  CHECK(tail_mean({7.0}) == 7.0);

  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
}

TEST_CASE("touchdowns are rising edges of either foot") {
  using S = StanceFoot;
  CHECK(count_touchdowns({S::both, S::left, S::both, S::right, S::both, S::left}) == 2);
  CHECK(count_touchdowns({S::both, S::both, S::both}) == 0);
  CHECK(count_touchdowns({S::none, S::both}) == 2);
  CHECK(count_touchdowns({}) == 0);
}

TEST_CASE("blob hash matches git") {
  const fs::path dir = scratch_dir("hash");
  std::ofstream(dir / "hello.txt") << "hello\n";
  CHECK(git_blob_sha1((dir / "hello.txt").string()) == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("model paths resolve through the data directory and fail with the path") {
  CHECK(fs::exists(resolve_model_path("mini_humanoid.model")));
  try {
    resolve_model_path("no_such_robot.model");
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("no_such_robot.model") != std::string::npos);
  }
  Config c;
  c.set("task", "cartwheel");
  CHECK_THROWS_AS(make_task(c), ConfigError);
}

TEST_CASE("train writes a self-describing run directory, then analysis commands read it") {
  const fs::path out = scratch_dir("train");
  const TrainResult tr = cmd_train(small_humanoid(out, "run"));
  const fs::path dir = out / "run";
  REQUIRE(tr.dir == dir);
  for (const char* f : {"config.txt", "manifest.txt", "metrics.csv", "ckpt-final.bin",
                        "plots/reward.svg", "plots/adv_var.svg"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const std::string manifest = slurp(dir / "manifest.txt");
  CHECK(manifest.find("model_sha1 = ") != std::string::npos);
  CHECK(manifest.find("checkpoint_sha1 = " + git_blob_sha1((dir / "ckpt-final.bin").string())) !=
        std::string::npos);
  CHECK(read_csv((dir / "metrics.csv").string()).rows.size() == 1);

  const std::string ckpt = (dir / "ckpt-final.bin").string();
  SUBCASE("cam-trace components add up to the total") {
    ExperimentOptions opt = small_humanoid(out, "cam");
    const CamTraceResult r = cmd_cam_trace(opt, ckpt, 0.5, {0.3, 0.0, 0.2});
    REQUIRE(!r.table.rows.empty());
    const auto total = r.table.column("kz_total"), base = r.table.column("kz_base"),
               legs = r.table.column("kz_legs"), arms = r.table.column("kz_arms");
    for (size_t i = 0; i < total.size(); ++i) {
      CHECK(base[i] + legs[i] + arms[i] == doctest::Approx(total[i]).epsilon(1e-9));
    }
    CHECK(fs::exists(out / "cam" / "plots"));
  }
  SUBCASE("grm percentiles are ordered, a zero-step request is flagged") {
    ExperimentOptions opt = small_humanoid(out, "grm");
    const GrmResult r = cmd_grm_dist(opt, {ckpt}, 2, {0.3, 0.0, 0.0});
    REQUIRE(r.policies.size() == 1);
    const GrmSummary& g = r.policies[0];
    if (g.samples > 0) {
      CHECK(g.p5 <= g.p50);
      CHECK(g.p50 <= g.p95);
    } else {
      CHECK(!g.note.empty());
    }
  }
  SUBCASE("push grid covers every cell once per policy") {
    ExperimentOptions opt = small_humanoid(out, "push");
    opt.config.set("push.hold", "0.2");
    const PushGridResult r = cmd_push_grid(opt, {ckpt, ckpt}, 3, 5.0);
    REQUIRE(r.policies.size() == 2);
    CHECK(r.policies[0].torques == std::vector<double>{-5.0, 0.0, 5.0});
    CHECK(r.policies[0].success == r.policies[1].success);
    CHECK(r.area_ratio[1] == doctest::Approx(r.policies[0].successes() ? 1.0 : 0.0));
    CHECK(read_csv((out / "push" / "push_grid.csv").string()).rows.size() == 18);
  }
}

TEST_CASE("unknown config keys are rejected by train") {
  const fs::path out = scratch_dir("badkey");
  ExperimentOptions opt = small_humanoid(out, "run");
  opt.config.set("train.learning_rat", "0.1");
  CHECK_THROWS_AS(cmd_train(opt), ConfigError);
}

TEST_CASE("arch comparison writes one curve row per architecture, seed and iteration") {
  const fs::path out = scratch_dir("compare");
  ExperimentOptions opt;
  opt.config = Config::load(std::string(ARMSWING_CONFIG_DIR) + "/toy_coop.cfg");
  opt.config.set("train.num_envs", "2");
  opt.config.set("train.horizon", "8");
  opt.config.set("net.actor_hidden", "8");
  opt.config.set("net.critic_hidden", "8");
  opt.out = out;
  opt.name = "cmp";
  opt.deterministic = true;
  const ArchCompareResult r = cmd_toy_coop(opt, {1, 2}, 3);
  CHECK(r.failures.empty());
  CHECK(r.curves.rows.size() == 3u * 4u * 2u);
  CHECK(r.summaries.size() == 4);
  for (const auto& s : r.summaries) CHECK(s.seeds == 2);
  for (double w : r.curves.column("wall_clock_s")) CHECK(w == 0.0);
  const std::string first = slurp(out / "cmp" / "toy_coop.csv");

  opt.name = "cmp2";
  cmd_toy_coop(opt, {1, 2}, 3);
  CHECK(slurp(out / "cmp2" / "toy_coop.csv") == first);
}
