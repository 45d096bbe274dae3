#include <cmath>
#include <random>

#include "doctest.h"

#include "armswing/toy_envs.hpp"

using namespace armswing;

namespace {

// Point-mass positions of the two arm links, written out independently.
std::array<Eigen::Vector2d, 3> positions(const Eigen::Vector3d& q, double l) {
  const Eigen::Vector2d cart(q[0], 0.0);
  const Eigen::Vector2d p1 = cart + l * Eigen::Vector2d(std::sin(q[1]), -std::cos(q[1]));
  const Eigen::Vector2d p2 =
      p1 + l * Eigen::Vector2d(std::sin(q[1] + q[2]), -std::cos(q[1] + q[2]));
  return {cart, p1, p2};
}

std::array<Eigen::Vector2d, 3> velocities(const Eigen::Vector3d& q, const Eigen::Vector3d& qd,
                                          double l) {
  const double h = 1e-6;
  const auto a = positions(q + h * qd, l), b = positions(q - h * qd, l);
  return {(a[0] - b[0]) / (2 * h), (a[1] - b[1]) / (2 * h), (a[2] - b[2]) / (2 * h)};
}

void random_state(std::mt19937_64& rng, Eigen::Vector3d& q, Eigen::Vector3d& qd) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  q = {u(rng), u(rng), u(rng)};
  qd = {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("pendulum reward and termination") {
  CHECK(PendulumBalanceEnv::reward(0, 0, 0) == doctest::Approx(1.0));
  CHECK(PendulumBalanceEnv::reward(0.1, 1.0, 0.5) ==
        doctest::Approx(std::exp(-0.2 - 0.01) - 0.00025).epsilon(1e-12));

  PendulumBalanceEnv env;
  env.reset(1);
  env.set_state(0.9, 3.0);
  const Transition t = env.step({VecX::Zero(1)});
  CHECK(t.terminated);
  CHECK(t.rewards[0] == 0.0);
}

TEST_CASE("pendulum: PD oracle balances, the passive pendulum falls") {
  const PendulumConfig cfg;
  CHECK(pendulum_pd_return(cfg, 10, 1) > 0.8 * cfg.episode_steps);

  PendulumBalanceEnv env(cfg);
  Transition t = env.reset(3);
  env.set_state(0.2, 0.0);
  int steps = 0;
  while (!t.terminated && !t.truncated) {
    t = env.step({VecX::Zero(1)});
    ++steps;
  }
  CHECK(t.terminated);
  CHECK(steps < cfg.episode_steps);
}

TEST_CASE("pendulum reset is deterministic and truncates at the episode length") {
  PendulumBalanceEnv a, b;
  CHECK(a.reset(7).obs[0] == b.reset(7).obs[0]);
  CHECK(a.reset(7).obs[0] != a.reset(8).obs[0]);

  PendulumConfig cfg;
  PendulumBalanceEnv env(cfg);
  Transition t = env.reset(1);
  int steps = 0;
  while (!t.terminated && !t.truncated) {
    t = env.step({VecX::Constant(1, pendulum_pd_action(env.angle(), env.rate(), cfg))});
    ++steps;
  }
  CHECK(t.truncated);
  CHECK(steps == cfg.episode_steps);
}

TEST_CASE("toy-coop dimensions and observation layout") {
  ToyCoopEnv env;
  const Transition t = env.reset(4);
  REQUIRE(t.obs.size() == 2);
  CHECK(t.obs[0].size() == env.local_obs_dim(0));
  CHECK(t.obs[1].size() == env.local_obs_dim(1));
  CHECK(t.global_obs.size() == env.global_obs_dim());
  CHECK(env.action_dim(0) == 2);
  CHECK(env.action_dim(1) == 1);
  // The command reaches the cart agent and the global view, never the arm.
  CHECK(t.obs[1][2] == env.command());
  CHECK(t.global_obs[2] == env.command());
  for (Eigen::Index i = 0; i < t.obs[0].size(); ++i) {
    if (env.command() != 0.0) CHECK(t.obs[0][i] != env.command());
  }
  CHECK(t.obs[0][1] == doctest::Approx(env.angular_momentum()));
}

TEST_CASE("toy-coop mass matrix matches the kinetic energy of the point masses") {
  ToyCoopConfig cfg;
  ToyCoopEnv env(cfg);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d q, qd;
    random_state(rng, q, qd);
    env.set_state(q, qd);
    const auto v = velocities(q, qd, cfg.link_length);
    const double ke = 0.5 * cfg.cart_mass * v[0].squaredNorm() +
                      0.5 * cfg.link_mass * (v[1].squaredNorm() + v[2].squaredNorm());
    CHECK(env.kinetic_energy() == doctest::Approx(ke).epsilon(1e-8));
    const Eigen::Matrix3d m = env.mass_matrix();
    CHECK((m - m.transpose()).norm() == 0.0);
    CHECK(m.ldlt().isPositive());
  }
}

TEST_CASE("toy-coop angular momentum about the CoM") {
  ToyCoopConfig cfg;
  ToyCoopEnv env(cfg);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d q, qd;
    random_state(rng, q, qd);
    env.set_state(q, qd);
    const auto p = positions(q, cfg.link_length);
    const auto v = velocities(q, qd, cfg.link_length);
    const double m[] = {cfg.cart_mass, cfg.link_mass, cfg.link_mass};
    Eigen::Vector2d com = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) com += m[i] * p[static_cast<size_t>(i)];
    com /= m[0] + m[1] + m[2];
    double want = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d r = p[static_cast<size_t>(i)] - com, u = v[static_cast<size_t>(i)];
      want += m[i] * (r.x() * u.y() - r.y() * u.x());
    }
    CHECK(env.angular_momentum() == doctest::Approx(want).epsilon(1e-8));

    // Independent of where the cart sits and of a uniform drift.
    env.set_state(q + Eigen::Vector3d(5.0, 0, 0), qd);
    CHECK(env.angular_momentum() == doctest::Approx(want).epsilon(1e-8));
    env.set_state(q, qd + Eigen::Vector3d(1.5, 0, 0));
    CHECK(env.angular_momentum() == doctest::Approx(want).epsilon(1e-8));
  }
  env.set_state(Eigen::Vector3d(0.3, 0.5, -0.2), Eigen::Vector3d::Zero());
  CHECK(env.angular_momentum() == 0.0);
}

TEST_CASE("toy-coop unforced, undamped motion conserves energy") {
  ToyCoopConfig cfg;
  ToyCoopEnv env(cfg);
  env.set_state(Eigen::Vector3d(0, 0.8, -0.4), Eigen::Vector3d(0.3, 0.0, 1.0));
  const double e0 = env.kinetic_energy() + env.potential_energy();
  const double h = 1e-4;
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    env.integrate(Eigen::Vector3d::Zero(), h);
    worst = std::max(worst, std::abs(env.kinetic_energy() + env.potential_energy() - e0));
  }
  CHECK(worst < 1e-3 * std::max(1.0, std::abs(e0)));
}

TEST_CASE("toy-coop arm torques leave the horizontal momentum unchanged") {
  ToyCoopConfig cfg;
  ToyCoopEnv env(cfg);
  env.set_state(Eigen::Vector3d(0, 0.2, 0.1), Eigen::Vector3d(0.5, 0.0, 0.0));
  const double p0 = (env.mass_matrix() * env.qd())[0];
  const double h = 1e-4;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    env.integrate(Eigen::Vector3d(0.0, std::sin(i * h * 7.0), -0.8), h);
    worst = std::max(worst, std::abs((env.mass_matrix() * env.qd())[0] - p0));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("toy-coop rewards, command schedule and truncation") {
  ToyCoopConfig cfg;
  ToyCoopEnv env(cfg);
  Transition t = env.reset(5);
  const double cmd0 = env.command();
  CHECK(std::abs(cmd0) <= cfg.command_range);
  const int period = static_cast<int>(std::lround(cfg.command_period / cfg.dt));
  int steps = 0;
  bool changed_early = false;
  while (!t.terminated && !t.truncated) {
    t = env.step({Eigen::Vector2d(0.1, -0.1), VecX::Constant(1, 0.2)});
    ++steps;
    if (steps < period && env.command() != cmd0) changed_early = true;
    if (steps == period) CHECK(env.command() != cmd0);
    REQUIRE(t.components.size() == 2);
    CHECK(t.components[0][0].second > 0.0);
    CHECK(t.components[0][0].second <= 1.0);
    CHECK(t.components[0][1].second >= 0.0);
    CHECK(t.components[0][2].second == doctest::Approx(0.02));
    CHECK(t.components[1][1].second == doctest::Approx(0.04));
    CHECK(t.tracking == t.components[1][0].second);
    CHECK(t.rewards[0] == doctest::Approx(cfg.w_cam * t.components[0][0].second +
                                          cfg.w_dcam * t.components[0][1].second -
                                          cfg.w_arm_effort * 0.02));
    CHECK(t.rewards[1] == doctest::Approx(cfg.w_vt * t.tracking - cfg.w_cart_effort * 0.04));
  }
  CHECK_FALSE(changed_early);
  CHECK(t.truncated);
  CHECK(steps == cfg.episode_steps);
}

TEST_CASE("toy-coop velocity tracking is exact at the command") {
  ToyCoopConfig cfg;
  cfg.cart_damping = 0.0;
  ToyCoopEnv env(cfg);
  env.reset(1);
  env.set_command(0.4);
  env.set_state(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.4, 0, 0));
  const Transition t = env.step({Eigen::Vector2d::Zero(), VecX::Zero(1)});
  CHECK(t.tracking == doctest::Approx(1.0));
  CHECK(t.components[0][0].second == doctest::Approx(1.0));
}

TEST_CASE("toy-coop non-finite state terminates with zero reward") {
  ToyCoopEnv env;
  env.reset(1);
  env.set_state(Eigen::Vector3d(0, NAN, 0), Eigen::Vector3d::Zero());
  const Transition t = env.step({Eigen::Vector2d::Zero(), VecX::Zero(1)});
  CHECK(t.terminated);
  CHECK(t.rewards[0] == 0.0);
  CHECK(t.rewards[1] == 0.0);
  CHECK(t.global_obs.allFinite());
}

TEST_CASE("toy configs parse and validate") {
  Config c;
  c.set("toy.link_mass", "0.8");
  c.set("toy.command_period", "1.5");
  const ToyCoopConfig t = ToyCoopConfig::from_config(c);
  CHECK(t.link_mass == doctest::Approx(0.8));
  CHECK(t.command_period == doctest::Approx(1.5));
  Config bad;
  bad.set("toy.dt", "0");
  CHECK_THROWS_AS(ToyCoopConfig::from_config(bad), ConfigError);

  Config p;
  p.set("pendulum.max_torque", "5");
  CHECK(PendulumConfig::from_config(p).max_torque == doctest::Approx(5.0));
  Config bad_p;
  bad_p.set("pendulum.substeps", "0");
  CHECK_THROWS_AS(PendulumConfig::from_config(bad_p), ConfigError);
}
