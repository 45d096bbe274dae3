#include <cmath>
#include <random>

#include "armswing/simulator.hpp"
#include "armswing/validation.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace armswing;
namespace val = armswing::validation;

namespace {

double pendulum_pivot_inertia() {
  return test_models::kPendulumIyyCom +
         test_models::kPendulumMass * test_models::kPendulumLength *
             test_models::kPendulumLength;
}

Vec6 momentum(const RobotModel& m, const SimState& s) {
  return compute_cmm(m, s.gen) * s.gen.qd;
}

SimState high_humanoid(const Simulator& sim) {
  const RobotModel& m = sim.model();
  GeneralizedState g = GeneralizedState::neutral(m);
  g.joint_positions() = m.q_ref();
  g.q[2] = 20.0;
  return sim.make_state(g);
}

}  // namespace

TEST_CASE("forward dynamics") {
  SUBCASE("projectile") {
    const RobotModel m = load_model(test_models::kSingleBody);
    GeneralizedState s = GeneralizedState::neutral(m);
    s.q[2] = 3.0;
    const VecX a = forward_dynamics(m, s, VecX::Zero(0));
    CHECK(a.head<3>().norm() < 1e-14);
    CHECK((a.tail<3>() - kDefaultGravity).norm() < 1e-14);

    // Tilted body: body-frame acceleration is gravity seen in body axes.
    std::mt19937_64 rng(2);
    s = val::random_state(m, rng);
    s.qd.setZero();
    const Mat3 R = s.base_quaternion().normalized().toRotationMatrix();
    const VecX b = forward_dynamics(m, s, VecX::Zero(0));
    CHECK((b.tail<3>() - R.transpose() * kDefaultGravity).norm() < 1e-13);
  }
  SUBCASE("pendulum released from horizontal") {
    const RobotModel m = load_model(test_models::kPendulum);
    GeneralizedState s = GeneralizedState::neutral(m);
    s.q[7] = M_PI / 2;
    const VecX a = forward_dynamics(m, s, VecX::Zero(1));
    const double expected = -test_models::kPendulumMass * 9.81 *
                            test_models::kPendulumLength /
                            pendulum_pivot_inertia();
    CHECK(a[6] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(a.head<6>().isZero());
  }
  SUBCASE("mass matrix is symmetric positive definite") {
    const RobotModel m = test_models::humanoid();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const GeneralizedState s = val::random_state(m, rng);
      const MatX M = mass_matrix(m, s);
      CHECK((M - M.transpose()).norm() < 1e-12);
      Eigen::SelfAdjointEigenSolver<MatX> eig(M);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      // Twice the kinetic energy.
      CHECK(s.qd.dot(M * s.qd) ==
            doctest::Approx(2.0 * kinetic_energy(m, s)).epsilon(1e-10));
    }
  }
  SUBCASE("massless model is rejected") {
    const RobotModel m = load_model(
        "body a parent=WORLD joint=floating mass=0 limb=base\n");
    CHECK_THROWS_AS(forward_dynamics(m, GeneralizedState::neutral(m), VecX(0)),
                    SingularMassMatrix);
  }
}

TEST_CASE("pendulum swing conserves energy") {
  const RobotModel m = load_model(test_models::kPendulum);
  const Simulator sim(m);
  GeneralizedState g = GeneralizedState::neutral(m);
  g.q[7] = 1.0;
  SimState s = sim.make_state(g);
  auto energy = [&](const SimState& st) {
    return kinetic_energy(m, st.gen) + potential_energy(m, st.gen);
  };
  const double e0 = energy(s);
  const double scale = test_models::kPendulumMass * 9.81 *
                       test_models::kPendulumLength;
  double worst = 0.0;
  double lowest_angle = 1.0;
  for (int k = 0; k < 1000; ++k) {
    s = sim.step(s, VecX::Zero(1), 0.001);
    worst = std::max(worst, std::abs(energy(s) - e0));
    lowest_angle = std::min(lowest_angle, s.gen.q[7]);
  }
  CHECK(worst / scale < 5e-3);
  CHECK(lowest_angle < -0.9);  // swung through to the other side
}

TEST_CASE("contact force law") {
  const ContactParams p;
  CHECK(contact_force(0.01, Vec3(0, 0, -1), p).isZero());
  CHECK(contact_force(0.0, Vec3(0, 0, -1), p).isZero());
  const Vec3 f = contact_force(-0.001, Vec3::Zero(), p);
  CHECK(f.z() == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(f.head<2>().isZero());
  // Pulling out fast: damping cannot make the normal force negative.
  CHECK(contact_force(-0.001, Vec3(0, 0, 5.0), p).isZero());
  const Vec3 slide = contact_force(-0.002, Vec3(10.0, -3.0, 0.0), p);
  CHECK(slide.head<2>().norm() == doctest::Approx(p.friction * slide.z()).epsilon(1e-12));
  CHECK(slide.x() < 0.0);
  const Vec3 creep = contact_force(-0.002, Vec3(1e-3, 0.0, 0.0), p);
  CHECK(creep.x() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("step") {
  SUBCASE("momentum is conserved without gravity or contact") {
    const RobotModel m = test_models::humanoid();
    const auto r = val::check_momentum_conservation(m, 1.0);
    CHECK_MESSAGE(r.passed, r.measured);
  }
  SUBCASE("box dropped from 5 cm comes to rest on its contacts") {
    const RobotModel m = load_model(test_models::kContactBox);
    const Simulator sim(m);
    GeneralizedState g = GeneralizedState::neutral(m);
    g.q[2] = 0.05 + 0.05;
    SimState s = sim.make_state(g);
    double min_normal = 0.0;
    for (int k = 0; k < 1000; ++k) {
      s = sim.step(s, VecX(0), 0.001);
      for (const auto& f : s.contact_forces) {
        min_normal = std::min(min_normal, f.z());
        CHECK(f.head<2>().norm() <= sim.options().contact.friction * f.z() + 1e-12);
      }
    }
    double total = 0.0;
    for (const auto& f : s.contact_forces) total += f.z();
    const double weight = m.total_mass() * 9.81;
    CHECK(std::abs(total - weight) / weight < 0.02);
    CHECK(min_normal >= 0.0);
    CHECK(s.contact_flags[0]);
    CHECK(s.contact_flags[1]);
    CHECK(s.time == doctest::Approx(1.0));
  }
  SUBCASE("torque impulse on a floating body") {
    const RobotModel m = load_model(test_models::kSingleBody);
    const Simulator sim(m);
    GeneralizedState g = GeneralizedState::neutral(m);
    g.q[2] = 10.0;
    SimState s = sim.make_state(g);
    const Vec6 h0 = momentum(m, s);
    s = apply_disturbance(s, SpatialForce{Vec3(3, 3, 3), Vec3::Zero()}, 0.1);
    for (int k = 0; k < 150; ++k) s = sim.step(s, VecX(0), 0.001);
    const Vec3 dk = (momentum(m, s) - h0).head<3>();
    for (int i = 0; i < 3; ++i) CHECK(std::abs(dk[i] - 0.3) < 0.003);
    CHECK_FALSE(s.external_wrench.has_value());
  }
  SUBCASE("wrench impulse on the humanoid") {
    const RobotModel m = test_models::humanoid();
    SimOptions opts;
    opts.gravity = Vec3::Zero();
    const Simulator sim(m, opts);
    SimState s = high_humanoid(sim);
    const Vec6 h0 = momentum(m, s);
    const SpatialForce w{Vec3(1.0, -2.0, 3.0), Vec3(10.0, 0.0, -5.0)};
    s = apply_disturbance(s, w, 0.1);
    VecX tau = VecX::Zero(m.n_joints());
    Vec6 impulse = Vec6::Zero();
    for (int k = 0; k < 200; ++k) {
      impulse += 0.001 * sim.external_wrench_about_com(s);
      s = sim.step(s, tau, 0.001);
    }
    const Vec6 dh = momentum(m, s) - h0;
    CHECK((dh - impulse).norm() <= 0.05 * impulse.norm());
    CHECK((dh.tail<3>() - 0.1 * w.force).norm() < 1e-9);
  }
  SUBCASE("zero wrench and expired wrench change nothing") {
    const RobotModel m = test_models::humanoid();
    const Simulator sim(m);
    SimState base = high_humanoid(sim);
    VecX tau = VecX::Constant(m.n_joints(), 0.5);
    SimState a = base, b = apply_disturbance(base, SpatialForce::zero(), 0.05);
    for (int k = 0; k < 100; ++k) {
      a = sim.step(a, tau, 0.001);
      b = sim.step(b, tau, 0.001);
    }
    CHECK(a.gen.q == b.gen.q);
    CHECK(a.gen.qd == b.gen.qd);

    SimState c = apply_disturbance(a, SpatialForce{Vec3(5, 0, 0), Vec3::Zero()}, 0.01);
    for (int k = 0; k < 10; ++k) c = sim.step(c, tau, 0.001);
    CHECK_FALSE(c.external_wrench.has_value());
    SimState d = c;
    d.external_wrench.reset();
    for (int k = 0; k < 20; ++k) {
      c = sim.step(c, tau, 0.001);
      d = sim.step(d, tau, 0.001);
    }
    CHECK(c.gen.q == d.gen.q);
    CHECK(c.gen.qd == d.gen.qd);
  }
  SUBCASE("non-positive duration is rejected") {
    const RobotModel m = load_model(test_models::kSingleBody);
    const Simulator sim(m);
    CHECK_THROWS_AS(apply_disturbance(sim.make_state(GeneralizedState::neutral(m)),
                                      SpatialForce::zero(), 0.0),
                    std::invalid_argument);
  }
  SUBCASE("deterministic") {
    const RobotModel m = test_models::humanoid();
    const Simulator sim(m);
    const SimState s = high_humanoid(sim);
    const VecX tau = VecX::LinSpaced(m.n_joints(), -3.0, 3.0);
    const SimState a = sim.step(s, tau, 0.001);
    const SimState b = sim.step(s, tau, 0.001);
    CHECK(a.gen.q == b.gen.q);
    CHECK(a.gen.qd == b.gen.qd);
  }
  SUBCASE("velocity guard marks the state invalid") {
    const RobotModel m = load_model(test_models::kSingleBody);
    const Simulator sim(m);
    GeneralizedState g = GeneralizedState::neutral(m);
    g.q[2] = 10;
    g.qd[3] = 2e4;
    const SimState s = sim.step(sim.make_state(g), VecX(0), 0.001);
    CHECK(s.invalid);
    const SimState t = sim.step(s, VecX(0), 0.001);
    CHECK(t.time == s.time);
  }
  SUBCASE("torques are clamped to the model limits") {
    const RobotModel m = test_models::humanoid();
    const Simulator sim(m);
    const VecX c = sim.clamp_torques(VecX::Constant(m.n_joints(), 100.0));
    CHECK((c.array() == 40.0).all());
  }
}

TEST_CASE("newton-euler consistency along a stepping rollout") {
  const RobotModel m = test_models::humanoid();
  const auto traj = val::stepping_rollout(m, 1.0, 5);
  const auto r = val::check_newton_euler(m, traj, 0.001, kDefaultGravity, 10);
  CHECK_MESSAGE(r.passed, r.detail, " ", r.measured);
  for (const auto& s : traj) {
    for (const auto& f : s.contact_forces) CHECK(f.z() >= 0.0);
  }
}

TEST_CASE("ground reaction moment about the centre of pressure") {
  const RobotModel m = load_model(test_models::kContactBox);
  const auto& pts = m.contact_points();
  SimState s;
  s.contact_forces.assign(4, Vec3::Zero());
  s.contact_positions = {Vec3(0.1, 0.08, 0), Vec3(-0.1, 0.08, 0),
                         Vec3(0.1, -0.08, 0), Vec3(-0.1, -0.08, 0)};

  SUBCASE("below threshold") {
    s.contact_forces[0] = Vec3(0, 0, 0.5);
    CHECK(grm_about_cp(s, pts).stance_foot == StanceFoot::none);
  }
  SUBCASE("single point") {
    s.contact_forces[0] = Vec3(3, -2, 50);
    const GrmSample g = grm_about_cp(s, pts);
    CHECK((g.cp - Vec2(0.1, 0.08)).norm() < 1e-15);
    CHECK(g.mz == 0.0);
    CHECK(g.stance_foot == StanceFoot::left);
  }
  SUBCASE("opposing lateral forces at toe and heel") {
    const double fy = 7.0;
    s.contact_forces[0] = Vec3(0, fy, 40);
    s.contact_forces[1] = Vec3(0, -fy, 40);
    const GrmSample g = grm_about_cp(s, pts);
    CHECK((g.cp - Vec2(0.0, 0.08)).norm() < 1e-15);
    CHECK(g.mz == doctest::Approx(2 * 0.1 * fy).epsilon(1e-12));
  }
  SUBCASE("mirror-symmetric double stance") {
    s.contact_forces[0] = Vec3(1, 2, 30);
    s.contact_forces[1] = Vec3(-1, 2, 20);
    s.contact_forces[2] = Vec3(1, -2, 30);
    s.contact_forces[3] = Vec3(-1, -2, 20);
    const GrmSample g = grm_about_cp(s, pts);
    CHECK(std::abs(g.cp.y()) < 1e-15);
    CHECK(g.stance_foot == StanceFoot::both);
    CHECK(std::string(to_string(g.stance_foot)) == "double");
  }
}
