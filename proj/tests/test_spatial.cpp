#include <cmath>
#include <random>

#include "armswing/spatial.hpp"
#include "doctest.h"

using namespace armswing;

namespace {

std::mt19937_64 rng(1234);

Vec3 rand3(double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

SpatialMotion rand_motion() { return {rand3(), rand3()}; }
SpatialForce rand_force() { return {rand3(), rand3()}; }

Mat3 rand_rotation() {
  Eigen::Quaterniond q(rand3().x(), rand3().x(), rand3().y(), rand3().z());
  return q.normalized().toRotationMatrix();
}

PluckerTransform rand_transform() { return {rand_rotation(), rand3(2.0)}; }

// Explicit 6x6 operators written out block by block.
Mat6 crm_oracle(const Vec3& w, const Vec3& v) {
  Mat6 M = Mat6::Zero();
  M.topLeftCorner<3, 3>() = skew(w);
  M.bottomLeftCorner<3, 3>() = skew(v);
  M.bottomRightCorner<3, 3>() = skew(w);
  return M;
}

Mat6 motion_transform_oracle(const Mat3& E, const Vec3& r) {
  Mat6 X = Mat6::Zero();
  X.topLeftCorner<3, 3>() = E;
  X.bottomRightCorner<3, 3>() = E;
  X.bottomLeftCorner<3, 3>() = -E * skew(r);
  return X;
}

}  // namespace

TEST_CASE("skew matches the cross product") {
  const Vec3 a = rand3(), b = rand3();
  CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
}

TEST_CASE("motion cross product") {
  SUBCASE("self cross vanishes") {
    const SpatialMotion a = rand_motion();
    CHECK(motion_cross(a, a).to_vector().norm() < 1e-15);
  }
  SUBCASE("z cross x is y") {
    const SpatialMotion a{Vec3::UnitZ(), Vec3::Zero()};
    const SpatialMotion b{Vec3::UnitX(), Vec3::Zero()};
    const SpatialMotion c = motion_cross(a, b);
    CHECK(c.angular.isApprox(Vec3::UnitY()));
    CHECK(c.linear.isZero());
  }
  SUBCASE("matches the explicit 6x6 operator") {
    for (int i = 0; i < 100; ++i) {
      const SpatialMotion a = rand_motion(), b = rand_motion();
      const Vec6 expected = crm_oracle(a.angular, a.linear) * b.to_vector();
      CHECK((motion_cross(a, b).to_vector() - expected).norm() < 1e-14);
      CHECK((motion_cross_matrix(a) - crm_oracle(a.angular, a.linear)).norm() <
            1e-15);
    }
  }
}

TEST_CASE("force cross product") {
  SUBCASE("zero motion leaves nothing") {
    CHECK(force_cross(SpatialMotion::zero(), rand_force()).to_vector().isZero());
  }
  SUBCASE("duality over 1000 random triples") {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const SpatialMotion a = rand_motion(), b = rand_motion();
      const SpatialForce f = rand_force();
      worst = std::max(
          worst, std::abs(dot(force_cross(a, f), b) + dot(f, motion_cross(a, b))));
    }
    CHECK(worst < 1e-12);
  }
  SUBCASE("rate of change of a world-fixed force seen from a spinning frame") {
    // Frame spinning about z at unit rate: f_frame(t) = X(t) f and
    // d/dt f_frame = -(a x_f f) at t = 0.
    const SpatialMotion a{Vec3::UnitZ(), Vec3::Zero()};
    const SpatialForce f{rand3(), Vec3::UnitX()};
    const double h = 1e-6;
    auto at = [&](double t) {
      return transform_force(
                 PluckerTransform::from_pose(
                     axis_angle_rotation(Vec3::UnitZ(), t), Vec3::Zero()),
                 f)
          .to_vector();
    };
    const Vec6 fd = (at(h) - at(-h)) / (2 * h);
    CHECK((fd + force_cross(a, f).to_vector()).norm() < 1e-8);
    // The pure x force turns toward -y in the frame.
    CHECK(fd[4] == doctest::Approx(-1.0).epsilon(1e-8));
  }
}

TEST_CASE("transform_motion") {
  const SpatialMotion m = rand_motion();
  SUBCASE("identity") {
    CHECK(transform_motion(PluckerTransform::identity(), m).to_vector() ==
          m.to_vector());
  }
  SUBCASE("inverse recovers the input") {
    const PluckerTransform X = rand_transform();
    const SpatialMotion back = transform_motion(X.inverse(), transform_motion(X, m));
    CHECK((back.to_vector() - m.to_vector()).norm() < 1e-12);
    CHECK((X.apply_inverse(X.apply(m)).to_vector() - m.to_vector()).norm() <
          1e-12);
  }
  SUBCASE("pure translation of a pure rotation") {
    const Vec3 d = rand3();
    const SpatialMotion w{rand3(), Vec3::Zero()};
    const SpatialMotion out =
        transform_motion(PluckerTransform::pure_translation(d), w);
    CHECK((out.linear + d.cross(w.angular)).norm() < 1e-15);
    const Vec6 expected =
        motion_transform_oracle(Mat3::Identity(), d) * w.to_vector();
    CHECK((out.to_vector() - expected).norm() < 1e-14);
  }
  SUBCASE("general transform matches the 6x6 form") {
    for (int i = 0; i < 100; ++i) {
      const PluckerTransform X = rand_transform();
      const Vec6 expected =
          motion_transform_oracle(X.rotation, X.translation) * m.to_vector();
      CHECK((X.apply(m).to_vector() - expected).norm() < 1e-13);
      CHECK((X.motion_matrix() -
             motion_transform_oracle(X.rotation, X.translation))
                .norm() < 1e-14);
    }
  }
  SUBCASE("force transform preserves power") {
    const PluckerTransform X = rand_transform();
    const SpatialForce f = rand_force();
    CHECK(dot(X.apply(f), X.apply(m)) == doctest::Approx(dot(f, m)).epsilon(1e-12));
    CHECK((X.force_matrix() - X.motion_matrix().inverse().transpose()).norm() <
          1e-12);
  }
}

TEST_CASE("transform composition") {
  const PluckerTransform A = rand_transform(), B = rand_transform();
  const SpatialMotion m = rand_motion();
  CHECK(((B * A).apply(m).to_vector() - B.apply(A.apply(m)).to_vector()).norm() <
        1e-12);

  SUBCASE("chains of 1000 stay orthonormal") {
    PluckerTransform X;
    for (int i = 0; i < 1000; ++i) {
      // Slightly off-orthonormal factors, as accumulated float error produces.
      PluckerTransform step = rand_transform();
      step.rotation += 5e-11 * Mat3::Random();
      X = step * X;
    }
    CHECK(X.orthonormality_defect() < 1e-8);
    CHECK(std::abs(X.rotation.determinant() - 1.0) < 1e-8);
  }
  SUBCASE("reorthonormalize returns the polar factor") {
    const Mat3 R = rand_rotation();
    const Mat3 fixed = reorthonormalize(R + 1e-6 * Mat3::Random());
    CHECK((fixed.transpose() * fixed - Mat3::Identity()).norm() < 1e-14);
    CHECK((fixed - R).norm() < 1e-5);
  }
}

TEST_CASE("spatial inertia") {
  const Vec3 c = rand3(0.3);
  Mat3 Ic = Mat3::Random();
  Ic = Ic * Ic.transpose() + 0.1 * Mat3::Identity();
  const SpatialInertia I = SpatialInertia::from_com_inertia(2.5, c, Ic);

  SUBCASE("round trip to the CoM") {
    CHECK((I.inertia_about_com() - Ic).norm() < 1e-14);
  }
  SUBCASE("operator matches the 6x6 matrix") {
    const SpatialMotion v = rand_motion();
    CHECK(((I * v).to_vector() - I.matrix() * v.to_vector()).norm() < 1e-13);
    CHECK((I.matrix() - I.matrix().transpose()).norm() < 1e-14);
  }
  SUBCASE("identity transform") {
    const SpatialInertia J = transform_inertia(PluckerTransform::identity(), I);
    CHECK(J.mass == I.mass);
    CHECK((J.rot_inertia - I.rot_inertia).norm() < 1e-15);
    CHECK((J.com_offset - I.com_offset).norm() < 1e-15);
  }
  SUBCASE("kinetic energy is frame independent") {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const PluckerTransform X = rand_transform();
      const SpatialMotion v = rand_motion();
      const SpatialInertia J = transform_inertia(X, I);
      CHECK(J.mass == I.mass);
      const double before = I.kinetic_energy(v);
      const double after = J.kinetic_energy(X.apply(v));
      worst = std::max(worst, std::abs(after - before) / before);
      CHECK((J.rot_inertia - J.rot_inertia.transpose()).norm() < 1e-12);
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("parallel axis for a translated point mass") {
    const double m = 1.7;
    const Vec3 d = rand3();
    const SpatialInertia J = transform_inertia(
        PluckerTransform::pure_translation(d), SpatialInertia::point_mass(m, Vec3::Zero()));
    const Mat3 expected = m * (d.dot(d) * Mat3::Identity() - d * d.transpose());
    CHECK((J.rot_inertia - expected).norm() < 1e-14);
    CHECK((J.com_offset + d).norm() < 1e-15);
  }
  SUBCASE("sum of inertias") {
    const SpatialInertia P = SpatialInertia::point_mass(1.0, rand3());
    const SpatialMotion v = rand_motion();
    CHECK((((I + P) * v).to_vector() - (I * v).to_vector() - (P * v).to_vector())
              .norm() < 1e-13);
  }
}
