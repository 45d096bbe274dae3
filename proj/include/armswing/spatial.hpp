#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

// Spatial (6D) vector algebra. All 6-vectors are stacked angular-first:
// motion = (angular, linear), force = (moment, force).
namespace armswing {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

Mat3 skew(const Vec3& v);

// Rotation from roll/pitch/yaw (fixed-axis x, then y, then z): Rz * Ry * Rx.
Mat3 rpy_to_rotation(const Vec3& rpy);
Mat3 axis_angle_rotation(const Vec3& unit_axis, double angle);

struct SpatialMotion {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  static SpatialMotion zero() { return {}; }
  static SpatialMotion from_vector(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  Vec6 to_vector() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }

  SpatialMotion operator+(const SpatialMotion& o) const {
    return {angular + o.angular, linear + o.linear};
  }
  SpatialMotion operator-(const SpatialMotion& o) const {
    return {angular - o.angular, linear - o.linear};
  }
  SpatialMotion operator*(double s) const { return {angular * s, linear * s}; }
  SpatialMotion& operator+=(const SpatialMotion& o) {
    angular += o.angular;
    linear += o.linear;
    return *this;
  }
};

struct SpatialForce {
  Vec3 moment = Vec3::Zero();
  Vec3 force = Vec3::Zero();

  static SpatialForce zero() { return {}; }
  static SpatialForce from_vector(const Vec6& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  Vec6 to_vector() const {
    Vec6 v;
    v << moment, force;
    return v;
  }

  SpatialForce operator+(const SpatialForce& o) const {
    return {moment + o.moment, force + o.force};
  }
  SpatialForce operator-(const SpatialForce& o) const {
    return {moment - o.moment, force - o.force};
  }
  SpatialForce operator*(double s) const { return {moment * s, force * s}; }
  SpatialForce& operator+=(const SpatialForce& o) {
    moment += o.moment;
    force += o.force;
    return *this;
  }
  SpatialForce& operator-=(const SpatialForce& o) {
    moment -= o.moment;
    force -= o.force;
    return *this;
  }
};

// Power pairing <f, m>.
inline double dot(const SpatialForce& f, const SpatialMotion& m) {
  return f.moment.dot(m.angular) + f.force.dot(m.linear);
}

// a x_m b
SpatialMotion motion_cross(const SpatialMotion& a, const SpatialMotion& b);
// a x_f f  (dual of motion_cross: <a x_f f, b> = -<f, a x_m b>)
SpatialForce force_cross(const SpatialMotion& a, const SpatialForce& f);
Mat6 motion_cross_matrix(const SpatialMotion& a);
Mat6 force_cross_matrix(const SpatialMotion& a);

/// Coordinate transform from frame A to frame B.
///
/// `rotation` maps A coordinates to B coordinates (B_R_A) and `translation`
/// is the position of B's origin expressed in A coordinates. Motion vectors
/// map as (E w, E (v - r x w)).
struct PluckerTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PluckerTransform identity() { return {}; }
  static PluckerTransform pure_rotation(const Mat3& E) {
    return {E, Vec3::Zero()};
  }
  static PluckerTransform pure_translation(const Vec3& r) {
    return {Mat3::Identity(), r};
  }
  // Transform from a parent frame into a child frame whose pose relative to
  // the parent is (R, p): child axes are R's columns, child origin at p.
  static PluckerTransform from_pose(const Mat3& R, const Vec3& p) {
    return {R.transpose(), p};
  }

  SpatialMotion apply(const SpatialMotion& m) const;
  SpatialForce apply(const SpatialForce& f) const;
  SpatialMotion apply_inverse(const SpatialMotion& m) const;
  SpatialForce apply_inverse(const SpatialForce& f) const;

  PluckerTransform inverse() const;

  // (X_CB * X_BA) = X_CA. Re-orthonormalizes the product when its defect
  // exceeds kOrthonormalityTolerance.
  PluckerTransform operator*(const PluckerTransform& rhs) const;

  Mat6 motion_matrix() const;
  Mat6 force_matrix() const;

  // max |E^T E - I| entry.
  double orthonormality_defect() const;
  bool is_valid(double tol = 1e-10) const;

  static constexpr double kOrthonormalityTolerance = 1e-9;
};

// Nearest rotation (polar factor) of a near-orthonormal matrix.
Mat3 reorthonormalize(const Mat3& R);

SpatialMotion transform_motion(const PluckerTransform& X,
                               const SpatialMotion& m);
SpatialForce transform_force(const PluckerTransform& X, const SpatialForce& f);

/// Rigid-body inertia about a frame's origin, in that frame's coordinates.
struct SpatialInertia {
  double mass = 0.0;
  Vec3 com_offset = Vec3::Zero();
  Mat3 rot_inertia = Mat3::Zero();  // about the frame origin

  static SpatialInertia zero() { return {}; }
  // Builds from inertia about the CoM (parallel-axis shift to the origin).
  static SpatialInertia from_com_inertia(double mass, const Vec3& com,
                                         const Mat3& inertia_about_com);
  static SpatialInertia point_mass(double mass, const Vec3& position) {
    return from_com_inertia(mass, position, Mat3::Zero());
  }

  Vec3 first_moment() const { return mass * com_offset; }
  Mat3 inertia_about_com() const;

  SpatialForce operator*(const SpatialMotion& v) const;
  SpatialInertia operator+(const SpatialInertia& o) const;
  SpatialInertia& operator+=(const SpatialInertia& o);

  Mat6 matrix() const;
  double kinetic_energy(const SpatialMotion& v) const {
    return 0.5 * dot((*this) * v, v);
  }
};

SpatialInertia transform_inertia(const PluckerTransform& X,
                                 const SpatialInertia& I);

}  // namespace armswing
