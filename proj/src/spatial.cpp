#include "armswing/spatial.hpp"

#include <cmath>

namespace armswing {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rpy_to_rotation(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Mat3 axis_angle_rotation(const Vec3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

SpatialMotion motion_cross(const SpatialMotion& a, const SpatialMotion& b) {
  return {a.angular.cross(b.angular),
          a.angular.cross(b.linear) + a.linear.cross(b.angular)};
}

SpatialForce force_cross(const SpatialMotion& a, const SpatialForce& f) {
  return {a.angular.cross(f.moment) + a.linear.cross(f.force),
          a.angular.cross(f.force)};
}

Mat6 motion_cross_matrix(const SpatialMotion& a) {
  Mat6 m = Mat6::Zero();
  const Mat3 w = skew(a.angular);
  m.topLeftCorner<3, 3>() = w;
  m.bottomLeftCorner<3, 3>() = skew(a.linear);
  m.bottomRightCorner<3, 3>() = w;
  return m;
}

Mat6 force_cross_matrix(const SpatialMotion& a) {
  return -motion_cross_matrix(a).transpose();
}

SpatialMotion PluckerTransform::apply(const SpatialMotion& m) const {
  return {rotation * m.angular,
          rotation * (m.linear - translation.cross(m.angular))};
}

SpatialForce PluckerTransform::apply(const SpatialForce& f) const {
  return {rotation * (f.moment - translation.cross(f.force)),
          rotation * f.force};
}

SpatialMotion PluckerTransform::apply_inverse(const SpatialMotion& m) const {
  const Vec3 w = rotation.transpose() * m.angular;
  return {w, rotation.transpose() * m.linear + translation.cross(w)};
}

SpatialForce PluckerTransform::apply_inverse(const SpatialForce& f) const {
  const Vec3 force = rotation.transpose() * f.force;
  return {rotation.transpose() * f.moment + translation.cross(force), force};
}

PluckerTransform PluckerTransform::inverse() const {
  return {rotation.transpose(), -(rotation * translation)};
}

PluckerTransform PluckerTransform::operator*(
    const PluckerTransform& rhs) const {
  PluckerTransform out{rotation * rhs.rotation,
                       rhs.translation + rhs.rotation.transpose() * translation};
  if (out.orthonormality_defect() > kOrthonormalityTolerance) {
    out.rotation = reorthonormalize(out.rotation);
  }
  return out;
}

Mat6 PluckerTransform::motion_matrix() const {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = rotation;
  m.bottomLeftCorner<3, 3>() = -rotation * skew(translation);
  m.bottomRightCorner<3, 3>() = rotation;
  return m;
}

Mat6 PluckerTransform::force_matrix() const {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 3>() = -rotation * skew(translation);
  m.bottomRightCorner<3, 3>() = rotation;
  return m;
}

double PluckerTransform::orthonormality_defect() const {
  return (rotation.transpose() * rotation - Mat3::Identity())
      .cwiseAbs()
      .maxCoeff();
}

bool PluckerTransform::is_valid(double tol) const {
  return orthonormality_defect() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol &&
         translation.allFinite();
}

Mat3 reorthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

SpatialMotion transform_motion(const PluckerTransform& X,
                               const SpatialMotion& m) {
  return X.apply(m);
}

SpatialForce transform_force(const PluckerTransform& X,
                             const SpatialForce& f) {
  return X.apply(f);
}

SpatialInertia SpatialInertia::from_com_inertia(double mass, const Vec3& com,
                                                const Mat3& inertia_about_com) {
  const Mat3 c = skew(com);
  return {mass, com, inertia_about_com - mass * c * c};
}

Mat3 SpatialInertia::inertia_about_com() const {
  const Mat3 c = skew(com_offset);
  return rot_inertia + mass * c * c;
}

SpatialForce SpatialInertia::operator*(const SpatialMotion& v) const {
  const Vec3 h = first_moment();
  return {rot_inertia * v.angular + h.cross(v.linear),
          mass * v.linear - h.cross(v.angular)};
}

SpatialInertia SpatialInertia::operator+(const SpatialInertia& o) const {
  SpatialInertia out = *this;
  out += o;
  return out;
}

SpatialInertia& SpatialInertia::operator+=(const SpatialInertia& o) {
  const double m = mass + o.mass;
  const Vec3 h = first_moment() + o.first_moment();
  com_offset = m > 0.0 ? Vec3(h / m) : Vec3::Zero();
  mass = m;
  rot_inertia += o.rot_inertia;
  return *this;
}

Mat6 SpatialInertia::matrix() const {
  Mat6 m = Mat6::Zero();
  const Mat3 h = skew(first_moment());
  m.topLeftCorner<3, 3>() = rot_inertia;
  m.topRightCorner<3, 3>() = h;
  m.bottomLeftCorner<3, 3>() = -h;
  m.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return m;
}

SpatialInertia transform_inertia(const PluckerTransform& X,
                                 const SpatialInertia& I) {
  const Mat3& E = X.rotation;
  const Vec3 com = E * (I.com_offset - X.translation);
  Mat3 about_com = E * I.inertia_about_com() * E.transpose();
  about_com = 0.5 * (about_com + about_com.transpose());
  return SpatialInertia::from_com_inertia(I.mass, com, about_com);
}

}  // namespace armswing
