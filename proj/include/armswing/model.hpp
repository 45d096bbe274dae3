#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "armswing/spatial.hpp"

namespace armswing {

enum class JointType { revolute, floating };
enum class Limb { base, leg, arm };
enum class Foot { left, right };
enum class ContactRole { toe, heel };

const char* to_string(JointType t);
const char* to_string(Limb l);
const char* to_string(Foot f);
const char* to_string(ContactRole r);

class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          what
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct JointSpec {
  std::string name;
  int parent = -1;  // body index, -1 = world
  JointType type = JointType::revolute;
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin_xyz = Vec3::Zero();
  Vec3 origin_rpy = Vec3::Zero();
  // Parent body frame -> joint frame (before joint motion).
  PluckerTransform origin;
  std::array<double, 2> position_limits{-1.0, 1.0};
  double velocity_limit = 1.0;
  double torque_limit = 1.0;
};

struct Body {
  JointSpec joint;
  Limb limb = Limb::base;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia_about_com = Mat3::Zero();  // as written in the model file
  SpatialInertia inertia;                 // about the body origin
  int q_index = 0;  // first position coordinate
  int v_index = 0;  // first velocity coordinate
};

struct ContactPoint {
  int body = 0;
  Vec3 offset = Vec3::Zero();  // body frame
  ContactRole role = ContactRole::toe;
  Foot foot = Foot::left;
};

/// Immutable kinematic tree. Velocity coordinates are ordered
/// (w_B, v_B, legs..., arms...), position coordinates
/// (p_B, quat_B [w x y z], legs..., arms...).
class RobotModel {
 public:
  const std::vector<Body>& bodies() const { return bodies_; }
  const Body& body(int i) const { return bodies_[static_cast<size_t>(i)]; }
  int num_bodies() const { return static_cast<int>(bodies_.size()); }

  int n_leg() const { return n_leg_; }
  int n_arm() const { return n_arm_; }
  int n_joints() const { return n_leg_ + n_arm_; }
  int nq() const { return 7 + n_joints(); }
  int nv() const { return 6 + n_joints(); }

  // Joint-coordinate vectors are indexed 0..n_joints()-1 (= v_index - 6).
  const VecX& q_ref() const { return q_ref_; }
  const std::vector<int>& joint_bodies() const { return joint_bodies_; }
  const Body& joint_body(int joint) const {
    return body(joint_bodies_[static_cast<size_t>(joint)]);
  }

  const std::vector<int>& base_coords() const { return base_coords_; }
  const std::vector<int>& leg_coords() const { return leg_coords_; }
  const std::vector<int>& arm_coords() const { return arm_coords_; }

  const std::vector<ContactPoint>& contact_points() const { return contacts_; }

  bool fixed_base() const { return fixed_base_; }
  double total_mass() const;
  double limb_mass(Limb l) const;

  std::optional<int> find_body(std::string_view name) const;

  bool operator==(const RobotModel& o) const;

  friend RobotModel load_model(std::string_view text);

 private:
  std::vector<Body> bodies_;
  std::vector<int> joint_bodies_;
  std::vector<int> base_coords_, leg_coords_, arm_coords_;
  std::vector<ContactPoint> contacts_;
  VecX q_ref_;
  int n_leg_ = 0;
  int n_arm_ = 0;
  bool fixed_base_ = false;
};

/// Parses the line-oriented model format:
///
///   body <name> parent=<name|WORLD> joint=<revolute|floating> axis=x,y,z
///        origin_xyz=x,y,z origin_rpy=r,p,y mass=<kg> com=x,y,z
///        inertia=ixx,iyy,izz,ixy,ixz,iyz qlim=lo,hi vlim=v taulim=t
///        limb=<base|leg|arm>
///   nominal <joint>=<rad>
///   contact <body> foot=<left|right> role=<toe|heel> offset=x,y,z
///   fixed_base
///
/// `inertia` is about the body CoM, in body axes. Records may appear in any
/// order; bodies are sorted so that parents precede children.
RobotModel load_model(std::string_view text);
RobotModel load_model_file(const std::string& path);
std::string serialize_model(const RobotModel& model);

std::string default_model_path();

struct GeneralizedState {
  VecX q;   // nq
  VecX qd;  // nv

  static GeneralizedState neutral(const RobotModel& model);
  bool valid_for(const RobotModel& model, double quat_tol = 1e-9) const;

  Eigen::Quaterniond base_quaternion() const {
    return {q[3], q[4], q[5], q[6]};
  }
  void set_base_quaternion(const Eigen::Quaterniond& quat) {
    q[3] = quat.w();
    q[4] = quat.x();
    q[5] = quat.y();
    q[6] = quat.z();
  }
  Vec3 base_position() const { return q.head<3>(); }
  auto joint_positions() const { return q.tail(q.size() - 7); }
  auto joint_positions() { return q.tail(q.size() - 7); }
  auto joint_velocities() const { return qd.tail(qd.size() - 6); }
  auto joint_velocities() { return qd.tail(qd.size() - 6); }
};

struct VelocityPartition {
  Vec6 base;
  VecX legs;
  VecX arms;
};

VelocityPartition partition_velocity(const RobotModel& model, const VecX& qd);

}  // namespace armswing
