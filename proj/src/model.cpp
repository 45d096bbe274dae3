#include "armswing/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace armswing {

const char* to_string(JointType t) {
  return t == JointType::floating ? "floating" : "revolute";
}
const char* to_string(Limb l) {
  switch (l) {
    case Limb::base: return "base";
    case Limb::leg: return "leg";
    case Limb::arm: return "arm";
  }
  return "?";
}
const char* to_string(Foot f) { return f == Foot::left ? "left" : "right"; }
const char* to_string(ContactRole r) {
  return r == ContactRole::toe ? "toe" : "heel";
}

namespace {

struct RawBody {
  Body body;
  std::string parent_name;
  int line = 0;
};

struct RawContact {
  std::string body_name;
  ContactPoint point;
  int line = 0;
};

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& field, int line) {
  if (s.empty()) throw ModelError("empty value for field '" + field + "'", line);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ModelError("invalid number '" + s + "' for field '" + field + "'",
                     line);
  }
  return v;
}

std::vector<double> parse_list(const std::string& s, size_t n,
                               const std::string& field, int line) {
  const auto parts = split(s, ',');
  if (parts.size() != n) {
    throw ModelError("field '" + field + "' expects " + std::to_string(n) +
                         " comma-separated values",
                     line);
  }
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(parse_number(p, field, line));
  return out;
}

Vec3 parse_vec3(const std::string& s, const std::string& field, int line) {
  const auto v = parse_list(s, 3, field, line);
  return {v[0], v[1], v[2]};
}

std::map<std::string, std::string> parse_fields(
    const std::vector<std::string>& tokens, size_t first, int line) {
  std::map<std::string, std::string> fields;
  for (size_t i = first; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ModelError("expected key=value, got '" + tokens[i] + "'", line);
    }
    const std::string key = tokens[i].substr(0, eq);
    if (fields.count(key)) {
      throw ModelError("field '" + key + "' given twice", line);
    }
    fields[key] = tokens[i].substr(eq + 1);
  }
  return fields;
}

const std::string& require(const std::map<std::string, std::string>& f,
                           const std::string& key, int line) {
  const auto it = f.find(key);
  if (it == f.end()) throw ModelError("missing field '" + key + "'", line);
  return it->second;
}

RawBody parse_body(const std::vector<std::string>& tokens, int line) {
  if (tokens.size() < 2) throw ModelError("body record needs a name", line);
  static const std::set<std::string> kKnown = {
      "parent", "joint", "axis", "origin_xyz", "origin_rpy", "mass",  "com",
      "inertia", "qlim", "vlim", "taulim",     "limb"};
  const auto f = parse_fields(tokens, 2, line);
  for (const auto& [k, v] : f) {
    if (!kKnown.count(k)) throw ModelError("unknown field '" + k + "'", line);
  }

  RawBody raw;
  raw.line = line;
  Body& b = raw.body;
  b.joint.name = tokens[1];
  raw.parent_name = require(f, "parent", line);

  const std::string& joint = require(f, "joint", line);
  if (joint == "revolute") {
    b.joint.type = JointType::revolute;
  } else if (joint == "floating") {
    b.joint.type = JointType::floating;
  } else {
    throw ModelError("field 'joint' must be revolute or floating, got '" +
                         joint + "'",
                     line);
  }

  const std::string& limb = require(f, "limb", line);
  if (limb == "base") {
    b.limb = Limb::base;
  } else if (limb == "leg") {
    b.limb = Limb::leg;
  } else if (limb == "arm") {
    b.limb = Limb::arm;
  } else {
    throw ModelError("field 'limb' must be base, leg or arm, got '" + limb +
                         "'",
                     line);
  }

  if (f.count("axis")) b.joint.axis = parse_vec3(f.at("axis"), "axis", line);
  if (f.count("origin_xyz"))
    b.joint.origin_xyz = parse_vec3(f.at("origin_xyz"), "origin_xyz", line);
  if (f.count("origin_rpy"))
    b.joint.origin_rpy = parse_vec3(f.at("origin_rpy"), "origin_rpy", line);

  b.mass = parse_number(require(f, "mass", line), "mass", line);
  if (b.mass < 0.0) throw ModelError("field 'mass' must be >= 0", line);
  if (f.count("com")) b.com = parse_vec3(f.at("com"), "com", line);
  if (f.count("inertia")) {
    const auto v = parse_list(f.at("inertia"), 6, "inertia", line);
    b.inertia_about_com << v[0], v[3], v[4],
                           v[3], v[1], v[5],
                           v[4], v[5], v[2];
    Eigen::SelfAdjointEigenSolver<Mat3> eig(b.inertia_about_com);
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw ModelError("field 'inertia' is not positive semi-definite", line);
    }
  }

  if (b.joint.type == JointType::revolute) {
    if (!f.count("axis")) throw ModelError("missing field 'axis'", line);
    if (std::abs(b.joint.axis.norm() - 1.0) > 1e-12) {
      throw ModelError("field 'axis' is not unit-norm", line);
    }
    const auto lim = parse_list(require(f, "qlim", line), 2, "qlim", line);
    if (!(lim[0] < lim[1])) {
      throw ModelError("field 'qlim' needs lo < hi", line);
    }
    b.joint.position_limits = {lim[0], lim[1]};
    b.joint.velocity_limit =
        parse_number(require(f, "vlim", line), "vlim", line);
    b.joint.torque_limit =
        parse_number(require(f, "taulim", line), "taulim", line);
    if (b.joint.velocity_limit <= 0.0) {
      throw ModelError("field 'vlim' must be positive", line);
    }
    if (b.joint.torque_limit <= 0.0) {
      throw ModelError("field 'taulim' must be positive", line);
    }
  } else {
    if (f.count("qlim")) {
      const auto lim = parse_list(f.at("qlim"), 2, "qlim", line);
      b.joint.position_limits = {lim[0], lim[1]};
    }
    if (f.count("vlim"))
      b.joint.velocity_limit = parse_number(f.at("vlim"), "vlim", line);
    if (f.count("taulim"))
      b.joint.torque_limit = parse_number(f.at("taulim"), "taulim", line);
  }

  b.joint.origin = PluckerTransform::from_pose(
      rpy_to_rotation(b.joint.origin_rpy), b.joint.origin_xyz);
  b.inertia =
      SpatialInertia::from_com_inertia(b.mass, b.com, b.inertia_about_com);
  return raw;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_vec(std::initializer_list<double> vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += ',';
    out += fmt_num(v);
  }
  return out;
}

}  // namespace

RobotModel load_model(std::string_view text) {
  std::vector<RawBody> raw_bodies;
  std::vector<RawContact> raw_contacts;
  std::vector<std::tuple<std::string, double, int>> nominal;
  bool fixed_base = false;

  std::istringstream in{std::string(text)};
  std::string line_text;
  int line = 0;
  while (std::getline(in, line_text)) {
    ++line;
    if (const auto hash = line_text.find('#'); hash != std::string::npos) {
      line_text.resize(hash);
    }
    std::istringstream ls(line_text);
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;

    const std::string& kind = tokens[0];
    if (kind == "body") {
      raw_bodies.push_back(parse_body(tokens, line));
    } else if (kind == "nominal") {
      if (tokens.size() < 2) throw ModelError("nominal record is empty", line);
      for (size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ModelError("expected <joint>=<rad>, got '" + tokens[i] + "'",
                           line);
        }
        const std::string name = tokens[i].substr(0, eq);
        nominal.emplace_back(name,
                             parse_number(tokens[i].substr(eq + 1), name, line),
                             line);
      }
    } else if (kind == "contact") {
      if (tokens.size() < 2) throw ModelError("contact needs a body", line);
      const auto f = parse_fields(tokens, 2, line);
      RawContact c;
      c.line = line;
      c.body_name = tokens[1];
      const std::string& foot = require(f, "foot", line);
      const std::string& role = require(f, "role", line);
      if (foot != "left" && foot != "right") {
        throw ModelError("field 'foot' must be left or right", line);
      }
      if (role != "toe" && role != "heel") {
        throw ModelError("field 'role' must be toe or heel", line);
      }
      c.point.foot = foot == "left" ? Foot::left : Foot::right;
      c.point.role = role == "toe" ? ContactRole::toe : ContactRole::heel;
      c.point.offset = parse_vec3(require(f, "offset", line), "offset", line);
      for (const auto& [k, v] : f) {
        if (k != "foot" && k != "role" && k != "offset") {
          throw ModelError("unknown field '" + k + "'", line);
        }
      }
      raw_contacts.push_back(c);
    } else if (kind == "fixed_base") {
      fixed_base = true;
    } else {
      throw ModelError("unknown record '" + kind + "'", line);
    }
  }

  // Name resolution.
  std::map<std::string, int> by_name;
  for (size_t i = 0; i < raw_bodies.size(); ++i) {
    const auto& name = raw_bodies[i].body.joint.name;
    if (name == "WORLD") {
      throw ModelError("'WORLD' is reserved", raw_bodies[i].line);
    }
    if (!by_name.emplace(name, static_cast<int>(i)).second) {
      throw ModelError("duplicate joint name '" + name + "'",
                       raw_bodies[i].line);
    }
  }

  int root = -1;
  std::vector<std::vector<int>> children(raw_bodies.size());
  for (size_t i = 0; i < raw_bodies.size(); ++i) {
    const auto& rb = raw_bodies[i];
    if (rb.body.joint.type == JointType::floating) {
      if (root >= 0) {
        throw ModelError("more than one floating joint", rb.line);
      }
      if (rb.parent_name != "WORLD") {
        throw ModelError("floating joint must have parent=WORLD", rb.line);
      }
      if (rb.body.limb != Limb::base) {
        throw ModelError("floating body must have limb=base", rb.line);
      }
      root = static_cast<int>(i);
      continue;
    }
    if (rb.body.limb == Limb::base) {
      throw ModelError("limb partition does not cover joint '" +
                           rb.body.joint.name +
                           "': revolute joints must be leg or arm",
                       rb.line);
    }
    if (rb.parent_name == "WORLD") {
      throw ModelError("revolute joint '" + rb.body.joint.name +
                           "' cannot attach to WORLD",
                       rb.line);
    }
    const auto it = by_name.find(rb.parent_name);
    if (it == by_name.end()) {
      throw ModelError("unknown parent '" + rb.parent_name + "'", rb.line);
    }
    children[static_cast<size_t>(it->second)].push_back(static_cast<int>(i));
  }
  if (root < 0) throw ModelError("missing floating base (joint=floating)");

  // Depth-first preorder from the root keeps parents before children.
  std::vector<int> order;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    const auto& ch = children[static_cast<size_t>(i)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  if (order.size() != raw_bodies.size()) {
    std::vector<bool> seen(raw_bodies.size(), false);
    for (int i : order) seen[static_cast<size_t>(i)] = true;
    for (size_t i = 0; i < raw_bodies.size(); ++i) {
      if (!seen[i]) {
        throw ModelError("cycle in kinematic tree involving '" +
                             raw_bodies[i].body.joint.name + "'",
                         raw_bodies[i].line);
      }
    }
  }

  RobotModel model;
  model.fixed_base_ = fixed_base;
  std::vector<int> new_index(raw_bodies.size());
  for (size_t k = 0; k < order.size(); ++k) {
    new_index[static_cast<size_t>(order[k])] = static_cast<int>(k);
  }
  for (int old : order) {
    const auto& rb = raw_bodies[static_cast<size_t>(old)];
    Body b = rb.body;
    b.joint.parent =
        rb.parent_name == "WORLD"
            ? -1
            : new_index[static_cast<size_t>(by_name.at(rb.parent_name))];
    model.bodies_.push_back(b);
  }

  // Coordinates: legs first, then arms, each in body order.
  for (int i = 0; i < 6; ++i) model.base_coords_.push_back(i);
  for (Limb limb : {Limb::leg, Limb::arm}) {
    for (size_t i = 0; i < model.bodies_.size(); ++i) {
      Body& b = model.bodies_[i];
      if (b.joint.type != JointType::revolute || b.limb != limb) continue;
      const int j = static_cast<int>(model.joint_bodies_.size());
      b.v_index = 6 + j;
      b.q_index = 7 + j;
      model.joint_bodies_.push_back(static_cast<int>(i));
      (limb == Limb::leg ? model.leg_coords_ : model.arm_coords_)
          .push_back(b.v_index);
    }
  }
  model.n_leg_ = static_cast<int>(model.leg_coords_.size());
  model.n_arm_ = static_cast<int>(model.arm_coords_.size());

  model.q_ref_ = VecX::Zero(model.n_joints());
  std::set<std::string> nominal_seen;
  for (const auto& [name, value, ln] : nominal) {
    const auto idx = model.find_body(name);
    if (!idx || model.body(*idx).joint.type != JointType::revolute) {
      throw ModelError("nominal pose names unknown joint '" + name + "'", ln);
    }
    if (!nominal_seen.insert(name).second) {
      throw ModelError("nominal pose for '" + name + "' given twice", ln);
    }
    model.q_ref_[model.body(*idx).v_index - 6] = value;
  }

  for (const auto& rc : raw_contacts) {
    const auto idx = model.find_body(rc.body_name);
    if (!idx) {
      throw ModelError("contact on unknown body '" + rc.body_name + "'",
                       rc.line);
    }
    ContactPoint p = rc.point;
    p.body = *idx;
    model.contacts_.push_back(p);
  }
  if (!model.contacts_.empty()) {
    for (Foot foot : {Foot::left, Foot::right}) {
      int toes = 0, heels = 0;
      for (const auto& c : model.contacts_) {
        if (c.foot != foot) continue;
        (c.role == ContactRole::toe ? toes : heels)++;
      }
      if (toes != 1 || heels != 1) {
        throw ModelError(std::string("foot '") + to_string(foot) +
                         "' needs exactly one toe and one heel contact");
      }
    }
  }
  return model;
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_model(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.what());
  }
}

std::string default_model_path() {
  return std::string(ARMSWING_DATA_DIR) + "/mini_humanoid.model";
}

std::string serialize_model(const RobotModel& model) {
  std::ostringstream out;
  for (const Body& b : model.bodies()) {
    const JointSpec& j = b.joint;
    const Mat3& I = b.inertia_about_com;
    out << "body " << j.name << " parent="
        << (j.parent < 0 ? std::string("WORLD") : model.body(j.parent).joint.name)
        << " joint=" << to_string(j.type)
        << " axis=" << fmt_vec({j.axis.x(), j.axis.y(), j.axis.z()})
        << " origin_xyz="
        << fmt_vec({j.origin_xyz.x(), j.origin_xyz.y(), j.origin_xyz.z()})
        << " origin_rpy="
        << fmt_vec({j.origin_rpy.x(), j.origin_rpy.y(), j.origin_rpy.z()})
        << " mass=" << fmt_num(b.mass)
        << " com=" << fmt_vec({b.com.x(), b.com.y(), b.com.z()})
        << " inertia="
        << fmt_vec({I(0, 0), I(1, 1), I(2, 2), I(0, 1), I(0, 2), I(1, 2)})
        << " qlim=" << fmt_vec({j.position_limits[0], j.position_limits[1]})
        << " vlim=" << fmt_num(j.velocity_limit)
        << " taulim=" << fmt_num(j.torque_limit)
        << " limb=" << to_string(b.limb) << "\n";
  }
  for (int j = 0; j < model.n_joints(); ++j) {
    out << "nominal " << model.joint_body(j).joint.name << "="
        << fmt_num(model.q_ref()[j]) << "\n";
  }
  for (const auto& c : model.contact_points()) {
    out << "contact " << model.body(c.body).joint.name
        << " foot=" << to_string(c.foot) << " role=" << to_string(c.role)
        << " offset=" << fmt_vec({c.offset.x(), c.offset.y(), c.offset.z()})
        << "\n";
  }
  if (model.fixed_base()) out << "fixed_base\n";
  return out.str();
}

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const auto& b : bodies_) m += b.mass;
  return m;
}

double RobotModel::limb_mass(Limb l) const {
  double m = 0.0;
  for (const auto& b : bodies_) {
    if (b.limb == l) m += b.mass;
  }
  return m;
}

std::optional<int> RobotModel::find_body(std::string_view name) const {
  for (size_t i = 0; i < bodies_.size(); ++i) {
    if (bodies_[i].joint.name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool RobotModel::operator==(const RobotModel& o) const {
  if (bodies_.size() != o.bodies_.size() || contacts_.size() != o.contacts_.size())
    return false;
  for (size_t i = 0; i < bodies_.size(); ++i) {
    const Body& a = bodies_[i];
    const Body& b = o.bodies_[i];
    const JointSpec& ja = a.joint;
    const JointSpec& jb = b.joint;
    if (ja.name != jb.name || ja.parent != jb.parent || ja.type != jb.type ||
        ja.axis != jb.axis || ja.origin_xyz != jb.origin_xyz ||
        ja.origin_rpy != jb.origin_rpy ||
        ja.position_limits != jb.position_limits ||
        ja.velocity_limit != jb.velocity_limit ||
        ja.torque_limit != jb.torque_limit || a.limb != b.limb ||
        a.mass != b.mass || a.com != b.com ||
        a.inertia_about_com != b.inertia_about_com || a.q_index != b.q_index ||
        a.v_index != b.v_index) {
      return false;
    }
  }
  for (size_t i = 0; i < contacts_.size(); ++i) {
    const auto& a = contacts_[i];
    const auto& b = o.contacts_[i];
    if (a.body != b.body || a.offset != b.offset || a.role != b.role ||
        a.foot != b.foot) {
      return false;
    }
  }
  return q_ref_ == o.q_ref_ && fixed_base_ == o.fixed_base_ &&
         n_leg_ == o.n_leg_ && n_arm_ == o.n_arm_;
}

GeneralizedState GeneralizedState::neutral(const RobotModel& model) {
  GeneralizedState s;
  s.q = VecX::Zero(model.nq());
  s.qd = VecX::Zero(model.nv());
  s.q[3] = 1.0;
  s.joint_positions() = model.q_ref();
  return s;
}

bool GeneralizedState::valid_for(const RobotModel& model,
                                 double quat_tol) const {
  if (q.size() != model.nq() || qd.size() != model.nv()) return false;
  if (!q.allFinite() || !qd.allFinite()) return false;
  return std::abs(q.segment<4>(3).norm() - 1.0) <= quat_tol;
}

VelocityPartition partition_velocity(const RobotModel& model, const VecX& qd) {
  if (qd.size() != model.nv()) {
    throw std::invalid_argument("partition_velocity: qd has dimension " +
                                std::to_string(qd.size()) + ", model expects " +
                                std::to_string(model.nv()));
  }
  return {qd.head<6>(), qd.segment(6, model.n_leg()),
          qd.segment(6 + model.n_leg(), model.n_arm())};
}

}  // namespace armswing
