#include "taskforge/kinematics.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "taskforge/config.hpp"
#include "taskforge/textdoc.hpp"

namespace taskforge {

JointVec ArmModel::mid_range() const {
  JointVec m;
  for (int i = 0; i < 7; ++i) m[i] = 0.5 * (joints[i].lo + joints[i].hi);
  return m;
}

bool ArmModel::within_limits(const JointVec& q, double slack) const {
  for (int i = 0; i < 7; ++i)
    if (q[i] < joints[i].lo - slack || q[i] > joints[i].hi + slack) return false;
  return true;
}

JointVec ArmModel::clamp_to_limits(const JointVec& q) const {
  JointVec out;
  for (int i = 0; i < 7; ++i) out[i] = std::clamp(q[i], joints[i].lo, joints[i].hi);
  return out;
}

JointVec ArmModel::random_config(Rng& rng) const {
  JointVec q;
  for (int i = 0; i < 7; ++i) q[i] = rng.uniform(joints[i].lo, joints[i].hi);
  return q;
}

namespace {

Quat quat_from_rpy_deg(const std::vector<double>& rpy) {
  double r = deg2rad(rpy.at(0)), p = deg2rad(rpy.at(1)), y = deg2rad(rpy.at(2));
  return Quat(Eigen::AngleAxisd(y, Vec3::UnitZ()) * Eigen::AngleAxisd(p, Vec3::UnitY()) *
              Eigen::AngleAxisd(r, Vec3::UnitX()));
}

Vec3 vec3_of(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw std::runtime_error(std::string("arm file: ") + what + " needs 3 values");
  return Vec3(v[0], v[1], v[2]);
}

Pose pose_from_section(const Section& s) {
  Vec3 p = vec3_of(s.get_doubles("position"), "position");
  Quat q = Quat::Identity();
  if (s.has("orientation")) {
    auto o = s.get_doubles("orientation");
    if (o.size() != 4) throw std::runtime_error("arm file: orientation needs 4 values (w x y z)");
    q = Quat(o[0], o[1], o[2], o[3]);
  } else if (s.has("rpy_deg")) {
    q = quat_from_rpy_deg(s.get_doubles("rpy_deg"));
  }
  return Pose(p, q);
}

}  // namespace

ArmModel load_arm(const std::filesystem::path& path) {
  TextDoc doc = TextDoc::parse_file(path);
  doc.expect_format("arm/1");

  ArmModel arm;
  arm.name = doc.header.get_or("name", "arm");

  const Section* base = doc.first_section("base");
  if (base) arm.base = pose_from_section(*base);

  auto joints = doc.sections_named("joint");
  if (joints.size() != 7)
    throw std::runtime_error(path.string() + ": expected 7 [joint] sections, got " +
                             std::to_string(joints.size()));
  for (size_t i = 0; i < 7; ++i) {
    const Section& s = *joints[i];
    ArmModel::Joint j;
    j.offset.position = vec3_of(s.get_doubles("offset_position"), "offset_position");
    if (s.has("offset_rpy_deg")) j.offset.orientation = quat_from_rpy_deg(s.get_doubles("offset_rpy_deg"));
    j.axis = vec3_of(s.get_doubles("axis"), "axis");
    if (std::abs(j.axis.norm() - 1.0) > 1e-6)
      throw std::runtime_error(path.string() + ": joint axis must be unit length");
    auto lim = s.get_doubles("limits");
    if (lim.size() != 2 || !(lim[0] < lim[1]))
      throw std::runtime_error(path.string() + ": joint limits must be [lo hi] with lo < hi");
    j.lo = lim[0];
    j.hi = lim[1];
    arm.joints[i] = j;
  }

  const Section* tool = doc.first_section("tool");
  if (!tool) throw std::runtime_error(path.string() + ": missing [tool] section");
  arm.tool = pose_from_section(*tool);

  for (const Section* s : doc.sections_named("capsule")) {
    int link = int(s->get_int("link"));
    if (link < 0 || link > 8) throw std::runtime_error(path.string() + ": capsule link out of range");
    Capsule c;
    c.a = vec3_of(s->get_doubles("a"), "capsule a");
    c.b = vec3_of(s->get_doubles("b"), "capsule b");
    c.radius = s->get_double("radius");
    if (c.radius <= 0) throw std::runtime_error(path.string() + ": capsule radius must be positive");
    arm.capsules.emplace_back(link, c);
  }

  if (doc.header.has("home")) {
    auto h = doc.header.get_doubles("home");
    if (h.size() != 7) throw std::runtime_error(path.string() + ": home needs 7 values");
    for (int i = 0; i < 7; ++i) arm.home[i] = h[i];
  } else {
    arm.home = arm.mid_range();
  }
  if (!arm.within_limits(arm.home))
    throw std::runtime_error(path.string() + ": home configuration outside limits");
  return arm;
}

const ArmModel& default_arm() {
  static const ArmModel arm = load_arm(data_dir() / "panda_arm.txt");
  return arm;
}

namespace {

void check_limits(const ArmModel& arm, const JointVec& q) {
  for (int i = 0; i < 7; ++i)
    if (q[i] < arm.joints[i].lo - 1e-9 || q[i] > arm.joints[i].hi + 1e-9)
      throw std::domain_error("LimitViolation: joint " + std::to_string(i) + " = " +
                              std::to_string(q[i]));
}

}  // namespace

std::array<Pose, 9> link_frames(const ArmModel& arm, const JointVec& q) {
  std::array<Pose, 9> frames;
  frames[0] = arm.base;
  for (int i = 0; i < 7; ++i) {
    Pose rotated(Vec3::Zero(), quat_about(arm.joints[i].axis, q[i]));
    frames[i + 1] = compose(compose(frames[i], arm.joints[i].offset), rotated);
  }
  frames[8] = compose(frames[7], arm.tool);
  return frames;
}

Pose forward_kinematics(const ArmModel& arm, const JointVec& q) {
  check_limits(arm, q);
  return link_frames(arm, q)[8];
}

Jacobian jacobian(const ArmModel& arm, const JointVec& q) {
  check_limits(arm, q);
  auto frames = link_frames(arm, q);
  const Vec3 p_tool = frames[8].position;
  Jacobian J;
  for (int i = 0; i < 7; ++i) {
    Vec3 axis = frames[i + 1].rotate(arm.joints[i].axis);
    Vec3 origin = frames[i + 1].position;
    J.block<3, 1>(0, i) = axis.cross(p_tool - origin);
    J.block<3, 1>(3, i) = axis;
  }
  return J;
}

std::vector<std::pair<int, Capsule>> arm_capsules(const ArmModel& arm, const JointVec& q) {
  auto frames = link_frames(arm, q);
  std::vector<std::pair<int, Capsule>> out;
  out.reserve(arm.capsules.size());
  for (const auto& [link, capsule] : arm.capsules)
    out.emplace_back(link, capsule.transformed(frames[link]));
  return out;
}

IkResult solve_ik(const ArmModel& arm, const Pose& target, const JointVec& seed,
                  const IkOptions& opts) {
  IkResult result;
  JointVec q = arm.clamp_to_limits(seed);
  const JointVec mid = arm.mid_range();

  double lambda = 1e-3;
  double best_residual = std::numeric_limits<double>::infinity();
  JointVec best_q = q;
  double best_pos = 0, best_ang = 0;
  int stall = 0;

  auto error_at = [&](const JointVec& qq, Vec3& e_pos, Vec3& e_rot) {
    Pose fk = link_frames(arm, qq)[8];
    e_pos = target.position - fk.position;
    e_rot = quat_log(target.orientation * fk.orientation.conjugate());
  };

  Vec3 e_pos, e_rot;
  error_at(q, e_pos, e_rot);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    result.iters = iter + 1;
    double pos_res = e_pos.norm();
    double ang_res = e_rot.norm();
    if (pos_res < opts.pos_tol && ang_res < opts.ang_tol) {
      result.status = IkStatus::Ok;
      result.q = q;
      result.pos_residual = pos_res;
      result.ang_residual = ang_res;
      return result;
    }

    Eigen::Matrix<double, 6, 1> e;
    e << e_pos, e_rot;
    double residual = e.norm();
    if (residual < best_residual - 1e-12) {
      best_residual = residual;
      best_q = q;
      best_pos = pos_res;
      best_ang = ang_res;
      stall = 0;
    } else {
      ++stall;
    }

    Jacobian J = jacobian(arm, q);
    Eigen::Matrix<double, 6, 6> JJt = J * J.transpose();
    JJt.diagonal().array() += lambda * lambda;
    Eigen::Matrix<double, 6, 1> y = JJt.ldlt().solve(e);
    JointVec dq = J.transpose() * y;

    // Null-space pull toward mid-range keeps the elbow repeatable.
    Eigen::Matrix<double, 7, 7> N =
        Eigen::Matrix<double, 7, 7>::Identity() - J.transpose() * JJt.ldlt().solve(J);
    dq += N * (0.05 * (mid - q));

    JointVec q_new = arm.clamp_to_limits(q + dq);
    Vec3 e_pos_new, e_rot_new;
    error_at(q_new, e_pos_new, e_rot_new);
    Eigen::Matrix<double, 6, 1> e_new;
    e_new << e_pos_new, e_rot_new;

    if (e_new.norm() > residual) {
      lambda = std::min(1.0, lambda * 2.0);  // worse: reject step, damp harder
    } else {
      lambda = std::max(1e-6, lambda * 0.5);
      q = q_new;
      e_pos = e_pos_new;
      e_rot = e_rot_new;
    }

    double tol_scale = std::max(best_pos / opts.pos_tol, best_ang / opts.ang_tol);
    double gradient_norm = (J.transpose() * e).norm();
    // Out of reach: far from tolerance and the solver cannot move any more
    // (vanishing gradient, or a long stall at the workspace boundary).
    if (tol_scale > 10.0 && (gradient_norm < 1e-10 || stall >= 30)) {
      result.status = IkStatus::OutOfReach;
      result.q = best_q;
      result.pos_residual = best_pos;
      result.ang_residual = best_ang;
      return result;
    }
  }

  result.status = IkStatus::NoConvergence;
  result.q = best_q;
  result.pos_residual = best_pos;
  result.ang_residual = best_ang;
  return result;
}

const char* to_string(IkStatus s) {
  switch (s) {
    case IkStatus::Ok: return "Ok";
    case IkStatus::NoConvergence: return "NoConvergence";
    case IkStatus::OutOfReach: return "OutOfReach";
  }
  return "?";
}

}  // namespace taskforge
