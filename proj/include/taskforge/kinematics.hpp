#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "taskforge/convex.hpp"
#include "taskforge/geometry.hpp"

namespace taskforge {

using JointVec = Eigen::Matrix<double, 7, 1>;
using Jacobian = Eigen::Matrix<double, 6, 7>;

// 7-DoF serial arm. Frame i (1-based joints) is reached by composing the
// fixed offset of joint i and the rotation of q_i about the joint's local
// axis; frame 0 is the base, frame 8 the tool.
struct ArmModel {
  struct Joint {
    Pose offset;
    Vec3 axis{0, 0, 1};
    double lo = -kPi, hi = kPi;
  };

  std::string name;
  Pose base;
  std::array<Joint, 7> joints;
  Pose tool;
  // Collision capsules, each expressed in the frame of `link` (0 = base,
  // 1..7 = after that joint, 8 = tool).
  std::vector<std::pair<int, Capsule>> capsules;
  JointVec home = JointVec::Zero();

  JointVec mid_range() const;
  bool within_limits(const JointVec& q, double slack = 1e-9) const;
  JointVec clamp_to_limits(const JointVec& q) const;
  JointVec random_config(Rng& rng) const;
};

// Loads a `format: arm/1` description. Throws std::runtime_error on malformed
// input (wrong joint count, bad limits, non-unit axes).
ArmModel load_arm(const std::filesystem::path& path);
// The bundled default arm (data/panda_arm.txt), loaded once and cached.
const ArmModel& default_arm();

// Frames 0..8 (base, after each joint, tool) in world coordinates.
std::array<Pose, 9> link_frames(const ArmModel& arm, const JointVec& q);

// Tool pose in world frame. Throws std::domain_error("LimitViolation ...")
// when q is outside the limits.
Pose forward_kinematics(const ArmModel& arm, const JointVec& q);

// Geometric Jacobian at the tool point: rows 0-2 linear, rows 3-5 angular.
Jacobian jacobian(const ArmModel& arm, const JointVec& q);

// World-space collision capsules at configuration q.
std::vector<std::pair<int, Capsule>> arm_capsules(const ArmModel& arm, const JointVec& q);

struct IkOptions {
  double pos_tol = 1e-3;                 // m
  double ang_tol = deg2rad(0.5);         // rad
  int max_iters = 200;
};

enum class IkStatus { Ok, NoConvergence, OutOfReach };

struct IkResult {
  IkStatus status = IkStatus::NoConvergence;
  JointVec q = JointVec::Zero();
  double pos_residual = 0;
  double ang_residual = 0;
  int iters = 0;

  bool ok() const { return status == IkStatus::Ok; }
};

// Damped-least-squares IK with adaptive damping and a null-space bias toward
// mid-range joints. Deterministic given (target, seed, opts).
IkResult solve_ik(const ArmModel& arm, const Pose& target, const JointVec& seed,
                  const IkOptions& opts = {});

const char* to_string(IkStatus s);

}  // namespace taskforge
