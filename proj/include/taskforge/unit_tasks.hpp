#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "taskforge/geometry.hpp"
#include "taskforge/rng.hpp"

namespace taskforge {

struct NonProjectable : std::runtime_error {
  explicit NonProjectable(const std::string& w) : std::runtime_error(w) {}
};
struct EmptyGoal : std::runtime_error {
  explicit EmptyGoal(const std::string& w) : std::runtime_error(w) {}
};
struct Unreachable : std::runtime_error {
  explicit Unreachable(const std::string& w) : std::runtime_error(w) {}
};

// --- position constraints ---------------------------------------------------
struct FreePos {
  Box3 region;
};
struct PlanePos {
  PlaneRegion region;
};
struct LinePos {
  LineSegment segment;
};
struct FixedPos {
  Vec3 point = Vec3::Zero();
};
// Predefined path; only meaningful for path-constrained (M2) motions.
struct TrajPos {
  std::vector<Pose> path;  // >= 2 waypoints, densified to <= 2 cm spacing
};
using PositionConstraint = std::variant<FreePos, PlanePos, LinePos, FixedPos, TrajPos>;

// --- orientation constraints -------------------------------------------------
struct FreeOri {};
// Keeps one body direction aligned with a world direction, rotation about it
// free.  The pinned body direction is the one that maps onto `world_axis`
// when the object sits at `reference`.
struct AxisOri {
  Vec3 world_axis = Vec3::UnitZ();
  Quat reference = Quat::Identity();
  double cone = deg2rad(5.0);

  Vec3 body_axis() const { return reference.conjugate() * world_axis; }
};
struct FixedOri {
  Quat orientation = Quat::Identity();
};
// Orientation looked up from position along a densified path (M2-only).
struct PathOri {
  std::vector<std::pair<Vec3, Quat>> knots;
};
using OrientationConstraint = std::variant<FreeOri, AxisOri, FixedOri, PathOri>;

struct Tol {
  double pos = 5e-3;
  double ori = deg2rad(2.0);
};

// Distance from a point to the allowed position set.
double position_distance(const Vec3& p, const PositionConstraint& c);
// Angular excess (radians) of the pose beyond the allowed orientation set.
double orientation_distance(const Pose& pose, const OrientationConstraint& c);

bool satisfies(const Pose& pose, const PositionConstraint& pos, const OrientationConstraint& ori,
               const Tol& tol = Tol{});
// Projects onto both constraint sets; idempotent.  Throws NonProjectable for
// an empty orientation lookup table.
Pose project(const Pose& pose, const PositionConstraint& pos, const OrientationConstraint& ori);

// Closest point on a waypoint polyline; outputs segment index and parameter.
Vec3 project_polyline(const std::vector<Pose>& path, const Vec3& p, int* segment = nullptr,
                      double* t = nullptr);
// Orientation lookup for PathOri at a (projected) position.
Quat path_orientation(const PathOri& c, const Vec3& position);

// Inserts interpolated poses so consecutive waypoints are <= max_step apart.
std::vector<Pose> densify_path(const std::vector<Pose>& path, double max_step);

// --- unit tasks ---------------------------------------------------------------
struct ControlTask {
  std::string target;
  bool grasp = true;  // false = release
};
struct M1Task {  // goal-pose constraints only
  std::string target;
  PositionConstraint pos;
  OrientationConstraint ori;
};
struct M2Task {  // constraints hold over the entire motion
  std::string target;
  PositionConstraint pos;
  OrientationConstraint ori;
};
using UnitTask = std::variant<ControlTask, M1Task, M2Task>;

// Throws std::invalid_argument when an M1 carries path-valued constraints.
void validate_unit(const UnitTask& task);
// An M2 that is free everywhere degenerates to the equivalent M1.
UnitTask degeneracy_check(const UnitTask& task, const Box3& workspace);

// --- goal conditions -----------------------------------------------------------
struct BoxGoal {
  Box3 region;
  OrientationConstraint ori;
};
struct PlaneGoal {
  PlaneRegion region;
  OrientationConstraint ori;
};
struct LineGoal {
  LineSegment segment;
  OrientationConstraint ori;
};
struct FixedPoseGoal {
  Pose pose;
};
struct JointGoal {
  std::string object;
  std::string joint;
  double lo = 0, hi = 0;  // target value range
};
struct FunctionalGoal {
  std::string name;
  std::function<Pose(Rng&)> generator;
};
using GoalCondition =
    std::variant<BoxGoal, PlaneGoal, LineGoal, FixedPoseGoal, JointGoal, FunctionalGoal>;

// Concrete pose satisfying the goal exactly; JointGoal has no pose (throws).
Pose sample_goal(const GoalCondition& goal, Rng& rng);
double sample_joint_goal(const JointGoal& goal, Rng& rng);
// Orientation sample satisfying an orientation constraint exactly (the free
// spin of AxisOri is drawn uniformly).
Quat sample_orientation(const OrientationConstraint& c, Rng& rng);

// --- pouring -------------------------------------------------------------------
// Carry goal for the source vessel: horizontal center distance below the
// source's half-height, bottom of the travel band a full container height
// above the container's rim, opening kept upright.
//   source_half_height / container_height: scaled, meters
//   container_top_z: world z of the container rim
// Throws Unreachable when the band starts above max_z.
FunctionalGoal pour_goal(const Vec3& container_center, double container_height,
                         double container_top_z, double source_half_height,
                         const Quat& upright_reference, double max_z);

// Tilt leg: rotates the source about the horizontal rim line facing the
// container ("spout line"), yielding the object-pose path for angle 0..tilt.
std::vector<Pose> pour_tilt_path(const Pose& start, double opening_radius, double half_height,
                                 const Vec2& toward_container, double tilt, int steps);

}  // namespace taskforge
