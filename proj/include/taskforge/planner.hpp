#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taskforge/config.hpp"
#include "taskforge/kinematics.hpp"
#include "taskforge/unit_tasks.hpp"

namespace taskforge {

struct PlanningTimeout : std::runtime_error {
  PlanningTimeout() : std::runtime_error("PlanningTimeout: search budget exhausted") {}
};
struct GoalUnreachable : std::runtime_error {
  explicit GoalUnreachable(const std::string& what) : std::runtime_error("GoalUnreachable: " + what) {}
};
struct ConstraintInfeasible : std::runtime_error {
  explicit ConstraintInfeasible(const std::string& what)
      : std::runtime_error("ConstraintInfeasible: " + what) {}
};
struct IKChainBreak : std::runtime_error {
  explicit IKChainBreak(int index)
      : std::runtime_error("IKChainBreak: no admissible solution at path index " +
                           std::to_string(index)),
        index(index) {}
  int index;
};

enum class GripperAction { None, Open, Close };
const char* to_string(GripperAction a);

// A semantic stop along a trajectory: the tool pose the segment drives to,
// the gripper command issued on arrival, and which unit task it belongs to.
struct Waypoint {
  Pose target;
  GripperAction action = GripperAction::None;
  int unit_index = 0;
  std::string label;
};

struct TimedConfig {
  double t = 0;  // seconds
  JointVec q = JointVec::Zero();
};

// Timed joint-space trajectory. markers[i] = (arrival index into points,
// waypoint reached there); held[i] names the object carried while traversing
// the segment that ends at markers[i] ("" when the hand is empty).
struct Trajectory {
  std::vector<TimedConfig> points;
  std::vector<std::pair<int, Waypoint>> markers;
  std::vector<std::string> held;

  double duration() const { return points.empty() ? 0.0 : points.back().t; }
};

using JointPath = std::vector<JointVec>;

// Collision oracle for one arm against a fixed set of convex obstacles.
// Optionally carries an attached object (convex pieces in the tool frame)
// that must clear the obstacles too.
class CollisionModel {
 public:
  CollisionModel(const ArmModel& arm, std::vector<Convex> obstacles,
                 double margin = EngineConfig::instance().collision_margin);

  void attach(std::vector<Convex> pieces_in_tool_frame) { attached_ = std::move(pieces_in_tool_frame); }
  void detach() { attached_.clear(); }
  bool holding() const { return !attached_.empty(); }

  // True iff q is inside the limits, every capsule and attached piece clears
  // the obstacles by the margin, and non-adjacent links stay apart.
  bool free(const JointVec& q) const;
  // Straight joint-space edge, validated every `resolution` rad (per joint).
  bool edge_free(const JointVec& a, const JointVec& b, double resolution) const;

  const ArmModel& arm() const { return *arm_; }
  double margin() const { return margin_; }

 private:
  const ArmModel* arm_;
  std::vector<Convex> obstacles_;
  std::vector<Convex> attached_;
  double margin_;
  // Capsule index pairs on links at least two joints apart that are clear at
  // the home config; anything closer at home is treated as by-design contact.
  std::vector<std::pair<int, int>> self_pairs_;
};

// One-shot form of CollisionModel::free for callers that check a single
// configuration.
bool collision_check(const ArmModel& arm, const JointVec& q, const std::vector<Convex>& obstacles,
                     const std::vector<Convex>& attached_tool_frame = {},
                     double margin = EngineConfig::instance().collision_margin);

// Up to max_goals distinct, collision-free IK solutions for a tool pose,
// seeded first from `seed` and then from random configurations.
std::vector<JointVec> goal_configs(const CollisionModel& cm, const Pose& tool, const JointVec& seed,
                                   Rng& rng, int max_goals = 16);

// Bidirectional tree search to any of the goal configurations, followed by
// random shortcutting. Throws PlanningTimeout when the iteration budget runs
// out and GoalUnreachable when `goals` is empty.
JointPath plan_free_multi(const CollisionModel& cm, const JointVec& start,
                          const std::vector<JointVec>& goals, Rng& rng);

// plan_free to a tool pose: resolves goal configurations via IK, then searches.
JointPath plan_free(const CollisionModel& cm, const JointVec& start, const Pose& goal, Rng& rng);

// Tree search that keeps the tool on the constraint manifold the whole way:
// every extension is projected back onto the constraints and re-solved, and
// every edge is validated for both collisions and constraint satisfaction.
// Preconditions: FK(start) and `goal` satisfy the constraints.
JointPath plan_constrained(const CollisionModel& cm, const JointVec& start, const Pose& goal,
                           const PositionConstraint& pos, const OrientationConstraint& ori,
                           Rng& rng);

// Tracks a dense Cartesian path with sequential IK (each solve seeded by the
// previous solution). Throws IKChainBreak with the first failing index when a
// solve misses, jumps more than the continuity bound, or collides.
JointPath follow_cartesian(const CollisionModel& cm, const JointVec& start,
                           const std::vector<Pose>& path);

// Inserts linear interpolations so consecutive configurations differ by at
// most max_step per joint. Endpoints are preserved exactly.
JointPath densify(const JointPath& path, double max_step);

// Densifies `path`, times it at the configured per-joint speed, and appends it
// to `traj`, recording `wp` at the arrival point. The first call seeds t = 0;
// later calls require path.front() to equal the current trajectory tail.
void append_segment(Trajectory& traj, const JointPath& path, const Waypoint& wp,
                    const std::string& held_object = "");

}  // namespace taskforge
