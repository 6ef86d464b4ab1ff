#include "taskforge/unit_tasks.hpp"

#include <algorithm>
#include <cmath>

namespace taskforge {

namespace {

Vec3 closest_on_segment(const Vec3& a, const Vec3& b, const Vec3& p, double* t_out = nullptr) {
  Vec3 ab = b - a;
  double len2 = ab.squaredNorm();
  double t = len2 < 1e-18 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  if (t_out) *t_out = t;
  return a + t * ab;
}

}  // namespace

Vec3 project_polyline(const std::vector<Pose>& path, const Vec3& p, int* segment, double* t) {
  if (path.empty()) throw NonProjectable("empty path");
  if (path.size() == 1) {
    if (segment) *segment = 0;
    if (t) *t = 0;
    return path[0].position;
  }
  Vec3 best = path[0].position;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    double ti;
    Vec3 q = closest_on_segment(path[i].position, path[i + 1].position, p, &ti);
    double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
      if (segment) *segment = static_cast<int>(i);
      if (t) *t = ti;
    }
  }
  return best;
}

double position_distance(const Vec3& p, const PositionConstraint& c) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreePos>)
          return (v.region.project(p) - p).norm();
        else if constexpr (std::is_same_v<T, PlanePos>)
          return (v.region.project(p) - p).norm();
        else if constexpr (std::is_same_v<T, LinePos>)
          return (v.segment.project(p) - p).norm();
        else if constexpr (std::is_same_v<T, FixedPos>)
          return (v.point - p).norm();
        else
          return (project_polyline(v.path, p) - p).norm();
      },
      c);
}

Quat path_orientation(const PathOri& c, const Vec3& position) {
  if (c.knots.empty()) throw NonProjectable("orientation lookup table is empty");
  if (c.knots.size() == 1) return c.knots[0].second;
  double best_d = std::numeric_limits<double>::infinity();
  Quat best = c.knots[0].second;
  for (size_t i = 0; i + 1 < c.knots.size(); ++i) {
    double t;
    Vec3 q = closest_on_segment(c.knots[i].first, c.knots[i + 1].first, position, &t);
    double d = (q - position).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c.knots[i].second.slerp(t, c.knots[i + 1].second);
    }
  }
  return best.normalized();
}

double orientation_distance(const Pose& pose, const OrientationConstraint& c) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreeOri>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, AxisOri>) {
          Vec3 actual = pose.rotate(v.body_axis());
          double ang = std::acos(std::clamp(actual.dot(v.world_axis.normalized()), -1.0, 1.0));
          return std::max(0.0, ang - v.cone);
        } else if constexpr (std::is_same_v<T, FixedOri>) {
          return angular_distance(pose.orientation, v.orientation);
        } else {
          return angular_distance(pose.orientation, path_orientation(v, pose.position));
        }
      },
      c);
}

bool satisfies(const Pose& pose, const PositionConstraint& pos, const OrientationConstraint& ori,
               const Tol& tol) {
  return position_distance(pose.position, pos) <= tol.pos &&
         orientation_distance(pose, ori) <= tol.ori;
}

Pose project(const Pose& pose, const PositionConstraint& pos, const OrientationConstraint& ori) {
  Pose out = pose;
  out.position = std::visit(
      [&](const auto& v) -> Vec3 {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreePos>)
          return v.region.project(pose.position);
        else if constexpr (std::is_same_v<T, PlanePos>)
          return v.region.project(pose.position);
        else if constexpr (std::is_same_v<T, LinePos>)
          return v.segment.project(pose.position);
        else if constexpr (std::is_same_v<T, FixedPos>)
          return v.point;
        else
          return project_polyline(v.path, pose.position);
      },
      pos);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AxisOri>) {
          Vec3 actual = out.rotate(v.body_axis());
          Quat fix = rotation_between(actual, v.world_axis.normalized());
          out.orientation = (fix * out.orientation).normalized();
        } else if constexpr (std::is_same_v<T, FixedOri>) {
          out.orientation = v.orientation;
        } else if constexpr (std::is_same_v<T, PathOri>) {
          out.orientation = path_orientation(v, out.position);
        }
      },
      ori);
  return out;
}

std::vector<Pose> densify_path(const std::vector<Pose>& path, double max_step) {
  if (path.size() < 2 || max_step <= 0) return path;
  std::vector<Pose> out;
  out.push_back(path.front());
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const Pose &a = path[i], &b = path[i + 1];
    double d = (b.position - a.position).norm();
    int n = std::max(1, static_cast<int>(std::ceil(d / max_step)));
    for (int k = 1; k <= n; ++k) out.push_back(interpolate(a, b, double(k) / n));
  }
  return out;
}

void validate_unit(const UnitTask& task) {
  const M1Task* m1 = std::get_if<M1Task>(&task);
  if (!m1) return;
  if (std::holds_alternative<TrajPos>(m1->pos))
    throw std::invalid_argument("goal-constrained motion cannot carry a path position");
  if (std::holds_alternative<PathOri>(m1->ori))
    throw std::invalid_argument("goal-constrained motion cannot carry a path orientation");
}

UnitTask degeneracy_check(const UnitTask& task, const Box3& workspace) {
  const M2Task* m2 = std::get_if<M2Task>(&task);
  if (!m2) return task;
  const FreePos* fp = std::get_if<FreePos>(&m2->pos);
  if (!fp || !std::holds_alternative<FreeOri>(m2->ori)) return task;
  for (const Vec3& corner : workspace.corners())
    if (!fp->region.contains(corner)) return task;
  return M1Task{m2->target, m2->pos, m2->ori};
}

Quat sample_orientation(const OrientationConstraint& c, Rng& rng) {
  return std::visit(
      [&](const auto& v) -> Quat {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreeOri>) {
          Eigen::Vector4d q = rng.unit_quaternion_wxyz();
          return Quat(q[0], q[1], q[2], q[3]).normalized();
        }
        else if constexpr (std::is_same_v<T, AxisOri>)
          return (quat_about(v.world_axis.normalized(), rng.uniform(0, 2 * kPi)) * v.reference)
              .normalized();
        else if constexpr (std::is_same_v<T, FixedOri>)
          return v.orientation;
        else
          throw EmptyGoal("path orientation has no free sample");
      },
      c);
}

Pose sample_goal(const GoalCondition& goal, Rng& rng) {
  return std::visit(
      [&](const auto& g) -> Pose {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, BoxGoal>)
          return Pose{g.region.sample(rng), sample_orientation(g.ori, rng)};
        else if constexpr (std::is_same_v<T, PlaneGoal>)
          return Pose{g.region.sample(rng), sample_orientation(g.ori, rng)};
        else if constexpr (std::is_same_v<T, LineGoal>)
          return Pose{g.segment.sample(rng), sample_orientation(g.ori, rng)};
        else if constexpr (std::is_same_v<T, FixedPoseGoal>)
          return g.pose;
        else if constexpr (std::is_same_v<T, JointGoal>)
          throw EmptyGoal("joint goal has no pose sample");
        else {
          if (!g.generator) throw EmptyGoal("functional goal '" + g.name + "' has no generator");
          return g.generator(rng);
        }
      },
      goal);
}

double sample_joint_goal(const JointGoal& goal, Rng& rng) {
  if (!(goal.lo <= goal.hi)) throw EmptyGoal("joint goal range empty");
  return rng.uniform(goal.lo, goal.hi);
}

FunctionalGoal pour_goal(const Vec3& container_center, double container_height,
                         double container_top_z, double source_half_height,
                         const Quat& upright_reference, double max_z) {
  double z_lo = container_top_z + container_height;
  if (z_lo >= max_z)
    throw Unreachable("pouring band starts above the reachable workspace");
  double z_hi = std::min(z_lo + 0.05, max_z);
  FunctionalGoal g;
  g.name = "pour_carry";
  g.generator = [=](Rng& rng) {
    // Keep a margin inside the strict half-height bound.
    double r = rng.uniform(0, 0.6 * source_half_height);
    double a = rng.uniform(0, 2 * kPi);
    Vec3 p(container_center.x() + r * std::cos(a), container_center.y() + r * std::sin(a),
           rng.uniform(z_lo, z_hi) + 1e-9);
    Quat q = quat_about(Vec3::UnitZ(), rng.uniform(0, 2 * kPi)) * upright_reference;
    return Pose{p, q.normalized()};
  };
  return g;
}

std::vector<Pose> pour_tilt_path(const Pose& start, double opening_radius, double half_height,
                                 const Vec2& toward_container, double tilt, int steps) {
  if (steps < 2) steps = 2;
  Vec2 dir = toward_container.norm() < 1e-9 ? Vec2(1, 0) : toward_container.normalized();
  // Pivot: rim point on the container side.
  Vec3 rim = start.position + Vec3(dir.x() * opening_radius, dir.y() * opening_radius,
                                   half_height);
  Vec3 axis(-dir.y(), dir.x(), 0);  // horizontal, perpendicular to the pour direction
  std::vector<Pose> out;
  out.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    double ang = tilt * k / steps;
    Quat r = quat_about(axis, ang);
    Pose p;
    p.position = rim + r * (start.position - rim);
    p.orientation = (r * start.orientation).normalized();
    out.push_back(p);
  }
  return out;
}

}  // namespace taskforge
