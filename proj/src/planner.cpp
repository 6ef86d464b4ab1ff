#include "taskforge/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace taskforge {

namespace {

double max_abs_delta(const JointVec& a, const JointVec& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// AABB pre-filter around the narrow-phase GJK queries.
struct Aabb {
  Vec3 lo, hi;

  static Aabb of(const Convex& piece) {
    auto [lo, hi] = piece.bounds();
    return {lo, hi};
  }
  static Aabb of(const Capsule& c) {
    return {c.a.cwiseMin(c.b).array() - c.radius, c.a.cwiseMax(c.b).array() + c.radius};
  }
  bool clears(const Aabb& other, double pad) const {
    for (int k = 0; k < 3; ++k) {
      if (lo[k] - other.hi[k] > pad || other.lo[k] - hi[k] > pad) return true;
    }
    return false;
  }
};

struct Tree {
  std::vector<JointVec> nodes;
  std::vector<int> parent;

  int add(const JointVec& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
    return static_cast<int>(nodes.size()) - 1;
  }
  int nearest(const JointVec& q) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
  JointPath to_root(int i) const {  // node i first, root last
    JointPath out;
    for (; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;
  }
};

using EdgeCheck = std::function<bool(const JointVec&, const JointVec&)>;

void shortcut(JointPath& path, const EdgeCheck& edge_ok, Rng& rng, int attempts) {
  for (int k = 0; k < attempts && path.size() > 2; ++k) {
    auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(path.size()) - 3));
    auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i) + 2, static_cast<std::int64_t>(path.size()) - 1));
    if (edge_ok(path[i], path[j])) {
      path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                 path.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
}

// Bidirectional extend/connect search over an arbitrary edge validity oracle.
JointPath connect_search(const ArmModel& arm, const JointVec& start,
                         const std::vector<JointVec>& goals, const EdgeCheck& edge_ok, Rng& rng,
                         double step, int max_iters, int shortcut_attempts) {
  for (const auto& g : goals) {
    if (edge_ok(start, g)) {
      JointPath path{start, g};
      return path;
    }
  }

  Tree ta, tb;
  ta.add(start, -1);
  for (const auto& g : goals) tb.add(g, -1);
  bool a_is_start = true;

  for (int iter = 0; iter < max_iters; ++iter) {
    JointVec q_rand = arm.random_config(rng);

    int i_near = ta.nearest(q_rand);
    JointVec q_near = ta.nodes[i_near];
    JointVec d = q_rand - q_near;
    double dist = d.norm();
    if (dist < 1e-12) continue;
    JointVec q_new = dist > step ? JointVec(q_near + d * (step / dist)) : q_rand;
    if (!edge_ok(q_near, q_new)) {
      std::swap(ta, tb);
      a_is_start = !a_is_start;
      continue;
    }
    int ia = ta.add(q_new, i_near);

    int ib = tb.nearest(q_new);
    bool reached = false;
    for (int guard = 0; guard < 256; ++guard) {
      JointVec qc = tb.nodes[ib];
      JointVec dd = q_new - qc;
      double l = dd.norm();
      if (l < 1e-9) {
        reached = true;
        break;
      }
      JointVec q_step = l > step ? JointVec(qc + dd * (step / l)) : q_new;
      if (!edge_ok(qc, q_step)) break;
      ib = tb.add(q_step, ib);
      if (l <= step) {
        reached = true;
        break;
      }
    }

    if (reached) {
      JointPath from_a = ta.to_root(ia);  // q_new .. root(a)
      JointPath from_b = tb.to_root(ib);  // q_new .. root(b)
      const JointPath& from_start = a_is_start ? from_a : from_b;
      const JointPath& from_goal = a_is_start ? from_b : from_a;
      JointPath path(from_start.rbegin(), from_start.rend());          // start .. q_new
      path.insert(path.end(), from_goal.begin() + 1, from_goal.end()); // .. goal
      shortcut(path, edge_ok, rng, shortcut_attempts);
      return path;
    }

    std::swap(ta, tb);
    a_is_start = !a_is_start;
  }
  throw PlanningTimeout();
}

}  // namespace

const char* to_string(GripperAction a) {
  switch (a) {
    case GripperAction::None: return "none";
    case GripperAction::Open: return "open";
    case GripperAction::Close: return "close";
  }
  return "none";
}

CollisionModel::CollisionModel(const ArmModel& arm, std::vector<Convex> obstacles, double margin)
    : arm_(&arm), obstacles_(std::move(obstacles)), margin_(margin) {
  auto caps = arm_capsules(arm, arm.home);
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (std::size_t j = i + 1; j < caps.size(); ++j) {
      if (std::abs(caps[i].first - caps[j].first) < 2) continue;
      if (capsule_capsule_distance(caps[i].second, caps[j].second) > 5e-3) {
        self_pairs_.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
}

bool CollisionModel::free(const JointVec& q) const {
  if (!arm_->within_limits(q)) return false;
  auto caps = arm_capsules(*arm_, q);

  std::vector<Aabb> cap_boxes;
  cap_boxes.reserve(caps.size());
  for (const auto& [link, c] : caps) cap_boxes.push_back(Aabb::of(c));

  for (const auto& piece : obstacles_) {
    Aabb pb = Aabb::of(piece);
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (cap_boxes[i].clears(pb, margin_)) continue;
      if (capsule_convex_distance(caps[i].second, piece) <= margin_) return false;
    }
  }

  if (!attached_.empty()) {
    Pose tool = link_frames(*arm_, q)[8];
    for (const auto& local : attached_) {
      Convex world = local.transformed(tool);
      Aabb wb = Aabb::of(world);
      for (const auto& piece : obstacles_) {
        if (wb.clears(Aabb::of(piece), margin_)) continue;
        if (gjk_distance(world, piece) <= margin_) return false;
      }
      // Held object against the proximal links; the wrist and hand hold it.
      for (std::size_t i = 0; i < caps.size(); ++i) {
        if (caps[i].first > 4) continue;
        if (cap_boxes[i].clears(wb, 0.0)) continue;
        if (capsule_convex_distance(caps[i].second, world) <= 0.0) return false;
      }
    }
  }

  for (const auto& [i, j] : self_pairs_) {
    if (capsule_capsule_distance(caps[i].second, caps[j].second) <= 0.0) return false;
  }
  return true;
}

bool CollisionModel::edge_free(const JointVec& a, const JointVec& b, double resolution) const {
  double span = max_abs_delta(a, b);
  int n = std::max(1, static_cast<int>(std::ceil(span / resolution)));
  for (int k = 1; k <= n; ++k) {
    JointVec q = a + (b - a) * (static_cast<double>(k) / n);
    if (!free(q)) return false;
  }
  return true;
}

bool collision_check(const ArmModel& arm, const JointVec& q, const std::vector<Convex>& obstacles,
                     const std::vector<Convex>& attached_tool_frame, double margin) {
  CollisionModel cm(arm, obstacles, margin);
  if (!attached_tool_frame.empty()) cm.attach(attached_tool_frame);
  return cm.free(q);
}

std::vector<JointVec> goal_configs(const CollisionModel& cm, const Pose& tool, const JointVec& seed,
                                   Rng& rng, int max_goals) {
  std::vector<JointVec> out;
  for (int attempt = 0; attempt < max_goals; ++attempt) {
    JointVec s = attempt == 0 ? seed : cm.arm().random_config(rng);
    IkResult r = solve_ik(cm.arm(), tool, s);
    if (!r.ok() || !cm.free(r.q)) continue;
    bool dup = std::any_of(out.begin(), out.end(),
                           [&](const JointVec& g) { return max_abs_delta(g, r.q) < 1e-3; });
    if (!dup) out.push_back(r.q);
  }
  return out;
}

JointPath plan_free_multi(const CollisionModel& cm, const JointVec& start,
                          const std::vector<JointVec>& goals, Rng& rng) {
  if (!cm.free(start)) throw std::invalid_argument("plan_free: start configuration is not collision-free");
  std::vector<JointVec> feasible;
  for (const auto& g : goals) {
    if (cm.free(g)) feasible.push_back(g);
  }
  if (feasible.empty()) throw GoalUnreachable("no collision-free goal configuration");

  const auto& cfg = EngineConfig::instance();
  EdgeCheck edge_ok = [&](const JointVec& a, const JointVec& b) {
    return cm.edge_free(a, b, cfg.plan_edge_resolution);
  };
  return connect_search(cm.arm(), start, feasible, edge_ok, rng, cfg.plan_step, cfg.plan_max_iters,
                        cfg.plan_shortcut_attempts);
}

JointPath plan_free(const CollisionModel& cm, const JointVec& start, const Pose& goal, Rng& rng) {
  auto goals = goal_configs(cm, goal, start, rng);
  if (goals.empty()) throw GoalUnreachable("no reachable IK solution for the goal pose");
  return plan_free_multi(cm, start, goals, rng);
}

JointPath plan_constrained(const CollisionModel& cm, const JointVec& start, const Pose& goal,
                           const PositionConstraint& pos, const OrientationConstraint& ori,
                           Rng& rng) {
  const ArmModel& arm = cm.arm();
  const auto& cfg = EngineConfig::instance();
  const Tol tol{};

  Pose fk0 = forward_kinematics(arm, start);
  if (!satisfies(fk0, pos, ori, tol)) {
    throw std::invalid_argument("plan_constrained: start configuration violates the constraints");
  }
  if (!satisfies(goal, pos, ori, tol)) {
    throw std::invalid_argument("plan_constrained: goal pose violates the constraints");
  }
  if (!cm.free(start)) {
    throw std::invalid_argument("plan_constrained: start configuration is not collision-free");
  }

  auto on_manifold = [&](const JointVec& q) {
    return satisfies(forward_kinematics(arm, q), pos, ori, tol);
  };
  EdgeCheck edge_ok = [&](const JointVec& a, const JointVec& b) {
    double span = max_abs_delta(a, b);
    int n = std::max(1, static_cast<int>(std::ceil(span / cfg.plan_edge_resolution)));
    for (int k = 1; k <= n; ++k) {
      JointVec q = a + (b - a) * (static_cast<double>(k) / n);
      if (!cm.free(q) || !on_manifold(q)) return false;
    }
    return true;
  };

  JointVec goal_q;
  bool have_goal = false;
  for (int attempt = 0; attempt < 16 && !have_goal; ++attempt) {
    JointVec s = attempt == 0 ? start : arm.random_config(rng);
    IkResult r = solve_ik(arm, goal, s);
    if (r.ok() && cm.free(r.q) && on_manifold(r.q)) {
      goal_q = r.q;
      have_goal = true;
    }
  }
  if (!have_goal) throw GoalUnreachable("no on-manifold IK solution for the goal pose");

  // Shorter extensions than the free-space planner: projected edges between
  // distant configurations drift off the manifold and get rejected anyway.
  const double step = std::min(cfg.plan_step, 0.15);

  if (edge_ok(start, goal_q)) return {start, goal_q};

  Tree tree;
  tree.add(start, -1);
  int attempts = 0, failures = 0;

  for (int iter = 0; iter < cfg.plan_max_iters; ++iter) {
    if (attempts >= 200 && failures > 0.9 * attempts) {
      throw ConstraintInfeasible("projection failure rate above 90%");
    }
    JointVec q_rand = iter % 4 == 0 ? goal_q : arm.random_config(rng);
    int i_near = tree.nearest(q_rand);
    JointVec q_near = tree.nodes[i_near];
    JointVec d = q_rand - q_near;
    double dist = d.norm();
    if (dist < 1e-12) continue;
    JointVec q_ext = dist > step ? JointVec(q_near + d * (step / dist)) : q_rand;

    ++attempts;
    Pose target;
    try {
      target = project(forward_kinematics(arm, q_ext), pos, ori);
    } catch (const NonProjectable&) {
      ++failures;
      continue;
    }
    IkResult r = solve_ik(arm, target, q_ext);
    if (!r.ok()) {
      ++failures;
      continue;
    }
    if (max_abs_delta(r.q, q_near) > 2.0 * cfg.plan_step) {
      ++failures;
      continue;
    }
    if (!edge_ok(q_near, r.q)) continue;
    int id = tree.add(r.q, i_near);

    if ((r.q - goal_q).norm() <= cfg.plan_step && edge_ok(r.q, goal_q)) {
      JointPath path = tree.to_root(id);
      std::reverse(path.begin(), path.end());
      path.push_back(goal_q);
      shortcut(path, edge_ok, rng, cfg.plan_shortcut_attempts);
      return path;
    }
  }
  if (attempts >= 50 && failures > 0.9 * attempts) {
    throw ConstraintInfeasible("projection failure rate above 90%");
  }
  throw PlanningTimeout();
}

JointPath follow_cartesian(const CollisionModel& cm, const JointVec& start,
                           const std::vector<Pose>& path) {
  if (path.empty()) throw std::invalid_argument("follow_cartesian: empty path");
  const ArmModel& arm = cm.arm();
  const auto& cfg = EngineConfig::instance();

  Pose fk0 = forward_kinematics(arm, start);
  if ((fk0.position - path.front().position).norm() > 0.01 ||
      angular_distance(fk0.orientation, path.front().orientation) > deg2rad(5.0)) {
    throw std::invalid_argument("follow_cartesian: path must start at the current tool pose");
  }

  JointPath qs{start};
  for (std::size_t i = 1; i < path.size(); ++i) {
    IkResult r = solve_ik(arm, path[i], qs.back());
    if (!r.ok() || max_abs_delta(r.q, qs.back()) > cfg.cartesian_continuity || !cm.free(r.q) ||
        !cm.edge_free(qs.back(), r.q, cfg.plan_edge_resolution)) {
      throw IKChainBreak(static_cast<int>(i));
    }
    qs.push_back(r.q);
  }
  return qs;
}

JointPath densify(const JointPath& path, double max_step) {
  if (path.size() <= 1) return path;
  JointPath out{path.front()};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const JointVec& a = path[i - 1];
    const JointVec& b = path[i];
    double span = max_abs_delta(a, b);
    if (span < 1e-15) continue;
    int n = std::max(1, static_cast<int>(std::ceil(span / max_step)));
    for (int k = 1; k <= n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  return out;
}

void append_segment(Trajectory& traj, const JointPath& path, const Waypoint& wp,
                    const std::string& held_object) {
  if (path.empty()) throw std::invalid_argument("append_segment: empty path");
  const auto& cfg = EngineConfig::instance();
  JointPath dense = densify(path, cfg.plan_densify_step);

  if (traj.points.empty()) {
    traj.points.push_back({0.0, dense.front()});
  } else if (max_abs_delta(traj.points.back().q, dense.front()) > 1e-9) {
    throw std::invalid_argument("append_segment: path does not start at the trajectory tail");
  }
  double t = traj.points.back().t;
  for (std::size_t i = 1; i < dense.size(); ++i) {
    double span = max_abs_delta(dense[i], dense[i - 1]);
    if (span < 1e-12) continue;
    t += span / cfg.joint_speed;
    traj.points.push_back({t, dense[i]});
  }
  traj.markers.emplace_back(static_cast<int>(traj.points.size()) - 1, wp);
  traj.held.push_back(held_object);
}

}  // namespace taskforge
