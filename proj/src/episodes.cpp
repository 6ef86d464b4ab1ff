#include "taskforge/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "taskforge/config.hpp"
#include "taskforge/grasping.hpp"
#include "taskforge/textdoc.hpp"

namespace taskforge {

namespace {

// Extra settle frames appended after the tilt so the pour finishes draining
// while the recorder is still sampling.
constexpr int kPourHoldFrames = 16;
// Cartesian spacing for tracked legs (approach, lift, strokes, sweeps).
constexpr double kTrackStep = 0.01;

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), enough for per-file manifests.

struct Sha256 {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::uint64_t length = 0;
  unsigned char block[64];
  std::size_t fill = 0;

  static std::uint32_t rotr(std::uint32_t v, int n) { return (v >> n) | (v << (32 - n)); }

  void compress(const unsigned char* p) {
    static const std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = std::uint32_t(p[4 * i]) << 24 | std::uint32_t(p[4 * i + 1]) << 16 |
             std::uint32_t(p[4 * i + 2]) << 8 | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
                  hh = h[7];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      std::uint32_t ch = (e & f) ^ (~e & g);
      std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = d + t1; d = c; c = b; b = a; a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  void update(const void* data, std::size_t n) {
    auto* p = static_cast<const unsigned char*>(data);
    length += n;
    while (n) {
      std::size_t take = std::min(n, sizeof(block) - fill);
      std::memcpy(block + fill, p, take);
      fill += take;
      p += take;
      n -= take;
      if (fill == sizeof(block)) {
        compress(block);
        fill = 0;
      }
    }
  }

  std::string hex() {
    std::uint64_t bits = length * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char len[8];
    for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len, 8);
    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 64);
  }
};

std::string sha256_hex(const std::string& bytes) {
  Sha256 s;
  s.update(bytes.data(), bytes.size());
  return s.hex();
}

// ---------------------------------------------------------------------------
// Little-endian frame table encoding.

struct ByteWriter {
  std::string buf;
  void raw(const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void pose(const Pose& p) {
    f64(p.position.x()); f64(p.position.y()); f64(p.position.z());
    f64(p.orientation.w()); f64(p.orientation.x()); f64(p.orientation.y());
    f64(p.orientation.z());
  }
};

struct ByteReader {
  const std::string& buf;
  std::size_t off = 0;
  std::string file;

  void raw(void* p, std::size_t n) {
    if (off + n > buf.size()) throw CorruptEpisode(file + ": truncated frame table");
    std::memcpy(p, buf.data() + off, n);
    off += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  std::int64_t i64() { std::int64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  Pose pose() {
    Pose p;
    p.position.x() = f64(); p.position.y() = f64(); p.position.z() = f64();
    double w = f64(), x = f64(), y = f64(), z = f64();
    p.orientation = Quat(w, x, y, z);  // stored normalized; do not renormalize
    return p;
  }
};

// ---------------------------------------------------------------------------
// Text encoding of poses and constraints (shortest round-trip doubles).

std::string join_vec(const std::vector<double>& v) { return join_doubles(v.data(), v.size()); }

std::vector<double> pose_doubles(const Pose& p) {
  return {p.position.x(), p.position.y(), p.position.z(), p.orientation.w(),
          p.orientation.x(), p.orientation.y(), p.orientation.z()};
}

Pose pose_from(const std::vector<double>& v, std::size_t at) {
  Pose p;
  p.position = Vec3(v[at], v[at + 1], v[at + 2]);
  p.orientation = Quat(v[at + 3], v[at + 4], v[at + 5], v[at + 6]);
  return p;
}

void append_doubles(std::vector<double>& out, std::initializer_list<double> vals) {
  out.insert(out.end(), vals);
}

std::string encode_pos(const PositionConstraint& c) {
  std::vector<double> v;
  std::string tag;
  if (const auto* f = std::get_if<FreePos>(&c)) {
    tag = "free";
    v = pose_doubles(f->region.center);
    append_doubles(v, {f->region.half.x(), f->region.half.y(), f->region.half.z()});
  } else if (const auto* p = std::get_if<PlanePos>(&c)) {
    tag = "plane";
    v = pose_doubles(p->region.frame);
    append_doubles(v, {p->region.half.x(), p->region.half.y()});
  } else if (const auto* l = std::get_if<LinePos>(&c)) {
    tag = "line";
    append_doubles(v, {l->segment.start.x(), l->segment.start.y(), l->segment.start.z(),
                       l->segment.end.x(), l->segment.end.y(), l->segment.end.z()});
  } else if (const auto* x = std::get_if<FixedPos>(&c)) {
    tag = "fixed";
    append_doubles(v, {x->point.x(), x->point.y(), x->point.z()});
  } else {
    const auto& t = std::get<TrajPos>(c);
    tag = "traj";
    v.push_back(double(t.path.size()));
    for (const auto& p : t.path) {
      auto pd = pose_doubles(p);
      v.insert(v.end(), pd.begin(), pd.end());
    }
  }
  return tag + " " + join_vec(v);
}

PositionConstraint decode_pos(const std::string& text, const std::string& file) {
  auto tokens = split_tokens(text);
  if (tokens.empty()) throw CorruptEpisode(file + ": empty position constraint");
  std::vector<double> v;
  for (std::size_t i = 1; i < tokens.size(); ++i) v.push_back(std::stod(tokens[i]));
  const std::string& tag = tokens[0];
  auto need = [&](std::size_t n) {
    if (v.size() != n) throw CorruptEpisode(file + ": bad '" + tag + "' constraint arity");
  };
  if (tag == "free") {
    need(10);
    return FreePos{Box3{pose_from(v, 0), Vec3(v[7], v[8], v[9])}};
  }
  if (tag == "plane") {
    need(9);
    return PlanePos{PlaneRegion{pose_from(v, 0), Vec2(v[7], v[8])}};
  }
  if (tag == "line") {
    need(6);
    return LinePos{LineSegment{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])}};
  }
  if (tag == "fixed") {
    need(3);
    return FixedPos{Vec3(v[0], v[1], v[2])};
  }
  if (tag == "traj") {
    if (v.empty() || v.size() != 1 + 7 * std::size_t(v[0]))
      throw CorruptEpisode(file + ": bad traj constraint arity");
    TrajPos t;
    for (std::size_t i = 0; i < std::size_t(v[0]); ++i) t.path.push_back(pose_from(v, 1 + 7 * i));
    return t;
  }
  throw CorruptEpisode(file + ": unknown position constraint '" + tag + "'");
}

std::string encode_ori(const OrientationConstraint& c) {
  std::vector<double> v;
  std::string tag;
  if (std::holds_alternative<FreeOri>(c)) {
    return "free";
  } else if (const auto* a = std::get_if<AxisOri>(&c)) {
    tag = "axis";
    append_doubles(v, {a->world_axis.x(), a->world_axis.y(), a->world_axis.z(),
                       a->reference.w(), a->reference.x(), a->reference.y(), a->reference.z(),
                       a->cone});
  } else if (const auto* f = std::get_if<FixedOri>(&c)) {
    tag = "fixed";
    append_doubles(v, {f->orientation.w(), f->orientation.x(), f->orientation.y(),
                       f->orientation.z()});
  } else {
    const auto& p = std::get<PathOri>(c);
    tag = "path";
    v.push_back(double(p.knots.size()));
    for (const auto& [pos, q] : p.knots)
      append_doubles(v, {pos.x(), pos.y(), pos.z(), q.w(), q.x(), q.y(), q.z()});
  }
  return tag + " " + join_vec(v);
}

OrientationConstraint decode_ori(const std::string& text, const std::string& file) {
  auto tokens = split_tokens(text);
  if (tokens.empty()) throw CorruptEpisode(file + ": empty orientation constraint");
  std::vector<double> v;
  for (std::size_t i = 1; i < tokens.size(); ++i) v.push_back(std::stod(tokens[i]));
  const std::string& tag = tokens[0];
  if (tag == "free") return FreeOri{};
  if (tag == "axis") {
    if (v.size() != 8) throw CorruptEpisode(file + ": bad axis constraint arity");
    AxisOri a;
    a.world_axis = Vec3(v[0], v[1], v[2]);
    a.reference = Quat(v[3], v[4], v[5], v[6]);
    a.cone = v[7];
    return a;
  }
  if (tag == "fixed") {
    if (v.size() != 4) throw CorruptEpisode(file + ": bad fixed orientation arity");
    return FixedOri{Quat(v[0], v[1], v[2], v[3])};
  }
  if (tag == "path") {
    if (v.empty() || v.size() != 1 + 7 * std::size_t(v[0]))
      throw CorruptEpisode(file + ": bad path orientation arity");
    PathOri p;
    for (std::size_t i = 0; i < std::size_t(v[0]); ++i) {
      std::size_t at = 1 + 7 * i;
      p.knots.emplace_back(Vec3(v[at], v[at + 1], v[at + 2]),
                           Quat(v[at + 3], v[at + 4], v[at + 5], v[at + 6]));
    }
    return p;
  }
  throw CorruptEpisode(file + ": unknown orientation constraint '" + tag + "'");
}

GripperAction action_from(const std::string& s, const std::string& file) {
  if (s == to_string(GripperAction::None)) return GripperAction::None;
  if (s == to_string(GripperAction::Open)) return GripperAction::Open;
  if (s == to_string(GripperAction::Close)) return GripperAction::Close;
  throw CorruptEpisode(file + ": unknown gripper action '" + s + "'");
}

bool release_category(TaskCategory c) {
  return c == TaskCategory::PickPlace || c == TaskCategory::Stack || c == TaskCategory::Drop ||
         c == TaskCategory::ShapeSorter;
}

// ---------------------------------------------------------------------------
// Demonstration executor.

struct ExecEvent {
  enum Kind { Attach, Release } kind = Attach;
  double t = 0;
  std::string object;
  Pose pose;  // Attach: object in tool frame; Release: settled world pose
};

struct ArtLeg {
  std::string object, joint;
  double v0 = 0, v1 = 0;
  double t0 = 0, t1 = 0;
};

struct Executor {
  const ArmModel& arm;
  Rng& rng;
  TaskInstance task;  // working copy; scene mutates as legs complete
  const EngineConfig& cfg = EngineConfig::instance();

  Trajectory traj;
  JointVec q;
  std::vector<ExecEvent> events;
  std::vector<ArtLeg> legs;
  std::vector<Pose> unit_end;
  std::string held;
  Pose held_in_tool;
  std::vector<Convex> held_pieces;  // tool frame
  int goal_cursor = 0;
  Vec3 approach{0, 0, -1};

  Executor(const TaskInstance& t, const ArmModel& a, Rng& r) : arm(a), rng(r), task(t) {
    q = arm.home;
    unit_end.resize(task.units.size());
  }

  double now() const { return traj.duration(); }

  std::vector<std::string> excluding(std::initializer_list<std::string> ids) const {
    std::vector<std::string> out(ids);
    for (const auto& obj : task.scene.objects())  // regions are paint, not geometry
      if (task.scene.entry_of(obj).is_region) out.push_back(obj.id);
    return out;
  }

  CollisionModel touch_model(const std::string& target) const {
    return CollisionModel(arm, task.scene.world_pieces(excluding({target})));
  }

  CollisionModel carry_model(const std::string& target) const {
    CollisionModel cm(arm, task.scene.world_pieces(excluding({target})));
    cm.attach(held_pieces);
    return cm;
  }

  void commit(const JointPath& path, const Waypoint& wp) {
    append_segment(traj, path, wp, held);
    q = path.back();
  }

  Pose tool_now() const { return forward_kinematics(arm, q); }

  void run() {
    for (std::size_t ui = 0; ui < task.units.size(); ++ui) {
      if (task.category == TaskCategory::Pour && ui + 1 == task.units.size())
        finalize_pour_tilt(task);
      const UnitTask& unit = task.units[ui];
      if (const auto* ct = std::get_if<ControlTask>(&unit)) {
        do_grasp(int(ui), *ct);
      } else if (const auto* m1 = std::get_if<M1Task>(&unit)) {
        do_m1(int(ui), *m1);
      } else {
        const auto& m2 = std::get<M2Task>(unit);
        if (task.joint_moves[ui])
          do_articulated(int(ui), *task.joint_moves[ui]);
        else if (std::holds_alternative<TrajPos>(m2.pos))
          do_path(int(ui), m2);
        else if (std::holds_alternative<LinePos>(m2.pos))
          do_stroke(int(ui), m2);
        else
          do_carry(int(ui), m2);
      }
    }
  }

  void do_grasp(int ui, const ControlTask& ct) {
    auto& obj = task.scene.object(ct.target);
    bool articulated = !task.target_part.empty();
    std::string cls;
    Pose base;
    double bucket = 1.0;
    if (articulated) {
      const auto& part = task.scene.part_of(obj, task.target_part);
      cls = part.grasp_class;
      base = task.scene.part_world(obj, part);
    } else {
      cls = obj.class_name;
      bucket = nearest_scale_bucket(obj.scale);
      base = obj.pose;
    }
    const auto* entry = default_dictionary().find(cls, bucket);
    if (!entry) throw GenerationFailed("no grasp dictionary entry for " + cls);

    CollisionModel cm_clear(arm, task.scene.world_pieces(excluding({})));
    CollisionModel cm_touch = touch_model(ct.target);
    for (const auto& g : entry->grasps) {
      Pose grasp = compose(base, g.local);
      Vec3 app = grasp.rotate(Vec3(0, 0, -1));
      Pose pre{grasp.position - app * cfg.pregrasp_offset, grasp.orientation};
      try {
        JointPath to_pre = plan_free(cm_clear, q, pre, rng);
        JointPath to_grasp =
            follow_cartesian(cm_touch, to_pre.back(), densify_path({pre, grasp}, kTrackStep));
        commit(to_pre, {pre, GripperAction::None, ui, "pre_grasp"});
        commit(to_grasp, {grasp, GripperAction::Close, ui, "grasp"});
        Pose reached = tool_now();
        approach = reached.rotate(Vec3(0, 0, -1));
        if (articulated) {
          unit_end[ui] = base;
          return;
        }
        held = ct.target;
        held_in_tool = compose(inverse(reached), obj.pose);
        held_pieces.clear();
        for (const auto& piece : task.scene.object_pieces(obj))
          held_pieces.push_back(piece.transformed(inverse(reached)));
        events.push_back({ExecEvent::Attach, now(), held, held_in_tool});
        Pose lift{reached.position + Vec3(0, 0, cfg.postgrasp_lift), reached.orientation};
        JointPath up =
            follow_cartesian(carry_model(held), q, densify_path({reached, lift}, kTrackStep));
        commit(up, {lift, GripperAction::None, ui, "lift"});
        obj.pose = compose(tool_now(), held_in_tool);
        unit_end[ui] = obj.pose;
        return;
      } catch (const GoalUnreachable&) {
      } catch (const PlanningTimeout&) {
      } catch (const IKChainBreak&) {
      }
    }
    throw GenerationFailed("no feasible grasp on " + ct.target);
  }

  void do_m1(int ui, const M1Task& m1) {
    const GoalCondition& goal = task.goals[goal_cursor];
    bool releasing =
        std::size_t(ui) + 1 == task.units.size() && release_category(task.category);
    std::string reason = "goal unreachable";
    for (int tries = 0; tries < 6; ++tries) {
      Pose obj_goal = sample_goal(goal, rng);
      Pose tool_goal = compose(obj_goal, inverse(held_in_tool));
      try {
        JointPath p = plan_free(carry_model(held), q, tool_goal, rng);
        commit(p, {tool_goal, releasing ? GripperAction::Open : GripperAction::None, ui,
                   releasing ? "place" : "position"});
        auto& obj = task.scene.object(m1.target);
        obj.pose = compose(tool_now(), held_in_tool);
        unit_end[ui] = obj.pose;
        ++goal_cursor;
        if (releasing) do_release(ui, m1.target);
        return;
      } catch (const std::exception& e) {
        reason = e.what();
      }
    }
    throw GenerationFailed("place failed on " + m1.target + ": " + reason);
  }

  void do_release(int ui, const std::string& id) {
    task.scene.settle(id);
    events.push_back({ExecEvent::Release, now(), id, task.scene.object(id).pose});
    held.clear();
    held_pieces.clear();
    Pose here = tool_now();
    Pose up{here.position + Vec3(0, 0, cfg.postgrasp_lift), here.orientation};
    JointPath p = follow_cartesian(touch_model(id), q, densify_path({here, up}, kTrackStep));
    commit(p, {up, GripperAction::None, ui, "retreat"});
  }

  void do_carry(int ui, const M2Task& m2) {
    const auto& box = std::get<FreePos>(m2.pos).region;
    const GoalCondition& goal = task.goals[goal_cursor];
    std::string reason = "constrained plan failed";
    for (int tries = 0; tries < 6; ++tries) {
      Pose obj_goal = sample_goal(goal, rng);
      Pose tool_goal = compose(obj_goal, inverse(held_in_tool));
      Pose tool = tool_now();
      // The tool keeps its orientation for the whole carry, so the fixed
      // tool->object offset turns the object's box into a shifted tool box.
      Vec3 offset = tool.rotate(held_in_tool.position);
      FreePos tool_box{Box3{Pose{box.center.position - offset, box.center.orientation},
                            box.half}};
      FixedOri tool_ori{tool.orientation};
      try {
        JointPath p = plan_constrained(carry_model(held), q, tool_goal, tool_box, tool_ori, rng);
        commit(p, {tool_goal, GripperAction::None, ui, "carry"});
        auto& obj = task.scene.object(m2.target);
        obj.pose = compose(tool_now(), held_in_tool);
        unit_end[ui] = obj.pose;
        ++goal_cursor;
        return;
      } catch (const std::exception& e) {
        reason = e.what();
      }
    }
    throw GenerationFailed("carry failed on " + m2.target + ": " + reason);
  }

  void do_stroke(int ui, const M2Task& m2) {
    const auto& seg = std::get<LinePos>(m2.pos).segment;
    Pose obj_now = compose(tool_now(), held_in_tool);
    std::vector<Pose> obj_path =
        densify_path({obj_now, Pose{seg.end, obj_now.orientation}}, kTrackStep);
    std::vector<Pose> tool_path;
    tool_path.reserve(obj_path.size());
    for (const auto& p : obj_path) tool_path.push_back(compose(p, inverse(held_in_tool)));
    JointPath path = follow_cartesian(carry_model(held), q, tool_path);
    commit(path, {tool_path.back(), GripperAction::None, ui, "stroke"});
    auto& obj = task.scene.object(m2.target);
    obj.pose = compose(tool_now(), held_in_tool);
    unit_end[ui] = obj.pose;
    ++goal_cursor;
  }

  void do_path(int ui, const M2Task& m2) {
    const auto& tp = std::get<TrajPos>(m2.pos);
    std::vector<Pose> obj_path = densify_path(tp.path, kTrackStep);
    std::vector<Pose> tool_path;
    tool_path.reserve(obj_path.size());
    for (const auto& p : obj_path) tool_path.push_back(compose(p, inverse(held_in_tool)));
    JointPath path = follow_cartesian(carry_model(held), q, tool_path);
    commit(path, {tool_path.back(), GripperAction::None, ui, "tilt"});
    auto& obj = task.scene.object(m2.target);
    obj.pose = compose(tool_now(), held_in_tool);
    unit_end[ui] = obj.pose;
    ++goal_cursor;
  }

  void do_articulated(int ui, const TaskInstance::JointMove& mv) {
    auto& obj = task.scene.object(mv.object);
    const auto& part = task.scene.part_of(obj, task.target_part);
    Pose tool = tool_now();
    Pose part_now = task.scene.part_world(obj, part);
    Pose tool_in_part = compose(inverse(part_now), tool);

    double dv = mv.to - mv.from;
    task.scene.set_joint(mv.object, mv.joint, mv.from + dv * 1e-3);
    double rate =
        (task.scene.part_world(obj, part).position - part_now.position).norm() /
        std::abs(dv * 1e-3);
    int steps = std::clamp(
        int(std::ceil(std::abs(dv) * std::max(rate, 1e-6) / kTrackStep)) + 1, 8, 400);
    std::vector<Pose> tool_path;
    tool_path.reserve(steps);
    for (int k = 0; k < steps; ++k) {
      double v = mv.from + dv * double(k) / (steps - 1);
      task.scene.set_joint(mv.object, mv.joint, v);
      tool_path.push_back(compose(task.scene.part_world(obj, part), tool_in_part));
    }
    task.scene.set_joint(mv.object, mv.joint, mv.from);

    CollisionModel cm(arm, task.scene.world_pieces(excluding({mv.object})));
    JointPath path = follow_cartesian(cm, q, tool_path);
    double t0 = now();
    commit(path, {tool_path.back(), GripperAction::None, ui, mv.joint});
    legs.push_back({mv.object, mv.joint, mv.from, mv.to, t0, now()});
    task.scene.set_joint(mv.object, mv.joint, mv.to);
    unit_end[ui] = task.scene.part_world(obj, part);
    ++goal_cursor;
  }

  // Where the gripper came from, in relation tokens ("top" for overhead).
  std::string approach_token() const {
    Vec3 d = -approach.normalized();
    if (d.z() >= 0.8) return "top";
    if (std::abs(d.x()) >= std::abs(d.y())) return d.x() > 0 ? "rear" : "front";
    return d.y() > 0 ? "right" : "left";
  }

  JointVec config_at(double t) const {
    const auto& pts = traj.points;
    if (t <= pts.front().t) return pts.front().q;
    if (t >= pts.back().t) return pts.back().q;
    std::size_t hi = 1;
    while (pts[hi].t < t) ++hi;
    const auto& a = pts[hi - 1];
    const auto& b = pts[hi];
    double span = b.t - a.t;
    double alpha = span <= 0 ? 1.0 : (t - a.t) / span;
    return a.q + (b.q - a.q) * alpha;
  }

  EpisodeRecord make_record(const TaskInstance& original) {
    if (task.slots.count("relative position"))
      task.slots["relative position"] = approach_token();

    EpisodeRecord rec;
    rec.category = task.category;
    rec.variation = task.variation.kind;
    rec.value = task.variation.value;
    rec.unseen = task.variation.unseen;
    rec.seed = task.seed;
    rec.slots = task.slots;
    rec.instructions = instructions_for(task);
    rec.target = task.target;
    rec.target_part = task.target_part;
    rec.unlock_fraction = task.unlock_fraction;
    rec.units = task.units;
    rec.unit_end_object = unit_end;
    rec.success = task.success;
    rec.particles = original.particles;

    for (const auto& obj : original.scene.objects()) {
      ObjectSnapshot snap{obj.id, obj.class_name, obj.color, obj.scale, obj.fixture, obj.pose,
                          {obj.joints.begin(), obj.joints.end()}};
      rec.objects.push_back(std::move(snap));
      rec.object_ids.push_back(obj.id);
      for (const auto& [joint, value] : obj.joints) rec.joint_columns.emplace_back(obj.id, joint);
    }
    for (const auto& [idx, wp] : traj.markers) {
      rec.waypoints.push_back(wp);
      rec.waypoint_times.push_back(traj.points[idx].t);
    }

    Scene replay = original.scene;
    std::optional<ParticleSet> live = original.particles;
    double dt = double(cfg.frame_ms) / 1000.0;
    int frames = int(std::ceil(traj.duration() / dt)) + 1;
    if (task.category == TaskCategory::Pour) frames += kPourHoldFrames;

    std::size_t ev = 0, wp = 0, mark = 0;
    std::string carried;
    Pose carried_T;
    std::uint8_t grip = 0;
    for (int k = 0; k < frames; ++k) {
      double t = k * dt;
      while (ev < events.size() && events[ev].t <= t + 1e-9) {
        if (events[ev].kind == ExecEvent::Attach) {
          carried = events[ev].object;
          carried_T = events[ev].pose;
        } else {
          replay.object(events[ev].object).pose = events[ev].pose;
          carried.clear();
        }
        ++ev;
      }
      while (wp + 1 < rec.waypoint_times.size() && rec.waypoint_times[wp] < t - 1e-9) ++wp;
      while (mark < rec.waypoint_times.size() && rec.waypoint_times[mark] <= t + 1e-9) {
        if (rec.waypoints[mark].action == GripperAction::Close) grip = 1;
        if (rec.waypoints[mark].action == GripperAction::Open) grip = 0;
        ++mark;
      }

      Frame f;
      f.t_ms = std::int64_t(k) * cfg.frame_ms;
      f.q = config_at(t);
      f.ee = forward_kinematics(arm, f.q);
      f.gripper = grip;
      f.waypoint = std::int32_t(wp);
      for (const auto& leg : legs) {
        double v = t <= leg.t0 ? leg.v0
                   : t >= leg.t1
                       ? leg.v1
                       : leg.v0 + (leg.v1 - leg.v0) * (t - leg.t0) / (leg.t1 - leg.t0);
        replay.set_joint(leg.object, leg.joint, v);
      }
      if (!carried.empty()) replay.object(carried).pose = compose(f.ee, carried_T);
      for (const auto& id : rec.object_ids) f.object_poses.push_back(replay.object(id).pose);
      for (const auto& [id, joint] : rec.joint_columns)
        f.joint_values.push_back(replay.joint_value(id, joint));

      int ui = rec.waypoints[wp].unit_index;
      if (live && std::holds_alternative<M2Task>(task.units[ui])) particle_step(*live, replay);
      rec.steps.push_back(std::move(f));
    }
    rec.outcome = success_check(replay, live, task.success);
    return rec;
  }
};

}  // namespace

EpisodeRecord execute_and_record(const TaskInstance& task, const ArmModel& arm, Rng& rng) {
  std::string last = "planning failed";
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      Executor ex(task, arm, rng);
      ex.run();
      return ex.make_record(task);
    } catch (const GenerationFailed& e) {
      last = e.what();
    } catch (const PlanningTimeout& e) {
      last = e.what();
    } catch (const GoalUnreachable& e) {
      last = e.what();
    } catch (const ConstraintInfeasible& e) {
      last = e.what();
    } catch (const IKChainBreak& e) {
      last = e.what();
    } catch (const Unreachable& e) {
      last = e.what();
    } catch (const NonProjectable& e) {
      last = e.what();
    }
  }
  throw GenerationFailed(last);
}

// ---------------------------------------------------------------------------
// Audit.

namespace {

Pose constrained_pose(const Scene& scene, const std::string& target,
                      const std::string& target_part) {
  const auto& obj = scene.object(target);
  if (!target_part.empty() && scene.entry_of(obj).articulated())
    return scene.part_world(obj, scene.part_of(obj, target_part));
  return obj.pose;
}

}  // namespace

std::vector<std::string> audit_episode(const EpisodeRecord& rec, const ArmModel& arm) {
  std::vector<std::string> bad;
  const auto& cfg = EngineConfig::instance();
  if (rec.steps.empty()) {
    bad.push_back("no frames");
    return bad;
  }
  if (rec.waypoints.empty()) bad.push_back("no waypoints");

  std::int32_t prev_wp = 0;
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const Frame& f = rec.steps[k];
    if (f.t_ms != std::int64_t(k) * cfg.frame_ms) {
      bad.push_back("frame " + std::to_string(k) + ": cadence violation");
      break;
    }
    if (f.waypoint < prev_wp || f.waypoint >= std::int32_t(rec.waypoints.size())) {
      bad.push_back("frame " + std::to_string(k) + ": waypoint index not monotone");
      break;
    }
    prev_wp = f.waypoint;
    Pose fk = forward_kinematics(arm, f.q);
    if ((fk.position - f.ee.position).norm() > 1e-6 ||
        angular_distance(fk.orientation, f.ee.orientation) > 1e-6) {
      bad.push_back("frame " + std::to_string(k) + ": stored tool pose diverges from FK");
      break;
    }
  }

  Scene scn;
  for (const auto& snap : rec.objects) {
    SceneObject obj;
    obj.id = snap.id;
    obj.class_name = snap.class_name;
    obj.color = snap.color;
    obj.scale = snap.scale;
    obj.fixture = snap.fixture;
    obj.pose = snap.pose;
    obj.joints = {snap.joints.begin(), snap.joints.end()};
    scn.add(obj);
  }

  std::optional<ParticleSet> live = rec.particles;
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const Frame& f = rec.steps[k];
    if (f.object_poses.size() != rec.object_ids.size() ||
        f.joint_values.size() != rec.joint_columns.size()) {
      bad.push_back("frame " + std::to_string(k) + ": column arity mismatch");
      return bad;
    }
    for (std::size_t i = 0; i < rec.object_ids.size(); ++i)
      scn.object(rec.object_ids[i]).pose = f.object_poses[i];
    for (std::size_t j = 0; j < rec.joint_columns.size(); ++j)
      scn.set_joint(rec.joint_columns[j].first, rec.joint_columns[j].second, f.joint_values[j]);

    int ui = rec.waypoints[std::size_t(f.waypoint)].unit_index;
    if (ui < 0 || std::size_t(ui) >= rec.units.size()) {
      bad.push_back("frame " + std::to_string(k) + ": unit index out of range");
      return bad;
    }
    if (const auto* m2 = std::get_if<M2Task>(&rec.units[std::size_t(ui)])) {
      Pose p = constrained_pose(scn, m2->target, rec.target_part);
      if (!satisfies(p, m2->pos, m2->ori))
        bad.push_back("frame " + std::to_string(k) + ": unit " + std::to_string(ui) +
                      " constraint violated (pos " +
                      format_double(position_distance(p.position, m2->pos)) + " m, ori " +
                      format_double(rad2deg(orientation_distance(p, m2->ori))) + " deg)");
      if (live) particle_step(*live, scn);
    }
  }

  if (rec.unit_end_object.size() != rec.units.size()) {
    bad.push_back("unit end pose arity mismatch");
  } else {
    for (std::size_t ui = 0; ui < rec.units.size(); ++ui) {
      const PositionConstraint* pos = nullptr;
      const OrientationConstraint* ori = nullptr;
      if (const auto* m1 = std::get_if<M1Task>(&rec.units[ui])) {
        pos = &m1->pos;
        ori = &m1->ori;
      } else if (const auto* m2 = std::get_if<M2Task>(&rec.units[ui])) {
        pos = &m2->pos;
        ori = &m2->ori;
      }
      if (pos && !satisfies(rec.unit_end_object[ui], *pos, *ori))
        bad.push_back("unit " + std::to_string(ui) + ": end pose misses constraint");
    }
  }

  bool recomputed = success_check(scn, live, rec.success);
  if (recomputed != rec.outcome) bad.push_back("stored outcome does not replay");
  if (rec.instructions.low.size() != rec.units.size())
    bad.push_back("instruction line count does not match unit count");
  return bad;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

constexpr const char* kMetadataFile = "metadata.txt";
constexpr const char* kWaypointFile = "waypoints.txt";
constexpr const char* kStepsBinFile = "steps.bin";
constexpr const char* kStepsTxtFile = "steps.txt";
constexpr const char* kChecksumFile = "checksums.txt";

std::string metadata_text(const EpisodeRecord& rec) {
  TextDoc doc;
  doc.header.set("format", "episode/1");
  doc.header.set("category", to_string(rec.category));
  doc.header.set("variation", rec.variation);
  doc.header.set("value", rec.value);
  doc.header.set("unseen", rec.unseen ? "1" : "0");
  doc.header.set("seed", std::to_string(rec.seed));
  doc.header.set("target", rec.target);
  if (!rec.target_part.empty()) doc.header.set("target_part", rec.target_part);
  doc.header.set("unlock_fraction", format_double(rec.unlock_fraction));
  doc.header.set("outcome", rec.outcome ? "1" : "0");
  doc.header.set("frames", std::to_string(rec.steps.size()));
  doc.header.set("frame_ms", std::to_string(EngineConfig::instance().frame_ms));

  TextDoc::Section ins;
  ins.name = "instructions";
  for (const auto& line : rec.instructions.high) ins.entries.push_back({"high", line});
  for (const auto& line : rec.instructions.low) ins.entries.push_back({"low", line});
  doc.sections.push_back(std::move(ins));

  TextDoc::Section slots;
  slots.name = "slots";
  for (const auto& [key, value] : rec.slots) slots.entries.push_back({key, value});
  doc.sections.push_back(std::move(slots));

  for (const auto& snap : rec.objects) {
    TextDoc::Section s;
    s.name = "object";
    s.set("id", snap.id);
    s.set("class", snap.class_name);
    if (!snap.color.empty()) s.set("color", snap.color);
    s.set("scale", format_double(snap.scale));
    s.set("fixture", snap.fixture ? "1" : "0");
    s.set("pose", join_vec(pose_doubles(snap.pose)));
    for (const auto& [joint, value] : snap.joints)
      s.entries.push_back({"joint", joint + " " + format_double(value)});
    doc.sections.push_back(std::move(s));
  }

  for (std::size_t ui = 0; ui < rec.units.size(); ++ui) {
    TextDoc::Section s;
    s.name = "unit";
    if (const auto* ct = std::get_if<ControlTask>(&rec.units[ui])) {
      s.set("type", "control");
      s.set("target", ct->target);
      s.set("grasp", ct->grasp ? "1" : "0");
    } else if (const auto* m1 = std::get_if<M1Task>(&rec.units[ui])) {
      s.set("type", "m1");
      s.set("target", m1->target);
      s.set("pos", encode_pos(m1->pos));
      s.set("ori", encode_ori(m1->ori));
    } else {
      const auto& m2 = std::get<M2Task>(rec.units[ui]);
      s.set("type", "m2");
      s.set("target", m2.target);
      s.set("pos", encode_pos(m2.pos));
      s.set("ori", encode_ori(m2.ori));
    }
    s.set("end", join_vec(pose_doubles(rec.unit_end_object[ui])));
    doc.sections.push_back(std::move(s));
  }

  TextDoc::Section suc;
  suc.name = "success";
  if (const auto* od = std::get_if<ObjectDetector>(&rec.success)) {
    suc.set("kind", "object");
    suc.set("frame", od->frame_id);
    auto v = pose_doubles(od->box.center);
    append_doubles(v, {od->box.half.x(), od->box.half.y(), od->box.half.z()});
    suc.set("box", join_vec(v));
    std::string joined;
    for (const auto& id : od->accepted) joined += (joined.empty() ? "" : " ") + id;
    suc.set("accepted", joined);
  } else if (const auto* jd = std::get_if<JointDetector>(&rec.success)) {
    suc.set("kind", "joint");
    suc.set("object", jd->object);
    suc.set("joint", jd->joint);
    suc.set("window", join_vec({jd->lo, jd->hi}));
  } else {
    const auto& pd = std::get<ParticleDetector>(rec.success);
    suc.set("kind", "particle");
    suc.set("threshold", format_double(pd.threshold));
  }
  doc.sections.push_back(std::move(suc));

  if (rec.particles) {
    TextDoc::Section ps;
    ps.name = "particles";
    ps.set("kind", rec.particles->kind == ParticleSet::Kind::Pour ? "pour" : "wipe");
    ps.set("owner", rec.particles->owner);
    ps.set("other", rec.particles->other);
    std::vector<double> pts;
    pts.reserve(rec.particles->points.size() * 3);
    for (const auto& p : rec.particles->points) append_doubles(pts, {p.x(), p.y(), p.z()});
    ps.set("points", join_vec(pts));
    doc.sections.push_back(std::move(ps));
  }
  return doc.serialize();
}

std::string waypoints_text(const EpisodeRecord& rec) {
  TextDoc doc;
  doc.header.set("format", "waypoints/1");
  doc.header.set("count", std::to_string(rec.waypoints.size()));
  for (std::size_t i = 0; i < rec.waypoints.size(); ++i) {
    TextDoc::Section s;
    s.name = "waypoint";
    s.set("unit", std::to_string(rec.waypoints[i].unit_index));
    s.set("label", rec.waypoints[i].label);
    s.set("action", to_string(rec.waypoints[i].action));
    s.set("target", join_vec(pose_doubles(rec.waypoints[i].target)));
    s.set("time", format_double(rec.waypoint_times[i]));
    doc.sections.push_back(std::move(s));
  }
  return doc.serialize();
}

std::size_t frame_bytes(const EpisodeRecord& rec) {
  return 8 + 7 * 8 + 7 * 8 + 1 + 4 + rec.object_ids.size() * 7 * 8 +
         rec.joint_columns.size() * 8;
}

std::string steps_header_text(const EpisodeRecord& rec) {
  TextDoc doc;
  doc.header.set("format", "steps/1");
  doc.header.set("frames", std::to_string(rec.steps.size()));
  doc.header.set("frame_bytes", std::to_string(frame_bytes(rec)));
  doc.header.set("byte_order", "little-endian");
  doc.header.set("layout",
                 "t_ms:i64 q:7*f64 ee:7*f64(pos,wxyz) gripper:u8 waypoint:i32 "
                 "object_poses:n*7*f64 joint_values:m*f64");
  std::string ids;
  for (const auto& id : rec.object_ids) ids += (ids.empty() ? "" : " ") + id;
  doc.header.set("objects", ids);
  std::string joints;
  for (const auto& [id, joint] : rec.joint_columns)
    joints += (joints.empty() ? "" : " ") + id + ":" + joint;
  if (!joints.empty()) doc.header.set("joints", joints);
  return doc.serialize();
}

std::string steps_binary(const EpisodeRecord& rec) {
  ByteWriter w;
  w.buf.reserve(rec.steps.size() * frame_bytes(rec));
  for (const auto& f : rec.steps) {
    w.i64(f.t_ms);
    for (int i = 0; i < 7; ++i) w.f64(f.q[i]);
    w.pose(f.ee);
    w.u8(f.gripper);
    w.i32(f.waypoint);
    for (const auto& p : f.object_poses) w.pose(p);
    for (double v : f.joint_values) w.f64(v);
  }
  return w.buf;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptEpisode(path.filename().string() + ": missing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::filesystem::path episode_dir(const std::filesystem::path& root, const EpisodeRecord& rec,
                                  int index) {
  char leaf[32];
  std::snprintf(leaf, sizeof(leaf), "episode%04d", index);
  return root / task_folder(rec.category, rec.variation) / rec.value / leaf;
}

void save_episode_at(const EpisodeRecord& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> files{{kMetadataFile, metadata_text(rec)},
                                           {kWaypointFile, waypoints_text(rec)},
                                           {kStepsTxtFile, steps_header_text(rec)},
                                           {kStepsBinFile, steps_binary(rec)}};
  std::string manifest;
  for (const auto& [name, bytes] : files) {
    write_file_bytes(dir / name, bytes);
    manifest += sha256_hex(bytes) + "  " + name + "\n";
  }
  write_file_bytes(dir / kChecksumFile, manifest);
}

std::filesystem::path save_episode(const EpisodeRecord& rec, const std::filesystem::path& root) {
  std::filesystem::path cell = root / task_folder(rec.category, rec.variation) / rec.value;
  int next = 0;
  if (std::filesystem::exists(cell)) {
    for (const auto& entry : std::filesystem::directory_iterator(cell)) {
      std::string name = entry.path().filename().string();
      if (name.rfind("episode", 0) == 0)
        next = std::max(next, std::atoi(name.c_str() + 7) + 1);
    }
  }
  std::filesystem::path dir = episode_dir(root, rec, next);
  save_episode_at(rec, dir);
  return dir;
}

EpisodeRecord load_episode(const std::filesystem::path& dir) {
  std::string manifest = read_file_bytes(dir / kChecksumFile);
  std::map<std::string, std::string> expected;
  std::istringstream lines(manifest);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto gap = line.find("  ");
    if (gap == std::string::npos || gap != 64)
      throw CorruptEpisode(std::string(kChecksumFile) + ": malformed line");
    expected[line.substr(gap + 2)] = line.substr(0, gap);
  }
  for (const char* name : {kMetadataFile, kWaypointFile, kStepsTxtFile, kStepsBinFile})
    if (!expected.count(name))
      throw CorruptEpisode(std::string(kChecksumFile) + ": no entry for " + name);

  std::map<std::string, std::string> bytes;
  for (const auto& [name, sum] : expected) {
    bytes[name] = read_file_bytes(dir / name);
    if (sha256_hex(bytes[name]) != sum) throw CorruptEpisode(name + ": checksum mismatch");
  }

  EpisodeRecord rec;
  TextDoc meta;
  try {
    meta = TextDoc::parse(bytes[kMetadataFile]);
  } catch (const TextDocError& e) {
    throw CorruptEpisode(std::string(kMetadataFile) + ": " + e.what());
  }
  try {
    if (meta.header.get("format") != "episode/1")
      throw CorruptEpisode(std::string(kMetadataFile) + ": unexpected format tag");
    rec.category = category_from(meta.header.get("category"));
    rec.variation = meta.header.get("variation");
    rec.value = meta.header.get("value");
    rec.unseen = meta.header.get_int("unseen") != 0;
    rec.seed = std::stoull(meta.header.get("seed"));
    rec.target = meta.header.get("target");
    rec.target_part = meta.header.get_or("target_part", "");
    rec.unlock_fraction = meta.header.get_double("unlock_fraction");
    rec.outcome = meta.header.get_int("outcome") != 0;

    for (const auto& section : meta.sections) {
      if (section.name == "instructions") {
        for (const auto& e : section.entries) {
          if (e.key == "high") rec.instructions.high.push_back(e.value);
          if (e.key == "low") rec.instructions.low.push_back(e.value);
        }
      } else if (section.name == "slots") {
        for (const auto& e : section.entries) rec.slots[e.key] = e.value;
      } else if (section.name == "object") {
        ObjectSnapshot snap;
        snap.id = section.get("id");
        snap.class_name = section.get("class");
        snap.color = section.get_or("color", "");
        snap.scale = section.get_double("scale");
        snap.fixture = section.get_int("fixture") != 0;
        auto pd = section.get_doubles("pose");
        snap.pose = pose_from(pd, 0);
        for (const auto& e : section.entries)
          if (e.key == "joint") {
            auto tokens = split_tokens(e.value);
            snap.joints.emplace_back(tokens.at(0), std::stod(tokens.at(1)));
          }
        rec.objects.push_back(std::move(snap));
      } else if (section.name == "unit") {
        std::string type = section.get("type");
        if (type == "control") {
          ControlTask ct;
          ct.target = section.get("target");
          ct.grasp = section.get_int("grasp") != 0;
          rec.units.emplace_back(ct);
        } else if (type == "m1") {
          M1Task m1;
          m1.target = section.get("target");
          m1.pos = decode_pos(section.get("pos"), kMetadataFile);
          m1.ori = decode_ori(section.get("ori"), kMetadataFile);
          rec.units.emplace_back(m1);
        } else if (type == "m2") {
          M2Task m2;
          m2.target = section.get("target");
          m2.pos = decode_pos(section.get("pos"), kMetadataFile);
          m2.ori = decode_ori(section.get("ori"), kMetadataFile);
          rec.units.emplace_back(m2);
        } else {
          throw CorruptEpisode(std::string(kMetadataFile) + ": unknown unit type " + type);
        }
        auto ed = section.get_doubles("end");
        rec.unit_end_object.push_back(pose_from(ed, 0));
      } else if (section.name == "success") {
        std::string kind = section.get("kind");
        if (kind == "object") {
          ObjectDetector od;
          od.frame_id = section.get("frame");
          auto v = section.get_doubles("box");
          od.box = Box3{pose_from(v, 0), Vec3(v[7], v[8], v[9])};
          od.accepted = section.get_tokens("accepted");
          rec.success = od;
        } else if (kind == "joint") {
          JointDetector jd;
          jd.object = section.get("object");
          jd.joint = section.get("joint");
          auto v = section.get_doubles("window");
          jd.lo = v.at(0);
          jd.hi = v.at(1);
          rec.success = jd;
        } else {
          ParticleDetector pd;
          pd.threshold = section.get_double("threshold");
          rec.success = pd;
        }
      } else if (section.name == "particles") {
        ParticleSet ps;
        ps.kind = section.get("kind") == "pour" ? ParticleSet::Kind::Pour
                                                : ParticleSet::Kind::Wipe;
        ps.owner = section.get("owner");
        ps.other = section.get("other");
        auto pts = section.get_doubles("points");
        for (std::size_t i = 0; i + 2 < pts.size(); i += 3)
          ps.points.emplace_back(pts[i], pts[i + 1], pts[i + 2]);
        ps.state.assign(ps.points.size(), ParticleSet::Active);
        rec.particles = std::move(ps);
      }
    }

    TextDoc wdoc = TextDoc::parse(bytes[kWaypointFile]);
    if (wdoc.header.get("format") != "waypoints/1")
      throw CorruptEpisode(std::string(kWaypointFile) + ": unexpected format tag");
    for (const auto* section : wdoc.sections_named("waypoint")) {
      Waypoint wp;
      wp.unit_index = int(section->get_int("unit"));
      wp.label = section->get_or("label", "");
      wp.action = action_from(section->get("action"), kWaypointFile);
      auto v = section->get_doubles("target");
      wp.target = pose_from(v, 0);
      rec.waypoints.push_back(wp);
      rec.waypoint_times.push_back(section->get_double("time"));
    }
    if (rec.waypoints.size() != std::size_t(wdoc.header.get_int("count")))
      throw CorruptEpisode(std::string(kWaypointFile) + ": count mismatch");

    TextDoc sdoc = TextDoc::parse(bytes[kStepsTxtFile]);
    if (sdoc.header.get("format") != "steps/1")
      throw CorruptEpisode(std::string(kStepsTxtFile) + ": unexpected format tag");
    rec.object_ids = sdoc.header.get_tokens("objects");
    for (const auto& token : sdoc.header.has("joints") ? sdoc.header.get_tokens("joints")
                                                       : std::vector<std::string>{}) {
      auto colon = token.find(':');
      rec.joint_columns.emplace_back(token.substr(0, colon), token.substr(colon + 1));
    }

    std::size_t frames = std::size_t(meta.header.get_int("frames"));
    if (frames != std::size_t(sdoc.header.get_int("frames")))
      throw CorruptEpisode(std::string(kStepsTxtFile) + ": frame count disagrees with metadata");
    if (bytes[kStepsBinFile].size() != frames * frame_bytes(rec))
      throw CorruptEpisode(std::string(kStepsBinFile) + ": size mismatch");

    ByteReader r{bytes[kStepsBinFile], 0, kStepsBinFile};
    rec.steps.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k) {
      Frame f;
      f.t_ms = r.i64();
      for (int i = 0; i < 7; ++i) f.q[i] = r.f64();
      f.ee = r.pose();
      f.gripper = r.u8();
      f.waypoint = r.i32();
      f.object_poses.reserve(rec.object_ids.size());
      for (std::size_t i = 0; i < rec.object_ids.size(); ++i) f.object_poses.push_back(r.pose());
      f.joint_values.reserve(rec.joint_columns.size());
      for (std::size_t j = 0; j < rec.joint_columns.size(); ++j)
        f.joint_values.push_back(r.f64());
      rec.steps.push_back(std::move(f));
    }
  } catch (const CorruptEpisode&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptEpisode(std::string(kMetadataFile) + ": " + e.what());
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Stats.

bool DatasetStats::all_ok() const {
  for (const auto& row : rows)
    if (!row.ok()) return false;
  return true;
}

DatasetStats dataset_stats(const std::filesystem::path& root) {
  DatasetStats stats;
  double scale = 1.0;
  std::set<std::string> categories;
  std::filesystem::path manifest = root / "manifest.txt";
  if (std::filesystem::exists(manifest)) {
    TextDoc doc = TextDoc::parse_file(manifest.string());
    scale = std::stod(doc.header.get_or("scale", "1"));
    stats.discarded = doc.header.has("discarded") ? doc.header.get_int("discarded") : 0;
    if (doc.header.has("categories"))
      for (const auto& token : doc.header.get_tokens("categories")) categories.insert(token);
  }

  TaskMatrix matrix = TaskMatrix::bundled().scaled(scale);
  static const char* kSplits[] = {"train", "valid_seen", "valid_unseen", "test_seen",
                                  "test_unseen"};
  for (const char* split : kSplits) {
    for (const auto& cell : matrix.cells) {
      if (!categories.empty() && !categories.count(to_string(cell.category))) continue;
      DatasetStats::Row row;
      row.split = split;
      row.category = cell.category;
      row.variation = cell.variation;
      auto it = cell.counts.find(split);
      row.expected = it == cell.counts.end() ? 0 : it->second;
      std::filesystem::path cell_dir =
          root / split / task_folder(cell.category, cell.variation);
      if (std::filesystem::exists(cell_dir)) {
        for (const auto& value_dir : std::filesystem::directory_iterator(cell_dir)) {
          if (!value_dir.is_directory()) continue;
          for (const auto& ep : std::filesystem::directory_iterator(value_dir.path()))
            if (ep.is_directory() &&
                ep.path().filename().string().rfind("episode", 0) == 0)
              ++row.found;
        }
      }
      stats.total += row.found;
      stats.rows.push_back(std::move(row));
    }
  }
  return stats;
}

}  // namespace taskforge
