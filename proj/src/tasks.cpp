#include "taskforge/tasks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "taskforge/textdoc.hpp"

namespace taskforge {

namespace {

const double kSpillTilt = deg2rad(75.0);
const double kDemoTilt = deg2rad(110.0);
constexpr int kDrainPerStep = 5;
constexpr int kParticleCount = 50;

Quat yaw_quat(double yaw) { return quat_about(Vec3::UnitZ(), yaw); }

struct Extent2 {
  Vec2 lo{0, 0}, hi{0, 0};
  Vec2 center() const { return 0.5 * (lo + hi); }
  Vec2 half() const { return 0.5 * (hi - lo); }
};

Extent2 footprint_extent(const CatalogEntry& e, double scale) {
  Extent2 b{{1e30, 1e30}, {-1e30, -1e30}};
  for (const Vec2& v : e.shape.footprint(scale)) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

double circumradius(const CatalogEntry& e, double scale) {
  double r = 0;
  for (const Vec2& v : e.shape.footprint(scale)) r = std::max(r, v.norm());
  return r;
}

// ---- variation token vocabularies ------------------------------------------------

const std::vector<std::string> kRelTokens = {"front", "rear", "left", "right"};
const std::vector<std::string> kPairSizes = {"larger", "smaller"};
const std::vector<std::string> kTripleSizes = {"large", "medium", "small"};
const std::vector<std::string> kDirections = {"horizontal", "vertical"};
const std::vector<std::string> kLevels = {"top", "middle", "bottom"};
const std::vector<std::string> kActions = {"open", "close"};
const std::vector<std::string> kAmounts = {"fully", "slightly"};

std::string opposite(const std::string& rel) {
  if (rel == "front") return "rear";
  if (rel == "rear") return "front";
  if (rel == "left") return "right";
  return "left";
}

std::string opposite_size(const std::string& s) { return s == "larger" ? "smaller" : "larger"; }

std::vector<std::string> without(const std::vector<std::string>& options,
                                 const std::string& drop) {
  std::vector<std::string> out;
  for (const auto& o : options)
    if (o != drop) out.push_back(o);
  return out;
}

double scale_for(Rng& rng, const std::string& token) {
  if (token == "larger" || token == "large") return rng.uniform(1.15, 1.25);
  if (token == "smaller" || token == "small") return rng.uniform(0.78, 0.88);
  return 1.0;
}

// Model pools per category (Appendix-style seen/unseen collections).
std::vector<std::string> shape_pool(TaskCategory c, bool unseen) {
  switch (c) {
    case TaskCategory::PickPlace:
    case TaskCategory::Stack:
      return unseen ? std::vector<std::string>{"cube", "letter_t", "cross", "flower"}
                    : std::vector<std::string>{"star", "triangular", "cylinder", "cube", "moon"};
    case TaskCategory::ShapeSorter:
      return unseen ? std::vector<std::string>{"star", "triangular", "cylinder", "cube", "moon"}
                    : std::vector<std::string>{"star", "triangular", "cylinder", "cube"};
    case TaskCategory::Pour:
      return unseen ? std::vector<std::string>{"mug_e", "mug_f"}
                    : std::vector<std::string>{"mug_a", "mug_b", "mug_c", "mug_d"};
    case TaskCategory::Wipe:
      return unseen
                 ? std::vector<std::string>{"area_cross", "area_flower"}
                 : std::vector<std::string>{"area_rectangle", "area_round", "area_star",
                                            "area_triangle"};
    case TaskCategory::Drawer:
      return unseen ? std::vector<std::string>{"cabinet_c"}
                    : std::vector<std::string>{"cabinet_a", "cabinet_b"};
    case TaskCategory::Door:
      return unseen ? std::vector<std::string>{"door_b"} : std::vector<std::string>{"door_a"};
    default:  // Drop: fixed models
      return {};
  }
}

// The word the sorter instruction uses for a hole.
std::string hole_word(const std::string& class_name) {
  if (class_name == "triangular") return "triangle";
  if (class_name == "letter_t") return "letter t";
  return class_name;
}

template <typename T>
const T& pick_one(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
}

std::string draw_color(Rng& rng, const std::vector<std::string>& pool,
                       std::vector<std::string>* used = nullptr) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::string& c = pick_one(rng, pool);
    if (!used) return c;
    if (std::find(used->begin(), used->end(), c) == used->end()) {
      used->push_back(c);
      return c;
    }
  }
  for (const auto& c : pool)
    if (std::find(used->begin(), used->end(), c) == used->end()) {
      used->push_back(c);
      return c;
    }
  throw InvalidVariation("color pool exhausted");
}

// Uses a pre-set token when the caller pinned one, otherwise samples.
std::string token_or(VariationSpec& var, const std::string& key, Rng& rng,
                     const std::vector<std::string>& options) {
  auto it = var.tokens.find(key);
  if (it != var.tokens.end()) {
    if (std::find(options.begin(), options.end(), it->second) == options.end())
      throw UnknownToken("variation token " + key + "=" + it->second);
    return it->second;
  }
  const std::string& v = pick_one(rng, options);
  var.tokens[key] = v;
  return v;
}

// Placement predicate putting the candidate on the stated side of `anchor`
// ("anchor is <rel> of candidate" with a slack beyond the 2 cm margin).
std::function<bool(const Pose&)> rel_accept(const Vec3& anchor, const std::string& rel) {
  const double m = 0.03;
  return [anchor, rel, m](const Pose& p) {
    if (rel == "left") return p.position.y() >= anchor.y() + m;
    if (rel == "right") return p.position.y() <= anchor.y() - m;
    if (rel == "front") return p.position.x() >= anchor.x() + m;
    return p.position.x() <= anchor.x() - m;
  };
}

// Keeps the first-placed object of a relative pair away from the workspace
// edge its twin must occupy, so the twin placement rarely starves.
std::function<bool(const Pose&)> room_accept(const Scene& scene, const std::string& rel) {
  const Box3 r = scene.placement_region();
  const Vec3 c = r.center.position;
  const double room = 0.12;
  return [=](const Pose& p) {
    if (rel == "left") return p.position.y() <= c.y() + r.half.y() - room;
    if (rel == "right") return p.position.y() >= c.y() - r.half.y() + room;
    if (rel == "front") return p.position.x() <= c.x() + r.half.x() - room;
    return p.position.x() >= c.x() - r.half.x() + room;
  };
}

struct Builder {
  TaskInstance& t;
  Rng& rng;
  const CategoryTemplates& tmpl;

  const Catalog& cat() { return t.scene.catalog(); }
  std::vector<std::string> colors() { return cat().palette.names(t.variation.unseen); }

  void push_control(const std::string& id) {
    t.units.push_back(ControlTask{id, true});
    t.joint_moves.emplace_back();
  }
  void push_m1(const std::string& id, PositionConstraint pos, OrientationConstraint ori,
               GoalCondition goal) {
    t.units.push_back(M1Task{id, std::move(pos), std::move(ori)});
    t.joint_moves.emplace_back();
    t.goals.push_back(std::move(goal));
  }
  void push_m2(const std::string& id, PositionConstraint pos, OrientationConstraint ori,
               GoalCondition goal, std::optional<TaskInstance::JointMove> jm = std::nullopt) {
    t.units.push_back(M2Task{id, std::move(pos), std::move(ori)});
    t.joint_moves.push_back(std::move(jm));
    t.goals.push_back(std::move(goal));
  }

  std::string describe_role(const std::string& role, const SlotMap& attrs) {
    return describe(tmpl, t.variation.kind, role, attrs);
  }
};

// Detector box of a container-style object in its own metric (scaled) frame.
Box3 local_detector(const Scene& scene, const SceneObject& obj) {
  const auto& det = scene.entry_of(obj).detector;
  if (!det) throw InvalidVariation(obj.class_name + " has no detector box");
  return Box3{Pose(det->center.position * obj.scale, det->center.orientation),
              det->half * obj.scale};
}

Box3 world_detector(const Scene& scene, const SceneObject& obj) {
  const Box3 local = local_detector(scene, obj);
  return Box3{compose(obj.pose, local.center), local.half};
}

// Goal generator for dropping an object anywhere inside a container: keeps the
// object's footprint clear of the walls and releases it in the upper band of
// the detector so the fingers stay above the floor.
FunctionalGoal container_goal(const Box3& det_world, double object_radius) {
  const double mx = std::max(det_world.half.x() - object_radius - 0.008, 0.0);
  const double my = std::max(det_world.half.y() - object_radius - 0.008, 0.0);
  const double z0 = 0.4 * det_world.half.z();
  const double z1 = det_world.half.z() - 0.002;
  const Pose frame = det_world.center;
  return FunctionalGoal{
      "inside_container", [=](Rng& r) {
        const Vec3 local(r.uniform(-mx, mx), r.uniform(-my, my), r.uniform(z0, z1));
        return Pose(frame.transform(local), yaw_quat(r.uniform(0.0, 2 * kPi)));
      }};
}

// ---- category builders ---------------------------------------------------------

// Shared by pick (shape objects into open containers) and drop (pencils into
// baskets): two target roles, each possibly disambiguated against a twin.
void build_pick_like(Builder& b, bool drop) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;
  const std::string kind = var.kind;

  const std::string obj_role = drop ? "pencil" : "object";
  const std::string obj_slot = drop ? "target pencil description" : "target object description";
  const std::string cont_class = drop ? "basket" : "container";

  std::vector<std::string> used_colors;
  const auto palette = b.colors();

  // Object classes.
  std::vector<std::string> obj_classes;
  if (drop) {
    obj_classes = {"pencil"};
  } else if (kind == "shape") {
    auto pool = shape_pool(TaskCategory::PickPlace, var.unseen);
    const int n = static_cast<int>(
        rng.uniform_int(2, static_cast<std::int64_t>(pool.size())));
    for (int i = 0; i < n; ++i) {
      const auto it = pool.begin() + rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
      obj_classes.push_back(*it);
      pool.erase(it);
    }
  } else {
    obj_classes = {pick_one(rng, shape_pool(TaskCategory::PickPlace, var.unseen))};
  }
  const std::string target_class = obj_classes.front();

  // Tokens and scales.
  std::string obj_token, cont_token;
  double obj_scale = 1.0, twin_scale = 1.0, cont_scale = 1.0, cont_twin_scale = 1.0;
  if (kind == "color") {
    obj_token = token_or(var, "color", rng, palette);
    used_colors.push_back(obj_token);
    cont_token = token_or(var, "container color", rng, palette);
  } else if (kind == "size") {
    obj_token = token_or(var, "size", rng, kPairSizes);
    cont_token = token_or(var, "container size", rng, kPairSizes);
    obj_scale = scale_for(rng, obj_token);
    twin_scale = scale_for(rng, opposite_size(obj_token));
    cont_scale = scale_for(rng, cont_token);
    cont_twin_scale = scale_for(rng, opposite_size(cont_token));
  } else if (kind == "relative") {
    obj_token = token_or(var, "relation", rng, kRelTokens);
    cont_token = token_or(var, "container relation", rng, kRelTokens);
  } else {  // shape
    var.tokens["shape"] = target_class;
    cont_token = token_or(var, "container color", rng, palette);
  }

  // Colors not fixed by the variation are free draws.
  auto free_color = [&] { return draw_color(rng, palette); };
  std::string obj_color = kind == "color" ? obj_token : free_color();
  std::string cont_color = (kind == "color" || kind == "shape")
                               ? cont_token
                               : free_color();

  // Spawn objects: the target first, then its disambiguating company.
  auto& target =
      t.scene.spawn(rng, drop ? "pencil0" : "obj0", target_class, obj_color, obj_scale,
                    std::nullopt,
                    kind == "relative" ? room_accept(t.scene, obj_token)
                                       : std::function<bool(const Pose&)>());
  if (kind == "shape") {
    for (std::size_t i = 1; i < obj_classes.size(); ++i)
      t.scene.spawn(rng, "obj" + std::to_string(i), obj_classes[i], free_color());
  } else {
    std::string twin_color = obj_color;
    if (kind == "color") twin_color = draw_color(rng, palette, &used_colors);
    const char* twin_id = drop ? "pencil1" : "obj1";
    if (kind == "relative")
      t.scene.spawn(rng, twin_id, target_class, twin_color, twin_scale, std::nullopt,
                    rel_accept(target.pose.position, obj_token));
    else
      t.scene.spawn(rng, twin_id, target_class, twin_color, twin_scale);
  }

  // Containers: target first, distractor second.
  std::vector<std::string> used_cont_colors{cont_color};
  auto& cont = t.scene.spawn(rng, "cont0", cont_class, cont_color, cont_scale, std::nullopt,
                             kind == "relative" ? room_accept(t.scene, cont_token)
                                                : std::function<bool(const Pose&)>());
  cont.fixture = true;
  {
    std::string c2 = (kind == "color" || kind == "shape")
                         ? draw_color(rng, palette, &used_cont_colors)
                         : free_color();
    auto& d = t.scene.spawn(rng, "cont1", cont_class, c2, cont_twin_scale, std::nullopt,
                            kind == "relative"
                                ? rel_accept(cont.pose.position, cont_token)
                                : std::function<bool(const Pose&)>());
    d.fixture = true;
  }

  // Instruction slots.
  SlotMap obj_attrs, cont_attrs;
  if (kind == "color") {
    obj_attrs["color"] = obj_token;
    cont_attrs["color"] = cont_token;
  } else if (kind == "size") {
    obj_attrs["size"] = obj_token;
    cont_attrs["size"] = cont_token;
  } else if (kind == "relative") {
    obj_attrs["relation"] = obj_token;
    cont_attrs["relation"] = cont_token;
  } else {
    obj_attrs["shape"] = t.scene.entry_of(target).display;
    cont_attrs["color"] = cont_token;
  }
  t.slots[obj_slot] = b.describe_role(obj_role, obj_attrs);
  t.slots["target container description"] = b.describe_role("container", cont_attrs);

  // Units, goal, success.
  t.target = target.id;
  b.push_control(target.id);
  const Box3 det = world_detector(t.scene, cont);
  if (drop) {
    const auto& pencil_entry = t.scene.entry_of(target);
    const double half_len = 0.5 *
                            (pencil_entry.shape.top_z() - pencil_entry.shape.bottom_z()) *
                            target.scale;
    const double rim_z = cont.pose.position.z() +
                         t.scene.entry_of(cont).shape.top_z() * cont.scale;
    const Vec3 base(det.center.position.x(), det.center.position.y(),
                    rim_z + half_len + 0.01);
    LineSegment seg{base, base + Vec3(0, 0, 0.05)};
    b.push_m1(target.id, LinePos{seg}, AxisOri{Vec3::UnitZ(), Quat::Identity()},
              LineGoal{seg, AxisOri{Vec3::UnitZ(), Quat::Identity()}});
  } else {
    b.push_m1(target.id, FreePos{det}, FreeOri{},
              container_goal(det, circumradius(t.scene.entry_of(target), target.scale)));
  }
  t.success = ObjectDetector{cont.id, local_detector(t.scene, cont), {target.id}};
  var.value = kind == "shape" ? target_class : obj_token;
}

void build_stack(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;
  const std::string kind = var.kind;
  const auto palette = b.colors();
  auto pool = shape_pool(TaskCategory::Stack, var.unseen);

  std::vector<std::string> used_colors;
  std::string below_class, above_class;
  std::string below_tok, above_tok;
  double below_scale = 1.0, above_scale = 1.0;
  SlotMap below_attrs, above_attrs;

  auto spawn_obj = [&](const std::string& id, const std::string& cls, const std::string& color,
                       double s, const std::function<bool(const Pose&)>& accept = nullptr)
      -> SceneObject& { return t.scene.spawn(rng, id, cls, color, s, std::nullopt, accept); };

  if (kind == "color") {
    below_class = above_class = pick_one(rng, pool);
    below_tok = token_or(var, "below color", rng, palette);
    used_colors.push_back(below_tok);
    above_tok = token_or(var, "above color", rng, without(palette, below_tok));
    used_colors.push_back(above_tok);
    spawn_obj("obj0", below_class, below_tok, 1.0);
    spawn_obj("obj1", above_class, above_tok, 1.0);
    for (int i = 2; i < 4; ++i)
      spawn_obj("obj" + std::to_string(i), below_class, draw_color(rng, palette, &used_colors),
                1.0);
    const std::string& shape = t.scene.catalog().get(below_class).display;
    below_attrs = {{"color", below_tok}, {"shape", shape}};
    above_attrs = {{"color", above_tok}, {"shape", shape}};
  } else if (kind == "size") {
    below_class = above_class = pick_one(rng, pool);
    below_tok = token_or(var, "below size", rng, kTripleSizes);
    above_tok = token_or(var, "above size", rng, without(kTripleSizes, below_tok));
    below_scale = scale_for(rng, below_tok);
    above_scale = scale_for(rng, above_tok);
    std::string rest;
    for (const auto& s : kTripleSizes)
      if (s != below_tok && s != above_tok) rest = s;
    const std::string color = draw_color(rng, palette);
    spawn_obj("obj0", below_class, color, below_scale);
    spawn_obj("obj1", above_class, color, above_scale);
    spawn_obj("obj2", below_class, color, scale_for(rng, rest));
    const std::string& shape = t.scene.catalog().get(below_class).display;
    below_attrs = {{"size", below_tok}, {"shape", shape}};
    above_attrs = {{"size", above_tok}, {"shape", shape}};
  } else if (kind == "relative") {
    below_class = pick_one(rng, pool);
    do above_class = pick_one(rng, pool);
    while (above_class == below_class);
    below_tok = token_or(var, "below relation", rng, kRelTokens);
    above_tok = token_or(var, "above relation", rng, kRelTokens);
    auto& below = spawn_obj("obj0", below_class, draw_color(rng, palette), 1.0,
                            room_accept(t.scene, below_tok));
    spawn_obj("obj2", below_class, draw_color(rng, palette), 1.0,
              rel_accept(below.pose.position, below_tok));
    auto& above = spawn_obj("obj1", above_class, draw_color(rng, palette), 1.0,
                            room_accept(t.scene, above_tok));
    spawn_obj("obj3", above_class, draw_color(rng, palette), 1.0,
              rel_accept(above.pose.position, above_tok));
    below_attrs = {{"relation", below_tok},
                   {"shape", t.scene.catalog().get(below_class).display}};
    above_attrs = {{"relation", above_tok},
                   {"shape", t.scene.catalog().get(above_class).display}};
  } else {  // shape
    const int n = static_cast<int>(rng.uniform_int(2, static_cast<std::int64_t>(pool.size())));
    std::vector<std::string> classes;
    for (int i = 0; i < n; ++i) {
      const auto it = pool.begin() + rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
      classes.push_back(*it);
      pool.erase(it);
    }
    below_class = classes[0];
    above_class = classes[1];
    var.tokens["below shape"] = below_class;
    var.tokens["above shape"] = above_class;
    for (int i = 0; i < n; ++i)
      spawn_obj("obj" + std::to_string(i), classes[static_cast<std::size_t>(i)],
                draw_color(rng, palette), 1.0);
    below_attrs = {{"shape", t.scene.catalog().get(below_class).display}};
    above_attrs = {{"shape", t.scene.catalog().get(above_class).display}};
  }

  const auto& below = t.scene.object("obj0");
  const auto& above = t.scene.object("obj1");
  t.slots["below object description"] = b.describe_role("below", below_attrs);
  t.slots["above object description"] = b.describe_role("above", above_attrs);
  t.target = above.id;

  const auto& below_entry = t.scene.entry_of(below);
  const auto& above_entry = t.scene.entry_of(above);
  const Extent2 bfp = footprint_extent(below_entry, below.scale);
  const double r_above = circumradius(above_entry, above.scale);
  const double rest_offset = -above_entry.shape.bottom_z() * above.scale;
  const double top_z = below.pose.position.z() + below_entry.shape.top_z() * below.scale;

  const Vec3 center_local(bfp.center().x(), bfp.center().y(), 0);
  const Vec3 plane_center =
      Vec3(below.pose.transform(center_local).x(), below.pose.transform(center_local).y(),
           top_z + rest_offset + 0.006);
  const double slack = std::max(std::min(bfp.half().x(), bfp.half().y()) - r_above, 1e-4);
  PlaneRegion plane{Pose(plane_center, Quat::Identity()), Vec2(slack, slack)};
  AxisOri upright{Vec3::UnitZ(), Quat::Identity()};

  b.push_control(above.id);
  b.push_m1(above.id, PlanePos{plane}, upright, PlaneGoal{plane, upright});

  const double m = std::max(circumradius(below_entry, below.scale), 0.02) + 0.01;
  t.success = ObjectDetector{
      below.id,
      Box3{Pose(Vec3(bfp.center().x(), bfp.center().y(),
                     below_entry.shape.top_z() * below.scale + 0.045),
                Quat::Identity()),
           Vec3(m, m, 0.055)},
      {above.id}};
  var.value = kind == "shape" ? above_class : above_tok;
}

void build_sorter(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;
  const std::string kind = var.kind;
  const auto palette = b.colors();
  auto pool = shape_pool(TaskCategory::ShapeSorter, var.unseen);

  auto& sorter = t.scene.spawn(rng, "sorter", "sorter", draw_color(rng, palette));
  sorter.fixture = true;

  std::vector<std::string> used_colors;
  std::string target_class, token;
  SlotMap obj_attrs;

  if (kind == "color") {
    target_class = pick_one(rng, pool);
    token = token_or(var, "color", rng, palette);
    used_colors.push_back(token);
    t.scene.spawn(rng, "obj0", target_class, token);
    for (int i = 1; i < 3; ++i)
      t.scene.spawn(rng, "obj" + std::to_string(i), target_class,
                    draw_color(rng, palette, &used_colors));
    obj_attrs = {{"color", token},
                 {"shape", t.scene.catalog().get(target_class).display}};
  } else if (kind == "relative") {
    target_class = pick_one(rng, pool);
    token = token_or(var, "relation", rng, kRelTokens);
    auto& target = t.scene.spawn(rng, "obj0", target_class, draw_color(rng, palette), 1.0,
                                 std::nullopt, room_accept(t.scene, token));
    t.scene.spawn(rng, "obj1", target_class, draw_color(rng, palette), 1.0, std::nullopt,
                  rel_accept(target.pose.position, token));
    obj_attrs = {{"relation", token},
                 {"shape", t.scene.catalog().get(target_class).display}};
  } else {  // shape
    const int n = static_cast<int>(rng.uniform_int(2, static_cast<std::int64_t>(pool.size())));
    std::vector<std::string> classes;
    for (int i = 0; i < n; ++i) {
      const auto it = pool.begin() + rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
      classes.push_back(*it);
      pool.erase(it);
    }
    target_class = classes[0];
    var.tokens["shape"] = target_class;
    for (int i = 0; i < n; ++i)
      t.scene.spawn(rng, "obj" + std::to_string(i), classes[static_cast<std::size_t>(i)],
                    draw_color(rng, palette));
    obj_attrs = {{"shape", t.scene.catalog().get(target_class).display}};
  }

  const auto& target = t.scene.object("obj0");
  SlotMap hole_attrs{{"shape", hole_word(target_class)}};
  t.slots["target object description"] = b.describe_role("object", obj_attrs);
  t.slots["target hole description"] = b.describe_role("hole", hole_attrs);
  t.target = target.id;

  const auto& slots = t.scene.entry_of(sorter).slots;
  const auto slot_it = slots.find(target_class);
  if (slot_it == slots.end()) throw InvalidVariation("sorter has no hole for " + target_class);
  const Pose slot_world = compose(sorter.pose, slot_it->second);

  b.push_control(target.id);
  b.push_m1(target.id, FixedPos{slot_world.position}, FixedOri{slot_world.orientation},
            FixedPoseGoal{slot_world});

  t.success = ObjectDetector{sorter.id, local_detector(t.scene, sorter), {target.id}};
  var.value = kind == "shape" ? target_class : token;
}

void build_pour(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;
  const std::string kind = var.kind;
  const auto palette = b.colors();
  const std::string mug_class = pick_one(rng, shape_pool(TaskCategory::Pour, var.unseen));

  std::vector<std::string> used_colors;
  std::string src_tok, dst_tok;
  double src_scale = 1.0, dst_scale = 1.0;
  SlotMap src_attrs, dst_attrs;

  if (kind == "color") {
    src_tok = token_or(var, "color", rng, palette);
    used_colors.push_back(src_tok);
    dst_tok = token_or(var, "container color", rng, without(palette, src_tok));
    used_colors.push_back(dst_tok);
    src_attrs = {{"color", src_tok}};
    dst_attrs = {{"color", dst_tok}};
  } else if (kind == "size") {
    src_tok = token_or(var, "size", rng, kPairSizes);
    dst_tok = opposite_size(src_tok);
    src_scale = scale_for(rng, src_tok);
    dst_scale = scale_for(rng, dst_tok);
    src_attrs = {{"size", src_tok}};
    dst_attrs = {{"size", dst_tok}};
  } else {  // relative: tokens describe the two mugs against each other
    src_tok = token_or(var, "relation", rng, kRelTokens);
    dst_tok = opposite(src_tok);
    src_attrs = {{"relation", src_tok}};
    dst_attrs = {{"relation", dst_tok}};
  }

  const std::string src_color = kind == "color" ? src_tok : draw_color(rng, palette);
  const std::string dst_color = kind == "color" ? dst_tok : src_color;
  auto& source = t.scene.spawn(rng, "mug0", mug_class, src_color, src_scale, std::nullopt,
                               kind == "relative" ? room_accept(t.scene, src_tok)
                                                  : std::function<bool(const Pose&)>());
  t.scene.spawn(rng, "mug1", mug_class, dst_color, dst_scale, std::nullopt,
                kind == "relative" ? rel_accept(source.pose.position, src_tok)
                                   : std::function<bool(const Pose&)>());
  if (kind == "color")
    t.scene.spawn(rng, "mug2", mug_class, draw_color(rng, palette, &used_colors));

  const auto& container = t.scene.object("mug1");
  t.slots["source mug description"] = b.describe_role("source", src_attrs);
  t.slots["container mug description"] = b.describe_role("container", dst_attrs);
  t.slots["relative position"] = "top";
  t.target = source.id;

  const auto& src_entry = t.scene.entry_of(source);
  const auto& dst_entry = t.scene.entry_of(container);
  const double dst_h =
      (dst_entry.shape.top_z() - dst_entry.shape.bottom_z()) * container.scale;
  const double dst_rim_z =
      container.pose.position.z() + dst_entry.shape.top_z() * container.scale;
  const double r_src = src_entry.opening_radius * source.scale;
  const double r_dst = dst_entry.opening_radius * container.scale;

  // Carry goal: biased so the spout line ends up over the container opening;
  // a subset of the paper's mug-to-mug band (centers within the source
  // half-height horizontally, a container height above the rim).
  const Vec2 dst_xy(container.pose.position.x(), container.pose.position.y());
  const Vec2 start_xy(source.pose.position.x(), source.pose.position.y());
  Vec2 dir = dst_xy - start_xy;
  dir = dir.norm() < 1e-9 ? Vec2(1, 0) : Vec2(dir / dir.norm());
  const double z_lo = dst_rim_z + dst_h + 0.01;
  const double z_hi = z_lo + 0.04;
  const Quat carry_ori = source.pose.orientation;
  FunctionalGoal carry{"pour_carry", [=](Rng& r) {
                         const double jr = r.uniform(0.0, 0.25 * r_dst);
                         const double ja = r.uniform(0.0, 2 * kPi);
                         const Vec2 xy = dst_xy - r_src * dir +
                                         jr * Vec2(std::cos(ja), std::sin(ja));
                         return Pose(Vec3(xy.x(), xy.y(), r.uniform(z_lo, z_hi)), carry_ori);
                       }};

  Box3 carry_box{Pose(Vec3(0.46, 0.0, t.scene.table_z() + 0.25), Quat::Identity()),
                 Vec3(0.30, 0.45, 0.25)};

  b.push_control(source.id);
  b.push_m2(source.id, FreePos{carry_box}, AxisOri{Vec3::UnitZ(), carry_ori},
            std::move(carry));
  // The tilt leg depends on where the carry actually ended; finalize_pour_tilt
  // fills the path and end-pose goal before execution.
  b.push_m2(source.id, TrajPos{}, PathOri{}, FixedPoseGoal{});

  ParticleSet water;
  water.kind = ParticleSet::Kind::Pour;
  water.owner = source.id;
  water.other = container.id;
  const double bottom = src_entry.shape.bottom_z() * source.scale;
  const double fill = (src_entry.shape.top_z() - src_entry.shape.bottom_z()) * source.scale;
  for (int i = 0; i < kParticleCount; ++i) {
    const double rr = 0.75 * r_src * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2 * kPi);
    water.points.emplace_back(rr * std::cos(a), rr * std::sin(a),
                              bottom + 0.008 + 0.45 * fill * rng.uniform());
  }
  water.state.assign(kParticleCount, ParticleSet::Active);
  t.particles = std::move(water);
  t.success = ParticleDetector{0.5};
  var.value = kind == "color" ? src_tok : src_tok;
}

void build_wipe(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;
  const std::string kind = var.kind;
  const auto palette = b.colors();
  auto pool = shape_pool(TaskCategory::Wipe, var.unseen);
  // Pointier areas lose too much of their face outside the swept lane once
  // magnified, so size cells stick to the compact shapes.
  if (kind == "size" && !var.unseen) pool = {"area_rectangle", "area_round"};

  std::string token, area_class;
  double area_scale = 1.0, twin_scale = 1.0;
  SlotMap attrs;
  std::vector<std::string> used_colors;
  std::string color = draw_color(rng, palette);
  std::pair<double, double> target_yaw{0.0, 2 * kPi}, twin_yaw{0.0, 2 * kPi};

  if (kind == "color") {
    area_class = pick_one(rng, pool);
    token = token_or(var, "color", rng, palette);
    color = token;
    used_colors.push_back(token);
    attrs = {{"color", token}};
  } else if (kind == "size") {
    area_class = pick_one(rng, pool);
    token = token_or(var, "size", rng, kPairSizes);
    area_scale = scale_for(rng, token);
    twin_scale = scale_for(rng, opposite_size(token));
    attrs = {{"size", token}};
  } else if (kind == "relative") {
    area_class = pick_one(rng, pool);
    token = token_or(var, "relation", rng, kRelTokens);
    attrs = {{"relation", token}};
  } else if (kind == "direction") {
    area_class = "area_rectangle";
    token = token_or(var, "direction", rng, kDirections);
    // Horizontal runs along the table width (world y), vertical along depth.
    const double yaw = token == "horizontal" ? kPi / 2 : 0.0;
    target_yaw = {yaw, yaw};
    twin_yaw = {kPi / 2 - yaw, kPi / 2 - yaw};
    attrs = {{"direction", token}};
  } else {  // shape
    const int n = static_cast<int>(rng.uniform_int(2, static_cast<std::int64_t>(pool.size())));
    std::vector<std::string> classes;
    for (int i = 0; i < n; ++i) {
      const auto it = pool.begin() + rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
      classes.push_back(*it);
      pool.erase(it);
    }
    area_class = classes[0];
    var.tokens["shape"] = area_class;
    attrs = {{"shape", t.scene.catalog().get(area_class).display}};
    auto& target = t.scene.spawn(rng, "area0", area_class, color);
    target.fixture = true;
    for (int i = 1; i < n; ++i) {
      auto& a = t.scene.spawn(rng, "area" + std::to_string(i),
                              classes[static_cast<std::size_t>(i)], color);
      a.fixture = true;
    }
  }

  if (kind != "shape") {
    auto& target =
        t.scene.spawn(rng, "area0", area_class, color, area_scale, std::nullopt,
                      kind == "relative" ? room_accept(t.scene, token)
                                         : std::function<bool(const Pose&)>(),
                      target_yaw);
    target.fixture = true;
    std::string twin_color = kind == "color" ? draw_color(rng, palette, &used_colors) : color;
    auto& twin = t.scene.spawn(rng, "area1", area_class, twin_color, twin_scale, std::nullopt,
                               kind == "relative"
                                   ? rel_accept(target.pose.position, token)
                                   : std::function<bool(const Pose&)>(),
                               twin_yaw);
    twin.fixture = true;
  }

  auto& area = t.scene.object("area0");
  auto& sponge = t.scene.spawn(rng, "sponge", "sponge", draw_color(rng, palette));

  t.slots["target area description"] = b.describe_role("area", attrs);
  t.target = sponge.id;

  // Stroke along the area's long axis through its centroid, the sponge's long
  // side across the stroke so the swept lane is as wide as possible.
  const auto& area_entry = t.scene.entry_of(area);
  const Extent2 fp = footprint_extent(area_entry, area.scale);
  const bool long_x = fp.half().x() >= fp.half().y();
  const Vec2 axis_local = long_x ? Vec2(1, 0) : Vec2(0, 1);
  const double long_half = long_x ? fp.half().x() : fp.half().y();
  const Vec3 u3 = area.pose.rotate(Vec3(axis_local.x(), axis_local.y(), 0));
  const Vec2 u(u3.x(), u3.y());

  // Footprint centroid in world.
  Vec2 centroid(0, 0);
  {
    const auto poly = area_entry.shape.footprint(area.scale);
    double acc = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      const double c = p.x() * q.y() - q.x() * p.y();
      acc += c;
      centroid += c * (p + q);
    }
    centroid /= 3.0 * acc;
    const Vec3 w = area.pose.transform(Vec3(centroid.x(), centroid.y(), 0));
    centroid = Vec2(w.x(), w.y());
  }

  const auto& sponge_entry = t.scene.entry_of(sponge);
  const double sponge_half_z = -sponge_entry.shape.bottom_z() * sponge.scale;
  const double area_top = area.pose.position.z() + area_entry.shape.top_z() * area.scale;
  const double z = area_top + sponge_half_z + 0.002;
  const double reach = std::max(long_half - 0.03, 0.02);
  const Vec3 start(centroid.x() - reach * u.x(), centroid.y() - reach * u.y(), z);
  const Vec3 end(centroid.x() + reach * u.x(), centroid.y() + reach * u.y(), z);
  // Sponge local y runs along the stroke: R(yaw)·ŷ = u.
  const Quat stroke_ori = yaw_quat(std::atan2(-u.x(), u.y()));

  b.push_control(sponge.id);
  b.push_m1(sponge.id, FixedPos{start}, AxisOri{Vec3::UnitZ(), stroke_ori},
            FixedPoseGoal{Pose(start, stroke_ori)});
  b.push_m2(sponge.id, LinePos{LineSegment{start, end}}, AxisOri{Vec3::UnitZ(), stroke_ori},
            FixedPoseGoal{Pose(end, stroke_ori)});

  // Dust particles on the target face.
  ParticleSet dust;
  dust.kind = ParticleSet::Kind::Wipe;
  dust.owner = area.id;
  dust.other = sponge.id;
  const auto poly = area_entry.shape.footprint(area.scale);
  auto inside = [&poly](const Vec2& p) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      if ((poly[i].y() > p.y()) != (poly[j].y() > p.y()) &&
          p.x() < (poly[j].x() - poly[i].x()) * (p.y() - poly[i].y()) /
                          (poly[j].y() - poly[i].y()) +
                      poly[i].x())
        in = !in;
    }
    return in;
  };
  while (static_cast<int>(dust.points.size()) < kParticleCount) {
    const Vec2 p(rng.uniform(fp.lo.x(), fp.hi.x()), rng.uniform(fp.lo.y(), fp.hi.y()));
    if (!inside(p)) continue;
    const Vec3 w = area.pose.transform(Vec3(p.x(), p.y(), 0));
    dust.points.emplace_back(w.x(), w.y(), area_top);
  }
  dust.state.assign(kParticleCount, ParticleSet::Active);
  t.particles = std::move(dust);
  t.success = ParticleDetector{0.5};
  var.value = kind == "shape" ? t.scene.entry_of(area).display : token;
}

void build_drawer(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;

  const std::string level = token_or(var, "level", rng, kLevels);
  const std::string action = token_or(var, "action", rng, kActions);
  const std::string amount = token_or(var, "amount", rng, kAmounts);
  const std::string cabinet_class = pick_one(rng, shape_pool(TaskCategory::Drawer, var.unseen));

  // The drawer face must point at the robot and the body fit the workspace.
  auto& cab = t.scene.spawn(rng, "cabinet", cabinet_class, draw_color(rng, b.colors()), 1.0,
                            std::nullopt, nullptr, {kPi - 0.05, kPi + 0.05});
  cab.fixture = true;

  const auto& part = t.scene.part_of(cab, "drawer_" + level);
  const auto& joint = *part.joint;
  double v0 = 0.0;
  if (action == "close") {
    v0 = joint.lo + rng.uniform(0.85, 1.0) * (joint.hi - joint.lo);
    t.scene.set_joint(cab.id, joint.id, v0);
  }

  const auto window = amount_target(TaskCategory::Drawer, action, amount);
  const double range = joint.hi - joint.lo;
  const double wlo = joint.lo + window.first * range;
  const double whi = joint.lo + window.second * range;
  const double v1 = rng.uniform(wlo + 0.05 * (whi - wlo), whi - 0.05 * (whi - wlo));

  const Pose p0 = t.scene.part_world(cab, part);
  t.scene.set_joint(cab.id, joint.id, v1);
  const Pose p1 = t.scene.part_world(cab, part);
  t.scene.set_joint(cab.id, joint.id, v0);

  t.slots["level"] = level;
  t.slots["action type"] = action;
  t.slots["amount"] = amount;
  t.slots["target drawer description"] = b.describe_role("drawer", {{"level", level}});
  t.target = cab.id;
  t.target_part = part.id;

  b.push_control(cab.id);
  b.push_m2(cab.id, LinePos{LineSegment{p0.position, p1.position}},
            FixedOri{p0.orientation}, JointGoal{cab.id, joint.id, wlo, whi},
            TaskInstance::JointMove{cab.id, joint.id, v0, v1});
  t.success = JointDetector{cab.id, joint.id, wlo, whi};
  var.value = amount + "_" + action + "_" + level;
}

void build_door(Builder& b) {
  TaskInstance& t = b.t;
  Rng& rng = b.rng;
  auto& var = t.variation;

  const std::string action = token_or(var, "action", rng, kActions);
  const std::string amount = token_or(var, "amount", rng, kAmounts);
  const std::string door_class = pick_one(rng, shape_pool(TaskCategory::Door, var.unseen));

  // Handle side toward the robot; the plank swings away.
  auto& door = t.scene.spawn(rng, "door", door_class, draw_color(rng, b.colors()), 1.0,
                             std::nullopt, nullptr, {-kPi / 2 - 0.05, -kPi / 2 + 0.05});
  door.fixture = true;

  const auto& handle = t.scene.part_of(door, "handle");
  const auto& latch = *handle.joint;
  const auto& plank = t.scene.part_of(door, "plank");
  const auto& swing = *plank.joint;

  double swing0 = 0.0;
  if (action == "close") {
    swing0 = swing.lo + rng.uniform(0.85, 1.0) * (swing.hi - swing.lo);
    t.scene.set_joint(door.id, swing.id, swing0);
  }

  const auto window = amount_target(TaskCategory::Door, action, amount);
  const double range = swing.hi - swing.lo;
  const double wlo = swing.lo + window.first * range;
  const double whi = swing.lo + window.second * range;
  const double swing1 = rng.uniform(wlo + 0.05 * (whi - wlo), whi - 0.05 * (whi - wlo));

  t.slots["action type"] = action;
  t.slots["amount"] = amount;
  t.target = door.id;
  t.target_part = handle.id;

  b.push_control(door.id);

  double latch_held = latch.lo;
  if (action == "open") {
    // Turn the handle until the latch clears the lock window.
    t.unlock_fraction = 0.8;
    const double unlock = latch.lo + 0.8 * (latch.hi - latch.lo);
    const double latch1 = rng.uniform(unlock + 0.05 * (latch.hi - unlock),
                                      latch.hi - 0.05 * (latch.hi - unlock));
    latch_held = latch1;
    const Pose h0 = t.scene.part_world(door, handle);
    const Pose joint_origin = compose(t.scene.part_world(door, plank), latch.origin);
    b.push_m2(door.id, FixedPos{h0.position},
              AxisOri{joint_origin.rotate(latch.axis), h0.orientation},
              JointGoal{door.id, latch.id, unlock, latch.hi},
              TaskInstance::JointMove{door.id, latch.id, latch.lo, latch1});
  }

  // Swing arc of the held handle, latch kept at its final turn.
  const double lv = t.scene.joint_value(door.id, latch.id);
  t.scene.set_joint(door.id, latch.id, latch_held);
  std::vector<Pose> arc;
  const int steps = std::max(8, static_cast<int>(std::ceil(std::abs(swing1 - swing0) / 0.05)));
  for (int k = 0; k <= steps; ++k) {
    const double v = swing0 + (swing1 - swing0) * k / steps;
    t.scene.set_joint(door.id, swing.id, v);
    arc.push_back(t.scene.part_world(door, handle));
  }
  t.scene.set_joint(door.id, swing.id, swing0);
  t.scene.set_joint(door.id, latch.id, lv);

  PathOri ori;
  for (const Pose& p : arc) ori.knots.emplace_back(p.position, p.orientation);
  b.push_m2(door.id, TrajPos{arc}, ori, JointGoal{door.id, swing.id, wlo, whi},
            TaskInstance::JointMove{door.id, swing.id, swing0, swing1});

  t.success = JointDetector{door.id, swing.id, wlo, whi};
  var.value = amount + "_" + action;
}

}  // namespace

// ---- public surface ---------------------------------------------------------------

std::string to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::PickPlace: return "pick";
    case TaskCategory::Stack: return "stack";
    case TaskCategory::Drop: return "drop";
    case TaskCategory::ShapeSorter: return "sorter";
    case TaskCategory::Pour: return "pour";
    case TaskCategory::Wipe: return "wipe";
    case TaskCategory::Drawer: return "drawer";
    case TaskCategory::Door: return "door";
  }
  throw std::logic_error("bad category");
}

TaskCategory category_from(const std::string& name) {
  for (TaskCategory c : all_categories())
    if (to_string(c) == name) return c;
  throw InvalidVariation("unknown task category " + name);
}

const std::vector<TaskCategory>& all_categories() {
  static const std::vector<TaskCategory> cats = {
      TaskCategory::PickPlace, TaskCategory::Stack,  TaskCategory::Drop,
      TaskCategory::ShapeSorter, TaskCategory::Pour, TaskCategory::Wipe,
      TaskCategory::Drawer,    TaskCategory::Door};
  return cats;
}

const std::vector<std::string>& variations_of(TaskCategory c) {
  static const std::vector<std::string> four = {"color", "relative", "shape", "size"};
  static const std::vector<std::string> drop = {"color", "relative", "size"};
  static const std::vector<std::string> sorter = {"color", "relative", "shape"};
  static const std::vector<std::string> wipe = {"color", "relative", "shape", "size",
                                                "direction"};
  static const std::vector<std::string> action = {"action"};
  switch (c) {
    case TaskCategory::PickPlace:
    case TaskCategory::Stack: return four;
    case TaskCategory::Drop:
    case TaskCategory::Pour: return drop;
    case TaskCategory::ShapeSorter: return sorter;
    case TaskCategory::Wipe: return wipe;
    default: return action;
  }
}

Vec3 geometric_center(const Scene& scene, const SceneObject& obj) {
  Vec3 lo(1e30, 1e30, 1e30), hi = -lo;
  for (const Convex& piece : scene.object_pieces(obj)) {
    const auto b = piece.bounds();
    lo = lo.cwiseMin(b.first);
    hi = hi.cwiseMax(b.second);
  }
  return 0.5 * (lo + hi);
}

int ParticleSet::count(State s) const {
  return static_cast<int>(std::count(state.begin(), state.end(), s));
}

TaskInstance build_task(TaskCategory category, VariationSpec variation, Rng& rng) {
  const auto& valid = variations_of(category);
  if (std::find(valid.begin(), valid.end(), variation.kind) == valid.end())
    throw InvalidVariation(to_string(category) + " has no " + variation.kind + " variation");

  TaskInstance t;
  t.category = category;
  t.variation = std::move(variation);
  Builder b{t, rng, TemplateLibrary::bundled().category(to_string(category))};

  switch (category) {
    case TaskCategory::PickPlace: build_pick_like(b, false); break;
    case TaskCategory::Drop: build_pick_like(b, true); break;
    case TaskCategory::Stack: build_stack(b); break;
    case TaskCategory::ShapeSorter: build_sorter(b); break;
    case TaskCategory::Pour: build_pour(b); break;
    case TaskCategory::Wipe: build_wipe(b); break;
    case TaskCategory::Drawer: build_drawer(b); break;
    case TaskCategory::Door: build_door(b); break;
  }

  for (const UnitTask& u : t.units) validate_unit(u);
  return t;
}

void finalize_pour_tilt(TaskInstance& task) {
  if (task.category != TaskCategory::Pour) throw InvalidVariation("not a pour task");
  const auto& source = task.scene.object(task.target);
  const auto& container = task.scene.object(task.particles->other);
  const auto& entry = task.scene.entry_of(source);
  const double half_h =
      0.5 * (entry.shape.top_z() - entry.shape.bottom_z()) * source.scale;
  const double r_open = entry.opening_radius * source.scale;

  Vec2 toward(container.pose.position.x() - source.pose.position.x(),
              container.pose.position.y() - source.pose.position.y());
  if (toward.norm() < 1e-9) toward = Vec2(1, 0);

  const double lever = std::hypot(r_open, half_h);
  const int steps = std::max(12, static_cast<int>(std::ceil(kDemoTilt * lever / 0.015)));
  const auto path =
      pour_tilt_path(source.pose, r_open, half_h, toward, kDemoTilt, steps);

  PathOri ori;
  for (const Pose& p : path) ori.knots.emplace_back(p.position, p.orientation);
  task.units.back() = M2Task{task.target, TrajPos{path}, ori};
  task.goals.back() = FixedPoseGoal{path.back()};
}

bool door_locked(const TaskInstance& task) {
  if (task.unlock_fraction <= 0 || task.category != TaskCategory::Door) return false;
  const auto& door = task.scene.object(task.target);
  const auto& latch = *task.scene.part_of(door, "handle").joint;
  const auto& swing = *task.scene.part_of(door, "plank").joint;
  const double lv = task.scene.joint_value(door.id, latch.id);
  const double sv = task.scene.joint_value(door.id, swing.id);
  const bool closed = sv <= swing.lo + 1e-6;
  return closed && lv < latch.lo + task.unlock_fraction * (latch.hi - latch.lo);
}

bool success_check(const Scene& scene, const std::optional<ParticleSet>& particles,
                   const SuccessCondition& condition) {
  if (const auto* od = std::get_if<ObjectDetector>(&condition)) {
    const auto& frame = scene.object(od->frame_id);
    const Box3 world{compose(frame.pose, od->box.center), od->box.half};
    for (const auto& id : od->accepted)
      if (!world.contains(geometric_center(scene, scene.object(id)))) return false;
    return !od->accepted.empty();
  }
  if (const auto* jd = std::get_if<JointDetector>(&condition)) {
    const double v = scene.joint_value(jd->object, jd->joint);
    return v >= jd->lo && v <= jd->hi;
  }
  const auto& pd = std::get<ParticleDetector>(condition);
  if (!particles) return false;
  return particles->fraction(ParticleSet::Done) >= pd.threshold;
}

void particle_step(ParticleSet& particles, const Scene& scene) {
  if (particles.kind == ParticleSet::Kind::Pour) {
    const auto& source = scene.object(particles.owner);
    const auto& container = scene.object(particles.other);
    const Vec3 up = source.pose.rotate(Vec3::UnitZ());
    const double tilt = std::acos(std::clamp(up.z(), -1.0, 1.0));
    if (tilt <= kSpillTilt) return;

    const auto& src_entry = scene.entry_of(source);
    const auto& dst_entry = scene.entry_of(container);
    const Vec3 opening =
        source.pose.transform(Vec3(0, 0, src_entry.shape.top_z() * source.scale));
    const double rim_z =
        container.pose.position.z() + dst_entry.shape.top_z() * container.scale;
    const Vec2 d(opening.x() - container.pose.position.x(),
                 opening.y() - container.pose.position.y());
    const bool aligned = d.norm() <= dst_entry.opening_radius * container.scale &&
                         opening.z() >= rim_z - 0.005;

    int quota = kDrainPerStep;
    for (std::size_t i = 0; i < particles.points.size() && quota > 0; ++i) {
      if (particles.state[i] != ParticleSet::Active) continue;
      particles.state[i] = aligned ? ParticleSet::Done : ParticleSet::Lost;
      particles.points[i] = aligned ? container.pose.position
                                    : Vec3(opening.x(), opening.y(), scene.table_z());
      --quota;
    }
    return;
  }

  // Wipe: remove what the sponge face passes over while in contact.
  const auto& area = scene.object(particles.owner);
  const auto& sponge = scene.object(particles.other);
  const auto& sponge_entry = scene.entry_of(sponge);
  const double bottom =
      sponge.pose.position.z() + sponge_entry.shape.bottom_z() * sponge.scale;
  const double surface =
      area.pose.position.z() + scene.entry_of(area).shape.top_z() * area.scale;
  if (std::abs(bottom - surface) > 0.005) return;

  const auto hull = scene.world_footprint(sponge);
  auto covers = [&hull](const Vec2& p) {
    for (std::size_t i = 0, j = hull.size() - 1; i < hull.size(); j = i++) {
      const Vec2 e = hull[i] - hull[j];
      const Vec2 r = p - hull[j];
      if (e.x() * r.y() - e.y() * r.x() < 0) return false;  // hull is ccw
    }
    return true;
  };
  for (std::size_t i = 0; i < particles.points.size(); ++i) {
    if (particles.state[i] != ParticleSet::Active) continue;
    if (covers(Vec2(particles.points[i].x(), particles.points[i].y())))
      particles.state[i] = ParticleSet::Done;
  }
}

std::pair<double, double> amount_target(TaskCategory category, const std::string& action,
                                        const std::string& amount) {
  if (category != TaskCategory::Drawer && category != TaskCategory::Door)
    throw UnknownToken("amount targets only apply to articulated categories");
  if (action == "open") {
    if (amount == "fully") return {0.85, 1.0};
    if (amount == "slightly") return {0.25, 0.40};
  } else if (action == "close") {
    if (amount == "fully") return {0.0, 0.05};
    if (amount == "slightly") return {0.60, 0.75};
  }
  throw UnknownToken("no amount target for " + action + "/" + amount);
}

InstructionSet instructions_for(const TaskInstance& task) {
  const auto& tmpl = TemplateLibrary::bundled().category(to_string(task.category));
  return render(tmpl, task.slots, static_cast<int>(task.units.size()));
}

std::string task_folder(TaskCategory c, const std::string& variation_kind) {
  return to_string(c) + "_" + variation_kind;
}

// ---- episode matrix ---------------------------------------------------------------

TaskMatrix TaskMatrix::load(const std::filesystem::path& file) {
  const TextDoc doc = TextDoc::parse_file(file.string());
  doc.expect_format("matrix/1");
  TaskMatrix m;
  for (const Section& s : doc.sections) {
    if (s.name != "cell") continue;
    Cell c;
    c.category = category_from(s.get("category"));
    c.variation = s.get("variation");
    for (const char* split :
         {"train", "valid_seen", "valid_unseen", "test_seen", "test_unseen"})
      c.counts[split] = static_cast<int>(s.get_int(split));
    m.cells.push_back(std::move(c));
  }
  return m;
}

const TaskMatrix& TaskMatrix::bundled() {
  static const TaskMatrix m =
      load(std::filesystem::path(TASKFORGE_DATA_DIR) / "task_matrix.txt");
  return m;
}

TaskMatrix TaskMatrix::scaled(double factor) const {
  TaskMatrix m = *this;
  for (auto& c : m.cells)
    for (auto& [split, n] : c.counts)
      n = static_cast<int>(std::llround(n * factor));
  return m;
}

int TaskMatrix::total(const std::string& split) const {
  int n = 0;
  for (const auto& c : cells) {
    const auto it = c.counts.find(split);
    if (it != c.counts.end()) n += it->second;
  }
  return n;
}

const TaskMatrix::Cell* TaskMatrix::find(TaskCategory c, const std::string& variation) const {
  for (const auto& cell : cells)
    if (cell.category == c && cell.variation == variation) return &cell;
  return nullptr;
}

}  // namespace taskforge
