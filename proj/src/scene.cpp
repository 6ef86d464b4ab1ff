#include "taskforge/scene.hpp"

#include <algorithm>
#include <cmath>

#include "taskforge/config.hpp"

namespace taskforge {

Scene::Scene(const Catalog* catalog)
    : catalog_(catalog),
      placement_region_(Pose{Vec3(0.46, 0.0, 0.75), Quat::Identity()},
                        Vec3(0.16, 0.30, 0.10)) {}

Pose Scene::base_pose() const { return Pose{Vec3(0, 0, table_z_), Quat::Identity()}; }

const CatalogEntry& Scene::entry_of(const SceneObject& obj) const {
  return catalog_->get(obj.class_name);
}

SceneObject& Scene::add(SceneObject obj) {
  if (has(obj.id)) throw std::invalid_argument("scene: duplicate object id '" + obj.id + "'");
  const CatalogEntry& e = catalog_->get(obj.class_name);
  for (const auto& p : e.parts)
    if (p.joint && !obj.joints.count(p.joint->id)) obj.joints[p.joint->id] = p.joint->lo;
  objects_.push_back(std::move(obj));
  return objects_.back();
}

bool Scene::has(const std::string& id) const {
  return std::any_of(objects_.begin(), objects_.end(),
                     [&](const SceneObject& o) { return o.id == id; });
}

SceneObject& Scene::object(const std::string& id) {
  for (auto& o : objects_)
    if (o.id == id) return o;
  throw std::out_of_range("scene: no object '" + id + "'");
}

const SceneObject& Scene::object(const std::string& id) const {
  return const_cast<Scene*>(this)->object(id);
}

const PartDef& Scene::part_of(const SceneObject& obj, const std::string& part_id) const {
  for (const auto& p : entry_of(obj).parts)
    if (p.id == part_id) return p;
  throw std::out_of_range("scene: object '" + obj.id + "' has no part '" + part_id + "'");
}

namespace {
Pose joint_motion(const PartDef::JointDef& j, double value) {
  if (j.prismatic) return Pose{j.axis * value, Quat::Identity()};
  return Pose{Vec3::Zero(), quat_about(j.axis, value)};
}
}  // namespace

Pose Scene::part_world(const SceneObject& obj, const PartDef& part) const {
  // Local mount of the part in its parent's frame.
  Pose local;
  if (part.joint) {
    auto it = obj.joints.find(part.joint->id);
    double q = it == obj.joints.end() ? part.joint->lo : it->second;
    q = std::clamp(q, part.joint->lo, part.joint->hi);
    Pose origin = part.joint->origin;
    origin.position *= obj.scale;
    local = compose(origin, joint_motion(*part.joint, q * (part.joint->prismatic ? obj.scale : 1.0)));
  } else {
    local = part.frame;
    local.position *= obj.scale;
  }
  if (part.parent.empty()) return compose(obj.pose, local);
  return compose(part_world(obj, part_of(obj, part.parent)), local);
}

void Scene::set_joint(const std::string& id, const std::string& joint, double value) {
  SceneObject& o = object(id);
  for (const auto& p : entry_of(o).parts)
    if (p.joint && p.joint->id == joint) {
      o.joints[joint] = std::clamp(value, p.joint->lo, p.joint->hi);
      return;
    }
  throw std::out_of_range("scene: object '" + id + "' has no joint '" + joint + "'");
}

double Scene::joint_value(const std::string& id, const std::string& joint) const {
  const SceneObject& o = object(id);
  auto it = o.joints.find(joint);
  if (it == o.joints.end())
    throw std::out_of_range("scene: object '" + id + "' has no joint '" + joint + "'");
  return it->second;
}

std::vector<Convex> Scene::object_pieces(const SceneObject& obj) const {
  const CatalogEntry& e = entry_of(obj);
  if (!e.articulated()) return e.shape.pieces(obj.pose, obj.scale);
  std::vector<Convex> out;
  for (const auto& part : e.parts) {
    Pose w = part_world(obj, part);
    for (Convex& c : part.shape.pieces(w, obj.scale)) out.push_back(std::move(c));
  }
  return out;
}

Convex Scene::table_piece() const {
  std::vector<Vec3> v;
  for (double x : {-0.25, 1.0})
    for (double y : {-0.8, 0.8})
      for (double z : {table_z_ - 0.05, table_z_}) v.emplace_back(x, y, z);
  return Convex::hull(std::move(v));
}

std::vector<Convex> Scene::world_pieces(const std::vector<std::string>& exclude) const {
  std::vector<Convex> out{table_piece()};
  for (const auto& o : objects_) {
    if (std::find(exclude.begin(), exclude.end(), o.id) != exclude.end()) continue;
    for (Convex& c : object_pieces(o)) out.push_back(std::move(c));
  }
  return out;
}

std::vector<Vec2> Scene::world_footprint(const SceneObject& obj) const {
  const CatalogEntry& e = entry_of(obj);
  std::vector<Vec2> pts;
  auto accumulate = [&](const std::vector<Vec2>& local, const Pose& world) {
    // Project the outline through the full 3d pose; for upright objects this
    // reduces to yaw rotation plus translation.
    for (const Vec2& p : local) {
      Vec3 w = world.transform(Vec3(p.x(), p.y(), 0));
      pts.emplace_back(w.x(), w.y());
    }
  };
  if (!e.articulated()) {
    accumulate(e.shape.footprint(obj.scale), obj.pose);
  } else {
    for (const auto& part : e.parts)
      accumulate(part.shape.footprint(obj.scale), part_world(obj, part));
  }
  return convex_hull_2d(std::move(pts));
}

double Scene::support_z(const Vec2& xy, const std::string& moving_id) const {
  double best = table_z_;
  for (const auto& o : objects_) {
    if (o.id == moving_id) continue;
    const CatalogEntry& e = entry_of(o);
    if (e.detector) {
      // Container: the floor of the interior region supports objects whose
      // center lands inside its xy extent.
      Box3 det = *e.detector;
      det.center.position *= o.scale;
      det.half *= o.scale;
      Pose world = compose(o.pose, det.center);
      Vec3 local = inverse(world).transform(Vec3(xy.x(), xy.y(), world.position.z()));
      if (std::abs(local.x()) <= det.half.x() && std::abs(local.y()) <= det.half.y()) {
        best = std::max(best, world.position.z() - det.half.z());
        continue;
      }
    }
    if (e.articulated() || e.is_region) continue;
    auto fp = world_footprint(o);
    if (fp.size() >= 3 && point_in_polygon(fp, xy) && !e.detector)
      best = std::max(best, o.pose.position.z() + e.shape.top_z() * o.scale);
  }
  return best;
}

double Scene::rest_z(const SceneObject& obj, double surface_z) const {
  const CatalogEntry& e = entry_of(obj);
  double bottom = e.articulated() ? 0.0 : e.shape.bottom_z() * obj.scale;
  return surface_z - bottom;
}

void Scene::settle(const std::string& id) {
  SceneObject& o = object(id);
  double s = support_z(Vec2(o.pose.position.x(), o.pose.position.y()), id);
  o.pose.position.z() = rest_z(o, s);
}

std::vector<std::pair<Vec3, Vec3>> Scene::surface_points(const SceneObject& obj, int count,
                                                         Rng& rng) const {
  const CatalogEntry& e = entry_of(obj);
  std::vector<std::pair<Vec3, Vec3>> out;
  out.reserve(count);
  if (!e.articulated()) {
    for (int i = 0; i < count; ++i) {
      auto [p, n] = e.shape.sample_surface(rng);
      out.emplace_back(obj.pose.transform(obj.scale * p), obj.pose.rotate(n));
    }
    return out;
  }
  double total = 0;
  for (const auto& part : e.parts) total += part.shape.surface_area();
  for (int i = 0; i < count; ++i) {
    double pick = rng.uniform(0, total);
    const PartDef* chosen = &e.parts.back();
    for (const auto& part : e.parts) {
      double a = part.shape.surface_area();
      if (pick <= a) {
        chosen = &part;
        break;
      }
      pick -= a;
    }
    Pose w = part_world(obj, *chosen);
    auto [p, n] = chosen->shape.sample_surface(rng);
    out.emplace_back(w.transform(obj.scale * p), w.rotate(n));
  }
  return out;
}

Pose Scene::sample_placement(Rng& rng, const std::string& class_name, double scale,
                             const std::optional<Box3>& region,
                             const std::function<bool(const Pose&)>& accept,
                             const std::pair<double, double>& yaw_range,
                             int max_attempts) const {
  const CatalogEntry& e = catalog_->get(class_name);
  const Box3& box = region ? *region : placement_region_;

  std::vector<Vec2> local_fp;
  double bottom = 0;
  if (!e.articulated()) {
    local_fp = e.shape.footprint(scale);
    bottom = e.shape.bottom_z() * scale;
  } else {
    // Footprint at fully closed joints, composed in the object frame.
    SceneObject probe;
    probe.id = "__probe";
    probe.class_name = class_name;
    probe.scale = scale;
    for (const auto& p : e.parts)
      if (p.joint) probe.joints[p.joint->id] = p.joint->lo;
    std::vector<Vec2> pts;
    for (const auto& part : e.parts) {
      Pose w = part_world(probe, part);
      for (const Vec2& q : part.shape.footprint(scale)) {
        Vec3 v = w.transform(Vec3(q.x(), q.y(), 0));
        pts.emplace_back(v.x(), v.y());
      }
    }
    local_fp = convex_hull_2d(std::move(pts));
  }
  if (local_fp.size() < 3)
    throw std::runtime_error("scene: degenerate footprint for class '" + class_name + "'");

  std::vector<std::vector<Vec2>> placed;
  placed.reserve(objects_.size());
  for (const auto& o : objects_) placed.push_back(world_footprint(o));

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    double yaw = rng.uniform(yaw_range.first, yaw_range.second);
    Vec3 c = box.sample(rng);
    Pose pose{Vec3(c.x(), c.y(), table_z_ - bottom), quat_about(Vec3::UnitZ(), yaw)};

    Eigen::Rotation2Dd rot(yaw);
    std::vector<Vec2> fp;
    fp.reserve(local_fp.size());
    bool inside = true;
    for (const Vec2& p : local_fp) {
      Vec2 w = rot * p + Vec2(c.x(), c.y());
      fp.push_back(w);
      Vec3 lp = box.center.orientation.conjugate() * (Vec3(w.x(), w.y(), box.center.position.z()) -
                                                     box.center.position);
      if (std::abs(lp.x()) > box.half.x() || std::abs(lp.y()) > box.half.y()) inside = false;
    }
    if (!inside) continue;

    bool clear = true;
    for (const auto& other : placed)
      if (other.size() >= 3 && !convex_polygons_separated(fp, other, placement_margin_)) {
        clear = false;
        break;
      }
    if (!clear) continue;
    if (accept && !accept(pose)) continue;
    return pose;
  }
  throw PlacementExhausted("scene: no free placement for '" + class_name + "' after " +
                           std::to_string(max_attempts) + " attempts");
}

SceneObject& Scene::spawn(Rng& rng, const std::string& id, const std::string& class_name,
                          const std::string& color, double scale,
                          const std::optional<Box3>& region,
                          const std::function<bool(const Pose&)>& accept,
                          const std::pair<double, double>& yaw_range) {
  SceneObject obj;
  obj.id = id;
  obj.class_name = class_name;
  obj.color = color;
  obj.scale = scale;
  const CatalogEntry& e = catalog_->get(class_name);
  obj.fixture = e.is_region || e.articulated() || !e.graspable;
  obj.pose = sample_placement(rng, class_name, scale, region, accept, yaw_range);
  return add(std::move(obj));
}

bool Scene::relation_holds(const std::string& token, const SceneObject& a,
                           const SceneObject& b) const {
  const double m = EngineConfig::instance().relation_margin;
  const Vec3 &pa = a.pose.position, &pb = b.pose.position;
  if (token == "left") return pa.y() <= pb.y() - m;
  if (token == "right") return pa.y() >= pb.y() + m;
  if (token == "front") return pa.x() <= pb.x() - m;
  if (token == "rear") return pa.x() >= pb.x() + m;
  if (token == "top") {
    if (pa.z() <= pb.z()) return false;
    auto fa = world_footprint(a), fb = world_footprint(b);
    if (fa.size() < 3 || fb.size() < 3) return false;
    // Overlapping footprints = not separable even with zero margin.
    return !convex_polygons_separated(fa, fb, 0.0);
  }
  // Compound tokens like "left_front" require every component.
  auto cut = token.find('_');
  if (cut != std::string::npos)
    return relation_holds(token.substr(0, cut), a, b) &&
           relation_holds(token.substr(cut + 1), a, b);
  throw std::invalid_argument("scene: unknown relation '" + token + "'");
}

}  // namespace taskforge
