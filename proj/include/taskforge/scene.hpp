#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskforge/catalog.hpp"
#include "taskforge/convex.hpp"
#include "taskforge/geometry.hpp"
#include "taskforge/rng.hpp"

namespace taskforge {

// Thrown when rejection sampling cannot place an object without overlap.
struct PlacementExhausted : std::runtime_error {
  explicit PlacementExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct SceneObject {
  std::string id;          // unique instance id within the scene
  std::string class_name;  // catalog class
  std::string color;       // palette name ("" = uncolored fixture)
  double scale = 1.0;
  Pose pose;               // object frame in world
  bool fixture = false;    // cannot be carried (areas, cabinets, doors, sorter...)
  std::map<std::string, double> joints;  // joint id -> value, articulated classes only
};

// World model: a table with a wall-mounted arm base at the origin of the
// tabletop, plus a set of catalog object instances.  +x points away from the
// robot across the table, +y is the robot's left, z is up.
class Scene {
 public:
  explicit Scene(const Catalog* catalog = &default_catalog());

  double table_z() const { return table_z_; }
  Pose base_pose() const;                 // arm mount
  const Box3& placement_region() const { return placement_region_; }

  const Catalog& catalog() const { return *catalog_; }
  const CatalogEntry& entry_of(const SceneObject& obj) const;

  SceneObject& add(SceneObject obj);
  bool has(const std::string& id) const;
  SceneObject& object(const std::string& id);
  const SceneObject& object(const std::string& id) const;
  // Deque storage keeps references from add()/spawn() valid across later
  // insertions.
  const std::deque<SceneObject>& objects() const { return objects_; }
  std::deque<SceneObject>& objects() { return objects_; }

  // --- articulation -------------------------------------------------------
  // World pose of an articulated part, resolving the parent chain and the
  // part's joint value.  `part` must belong to entry_of(obj).
  Pose part_world(const SceneObject& obj, const PartDef& part) const;
  const PartDef& part_of(const SceneObject& obj, const std::string& part_id) const;
  void set_joint(const std::string& id, const std::string& joint, double value);
  double joint_value(const std::string& id, const std::string& joint) const;

  // --- geometry -----------------------------------------------------------
  // Convex collision pieces of one object at its current pose/joints.
  std::vector<Convex> object_pieces(const SceneObject& obj) const;
  // Table slab + every object except the listed ids.
  std::vector<Convex> world_pieces(const std::vector<std::string>& exclude = {}) const;
  Convex table_piece() const;

  // Convex hull of the object's outline on the table plane, world frame.
  std::vector<Vec2> world_footprint(const SceneObject& obj) const;

  // Highest resting surface under xy for a carried object (table, container
  // floors, tops of other objects).  Returns the surface z.
  double support_z(const Vec2& xy, const std::string& moving_id) const;
  // Center z so the object rests on `surface_z`.
  double rest_z(const SceneObject& obj, double surface_z) const;
  // Drop the object straight down onto its support.
  void settle(const std::string& id);

  // Uniform surface samples (point, outward normal) in world frame.
  std::vector<std::pair<Vec3, Vec3>> surface_points(const SceneObject& obj, int count,
                                                    Rng& rng) const;

  // --- placement ----------------------------------------------------------
  // Uniform pose on the table inside `region` (default workspace) with a
  // uniform yaw, footprint fully inside the region and separated from every
  // placed object by >= margin.  `accept` can veto candidates (e.g. spatial
  // relations).  Throws PlacementExhausted after max_attempts rejections.
  Pose sample_placement(Rng& rng, const std::string& class_name, double scale,
                        const std::optional<Box3>& region = std::nullopt,
                        const std::function<bool(const Pose&)>& accept = nullptr,
                        const std::pair<double, double>& yaw_range = {0.0, 2 * kPi},
                        int max_attempts = 1000) const;

  // Convenience: sample_placement + add.
  SceneObject& spawn(Rng& rng, const std::string& id, const std::string& class_name,
                     const std::string& color, double scale = 1.0,
                     const std::optional<Box3>& region = std::nullopt,
                     const std::function<bool(const Pose&)>& accept = nullptr,
                     const std::pair<double, double>& yaw_range = {0.0, 2 * kPi});

  // --- relations ----------------------------------------------------------
  // "a is <token> of b" in the robot-base frame; margin 2 cm.
  // left: a.y <= b.y - margin      right: a.y >= b.y + margin
  // front: a.x <= b.x - margin     rear:  a.x >= b.x + margin
  // top: a rests above b with overlapping footprints.
  bool relation_holds(const std::string& token, const SceneObject& a,
                      const SceneObject& b) const;

  double placement_margin() const { return placement_margin_; }

 private:
  const Catalog* catalog_;
  double table_z_ = 0.75;
  double placement_margin_ = 0.005;
  Box3 placement_region_;
  std::deque<SceneObject> objects_;
};

}  // namespace taskforge
