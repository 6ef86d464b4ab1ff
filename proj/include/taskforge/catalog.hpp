#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskforge/convex.hpp"
#include "taskforge/geometry.hpp"

namespace taskforge {

// One analytic solid. Canonical frame: origin at the geometric center of the
// primitive's bounding volume, z up.
struct PrimitiveShape {
  enum class Kind { Box, Cylinder, Polygon };

  Kind kind = Kind::Box;
  Vec3 box_half{0.025, 0.025, 0.025};     // Box
  double radius = 0.02, height = 0.05;    // Cylinder; Polygon uses height too
  std::vector<Vec2> polygon;              // Polygon cross-section, extruded +-height/2

  double top_z() const;     // highest local z
  double bottom_z() const;  // lowest local z
  std::vector<Convex> pieces() const;
  std::vector<Vec2> footprint() const;  // convex hull in local xy
  double surface_area() const;
  // Area-weighted surface sample: returns (point, outward normal).
  std::pair<Vec3, Vec3> sample_surface(Rng& rng) const;
  PrimitiveShape scaled(double s) const;
};

// A shape is one or more primitives at fixed offsets (mugs, trays, ...).
struct ShapeSpec {
  std::vector<std::pair<Pose, PrimitiveShape>> parts;

  bool simple() const { return parts.size() == 1; }
  double bottom_z() const;
  double top_z() const;
  std::vector<Convex> pieces(const Pose& world, double scale) const;
  std::vector<Vec2> footprint(double scale) const;
  double surface_area() const;
  std::pair<Vec3, Vec3> sample_surface(Rng& rng) const;  // local frame, scale 1
  ShapeSpec scaled(double s) const;
};

struct ColorDef {
  std::string name;
  Vec3 rgb{0.5, 0.5, 0.5};
  bool unseen = false;
};

// Palette bundled in data/palette.txt.
struct Palette {
  std::vector<ColorDef> colors;

  const ColorDef& by_name(const std::string& name) const;
  std::vector<std::string> names(bool unseen) const;
};

// Articulation templates (doors, drawer cabinets) live in the catalog as
// parts + joints; instances are stamped out by the scene module.
struct PartDef {
  std::string id;
  std::string parent;       // empty = root
  Pose frame;               // in parent frame (ignored when jointed)
  ShapeSpec shape;
  bool graspable = false;
  std::string grasp_class;  // dictionary key when graspable

  // Present when this part is attached through a joint.
  struct JointDef {
    std::string id;
    bool prismatic = false;
    Pose origin;            // joint frame in parent part frame
    Vec3 axis{0, 0, 1};     // in joint frame
    double lo = 0, hi = 1;
  };
  std::optional<JointDef> joint;
};

struct CatalogEntry {
  std::string class_name;
  std::string display;      // word used in instructions ("triangular prism")
  bool graspable = false;
  bool is_region = false;   // flat wipe areas
  bool unseen = false;      // unseen-shape collection
  ShapeSpec shape;          // rigid objects
  std::vector<PartDef> parts;  // articulated objects (non-empty = articulated)

  // Optional class metadata.
  std::optional<Box3> detector;            // success region in object frame
  double opening_radius = 0;               // mugs, basket
  std::map<std::string, Pose> slots;       // sorter: shape class -> hole pose

  bool articulated() const { return !parts.empty(); }
};

struct Catalog {
  std::map<std::string, CatalogEntry> entries;
  Palette palette;

  const CatalogEntry& get(const std::string& class_name) const;
  std::vector<std::string> graspable_classes() const;
};

// Loads data/catalog.txt + data/palette.txt. Throws on malformed input.
Catalog load_catalog(const std::filesystem::path& dir);
// Bundled catalog, loaded once.
const Catalog& default_catalog();

// Scale buckets used by the grasp dictionary.
inline constexpr double kScaleBuckets[3] = {0.78, 1.0, 1.25};
double nearest_scale_bucket(double s);

}  // namespace taskforge
