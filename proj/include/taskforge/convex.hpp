#pragma once

// Convex collision pieces and the distance queries built on them. Every scene
// shape decomposes into pieces (convex prisms, cylinders); arm links are
// capsules. All queries work on world-space pieces.

#include <array>
#include <utility>
#include <vector>

#include "taskforge/geometry.hpp"

namespace taskforge {

class Convex {
 public:
  enum class Kind { Hull, Cylinder };

  static Convex hull(std::vector<Vec3> verts);
  // Finite flat-capped cylinder from base center to top center.
  static Convex cylinder(const Vec3& base, const Vec3& top, double radius);
  // Axis-aligned-in-frame prism: convex cross-section extruded along local z.
  static Convex prism(const std::vector<Vec2>& cross_section, double z0, double z1);

  Kind kind() const { return kind_; }
  Vec3 support(const Vec3& dir) const;
  Vec3 center() const;
  Convex transformed(const Pose& world) const;
  std::pair<Vec3, Vec3> bounds() const;  // axis-aligned, world frame

  const std::vector<Vec3>& verts() const { return verts_; }
  double radius() const { return radius_; }

 private:
  Kind kind_ = Kind::Hull;
  std::vector<Vec3> verts_;  // Hull: all vertices; Cylinder: {base, top}
  double radius_ = 0.0;
};

struct Capsule {
  Vec3 a{0, 0, 0}, b{0, 0, 1};
  double radius = 0.01;

  Capsule transformed(const Pose& world) const {
    return {world.transform(a), world.transform(b), radius};
  }
};

// Euclidean distance between two convex pieces (0 when overlapping).
double gjk_distance(const Convex& a, const Convex& b);

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);

double capsule_capsule_distance(const Capsule& a, const Capsule& b);
double capsule_convex_distance(const Capsule& c, const Convex& piece);
double point_convex_distance(const Vec3& p, const Convex& piece);

// True when the open segment (a,b) passes within `eps` of the piece.
bool segment_hits_convex(const Vec3& a, const Vec3& b, const Convex& piece, double eps = 1e-9);

// --- 2D polygon utilities (footprints, extrusion profiles) ---

double polygon_area(const std::vector<Vec2>& poly);  // signed, ccw positive
bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p);
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);
// Ear-clipping triangulation of a simple polygon (either winding).
std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& poly);
// Separating-axis test: true iff some axis separates the convex polygons by
// at least `margin`.
bool convex_polygons_separated(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                               double margin);

}  // namespace taskforge
