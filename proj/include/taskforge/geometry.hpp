#pragma once

// Conventions used throughout: quaternions are (w,x,y,z), frames are
// right-handed, world +z is up, all lengths in meters and angles in radians.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "taskforge/rng.hpp"

namespace taskforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Rigid transform: rotate by `orientation`, then translate by `position`.
struct Pose {
  Vec3 position{0, 0, 0};
  Quat orientation{1, 0, 0, 0};

  Pose() = default;
  Pose(const Vec3& p, const Quat& q) : position(p), orientation(q.normalized()) {}

  static Pose identity() { return {}; }

  Vec3 transform(const Vec3& p) const { return position + orientation * p; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }

  Mat4 matrix() const;
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

// Geodesic angle between orientations, in [0, pi]; q and -q are identical.
double angular_distance(const Quat& a, const Quat& b);

Quat quat_about(const Vec3& axis, double angle);

// Minimal rotation taking unit vector `from` onto unit vector `to`.
Quat rotation_between(const Vec3& from, const Vec3& to);

// Rotation vector (axis * angle) of q, zero for identity.
Vec3 quat_log(const Quat& q);

// Deterministic right-handed basis whose third column is `z` (unit).
Mat3 basis_from_z(const Vec3& z);

// Pose and angular interpolation (t in [0,1]).
Pose interpolate(const Pose& a, const Pose& b, double t);

struct Box3 {
  Pose center;
  Vec3 half{1, 1, 1};

  Box3() = default;
  Box3(const Pose& c, const Vec3& h);

  bool contains(const Vec3& point) const;
  Vec3 project(const Vec3& point) const;
  Vec3 sample(Rng& rng) const;
  std::array<Vec3, 8> corners() const;
};

struct PlaneRegion {
  Pose frame;  // z axis = plane normal
  Vec2 half{1, 1};

  PlaneRegion() = default;
  PlaneRegion(const Pose& f, const Vec2& h);

  Vec3 normal() const { return frame.rotate(Vec3(0, 0, 1)); }
  Vec3 project(const Vec3& point) const;
  Vec3 sample(Rng& rng) const;
};

struct LineSegment {
  Vec3 start{0, 0, 0};
  Vec3 end{1, 0, 0};

  LineSegment() = default;
  LineSegment(const Vec3& s, const Vec3& e);

  double length() const { return (end - start).norm(); }
  Vec3 project(const Vec3& point) const;
  Vec3 sample(Rng& rng) const;
};

Vec3 project_point(const Box3& box, const Vec3& point);
Vec3 project_point(const PlaneRegion& region, const Vec3& point);
Vec3 project_point(const LineSegment& segment, const Vec3& point);
Vec3 project_point(const Vec3& fixed, const Vec3& point);

}  // namespace taskforge
