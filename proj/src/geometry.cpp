#include "taskforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace taskforge {

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = orientation.toRotationMatrix();
  m.block<3, 1>(0, 3) = position;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.position + a.orientation * b.position, a.orientation * b.orientation);
}

Pose inverse(const Pose& p) {
  Quat qi = p.orientation.conjugate();
  return Pose(qi * (-p.position), qi);
}

double angular_distance(const Quat& a, const Quat& b) {
  double d = std::abs(a.dot(b));
  return 2.0 * std::acos(std::min(1.0, d));
}

Quat quat_about(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

Quat rotation_between(const Vec3& from, const Vec3& to) {
  Vec3 f = from.normalized(), t = to.normalized();
  double c = f.dot(t);
  if (c > 1.0 - 1e-12) return Quat::Identity();
  if (c < -1.0 + 1e-12) {
    // Antiparallel: rotate pi about a deterministic perpendicular axis.
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(f[i]) < std::abs(f[k])) k = i;
    Vec3 perp = f.cross(Vec3::Unit(k)).normalized();
    return quat_about(perp, kPi);
  }
  Vec3 axis = f.cross(t).normalized();
  return quat_about(axis, std::acos(std::clamp(c, -1.0, 1.0)));
}

Vec3 quat_log(const Quat& q) {
  Quat u = q;
  if (u.w() < 0) u.coeffs() *= -1.0;
  double vn = u.vec().norm();
  if (vn < 1e-12) return Vec3::Zero();
  double angle = 2.0 * std::atan2(vn, u.w());
  return u.vec() * (angle / vn);
}

Mat3 basis_from_z(const Vec3& z) {
  Vec3 n = z.normalized();
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) < std::abs(n[k])) k = i;
  Vec3 x = Vec3::Unit(k).cross(n).normalized();
  Vec3 y = n.cross(x);
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = n;
  return m;
}

Pose interpolate(const Pose& a, const Pose& b, double t) {
  return Pose(a.position + t * (b.position - a.position),
              a.orientation.slerp(t, b.orientation));
}

Box3::Box3(const Pose& c, const Vec3& h) : center(c), half(h) {
  if (!(half.minCoeff() > 0)) throw std::invalid_argument("Box3: half-extents must be positive");
}

bool Box3::contains(const Vec3& point) const {
  Vec3 local = inverse(center).transform(point);
  return std::abs(local.x()) <= half.x() && std::abs(local.y()) <= half.y() &&
         std::abs(local.z()) <= half.z();
}

Vec3 Box3::project(const Vec3& point) const {
  Vec3 local = inverse(center).transform(point);
  for (int i = 0; i < 3; ++i) local[i] = std::clamp(local[i], -half[i], half[i]);
  return center.transform(local);
}

Vec3 Box3::sample(Rng& rng) const {
  Vec3 local = rng.uniform_in_box(half);
  return center.transform(local);
}

std::array<Vec3, 8> Box3::corners() const {
  std::array<Vec3, 8> out;
  int n = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out[n++] = center.transform(Vec3(sx * half.x(), sy * half.y(), sz * half.z()));
  return out;
}

PlaneRegion::PlaneRegion(const Pose& f, const Vec2& h) : frame(f), half(h) {
  if (!(half.minCoeff() > 0))
    throw std::invalid_argument("PlaneRegion: half-extents must be positive");
}

Vec3 PlaneRegion::project(const Vec3& point) const {
  Vec3 local = inverse(frame).transform(point);
  local.x() = std::clamp(local.x(), -half.x(), half.x());
  local.y() = std::clamp(local.y(), -half.y(), half.y());
  local.z() = 0.0;
  return frame.transform(local);
}

Vec3 PlaneRegion::sample(Rng& rng) const {
  Vec3 local(rng.uniform(-half.x(), half.x()), rng.uniform(-half.y(), half.y()), 0.0);
  return frame.transform(local);
}

LineSegment::LineSegment(const Vec3& s, const Vec3& e) : start(s), end(e) {
  if ((end - start).norm() <= 1e-9)
    throw std::invalid_argument("LineSegment: endpoints must be distinct");
}

Vec3 LineSegment::project(const Vec3& point) const {
  Vec3 d = end - start;
  double t = (point - start).dot(d) / d.squaredNorm();
  return start + std::clamp(t, 0.0, 1.0) * d;
}

Vec3 LineSegment::sample(Rng& rng) const {
  return start + rng.uniform() * (end - start);
}

Vec3 project_point(const Box3& box, const Vec3& point) { return box.project(point); }
Vec3 project_point(const PlaneRegion& region, const Vec3& point) { return region.project(point); }
Vec3 project_point(const LineSegment& segment, const Vec3& point) { return segment.project(point); }
Vec3 project_point(const Vec3& fixed, const Vec3&) { return fixed; }

}  // namespace taskforge
