#include "taskforge/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace taskforge {

Convex Convex::hull(std::vector<Vec3> verts) {
  if (verts.empty()) throw std::invalid_argument("Convex::hull: empty vertex set");
  Convex c;
  c.kind_ = Kind::Hull;
  c.verts_ = std::move(verts);
  return c;
}

Convex Convex::cylinder(const Vec3& base, const Vec3& top, double radius) {
  if ((top - base).norm() <= 1e-9 || radius <= 0)
    throw std::invalid_argument("Convex::cylinder: degenerate");
  Convex c;
  c.kind_ = Kind::Cylinder;
  c.verts_ = {base, top};
  c.radius_ = radius;
  return c;
}

Convex Convex::prism(const std::vector<Vec2>& cross_section, double z0, double z1) {
  if (cross_section.size() < 3 || !(z1 > z0))
    throw std::invalid_argument("Convex::prism: degenerate");
  std::vector<Vec3> v;
  v.reserve(cross_section.size() * 2);
  for (double z : {z0, z1})
    for (const Vec2& p : cross_section) v.emplace_back(p.x(), p.y(), z);
  return hull(std::move(v));
}

Vec3 Convex::support(const Vec3& dir) const {
  if (kind_ == Kind::Hull) {
    double best = -std::numeric_limits<double>::infinity();
    const Vec3* best_v = &verts_[0];
    for (const Vec3& v : verts_) {
      double d = v.dot(dir);
      if (d > best) {
        best = d;
        best_v = &v;
      }
    }
    return *best_v;
  }
  Vec3 axis = verts_[1] - verts_[0];
  Vec3 u = axis.normalized();
  Vec3 p = dir.dot(axis) >= 0 ? verts_[1] : verts_[0];
  Vec3 radial = dir - dir.dot(u) * u;
  double rn = radial.norm();
  if (rn > 1e-12) p += radial * (radius_ / rn);
  return p;
}

Vec3 Convex::center() const {
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : verts_) c += v;
  return c / double(verts_.size());
}

Convex Convex::transformed(const Pose& world) const {
  Convex c = *this;
  for (Vec3& v : c.verts_) v = world.transform(v);
  return c;
}

std::pair<Vec3, Vec3> Convex::bounds() const {
  Vec3 lo = verts_[0], hi = verts_[0];
  for (const Vec3& v : verts_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  if (kind_ == Kind::Cylinder) {
    lo.array() -= radius_;
    hi.array() += radius_;
  }
  return {lo, hi};
}

namespace {

// Closest point to the origin on a segment; `keep` is a bitmask of surviving
// vertices (bit 0 = a, bit 1 = b).
Vec3 closest_on_segment(const Vec3& a, const Vec3& b, int& keep) {
  Vec3 ab = b - a;
  double denom = ab.squaredNorm();
  if (denom < 1e-30) {
    keep = 1;
    return a;
  }
  double t = -a.dot(ab) / denom;
  if (t <= 0) {
    keep = 1;
    return a;
  }
  if (t >= 1) {
    keep = 2;
    return b;
  }
  keep = 3;
  return a + t * ab;
}

// Closest point to the origin on a triangle (Ericson-style region tests).
Vec3 closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, int& keep) {
  Vec3 ab = b - a, ac = c - a, ap = -a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) {
    keep = 1;
    return a;
  }
  Vec3 bp = -b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) {
    keep = 2;
    return b;
  }
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    keep = 3;
    double v = d1 / (d1 - d3);
    return a + v * ab;
  }
  Vec3 cp = -c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) {
    keep = 4;
    return c;
  }
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    keep = 5;
    double w = d2 / (d2 - d6);
    return a + w * ac;
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    keep = 6;
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }
  keep = 7;
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

struct Simplex {
  Vec3 pts[4];
  int n = 0;

  void add(const Vec3& p) { pts[n++] = p; }

  void reduce(int keep) {
    int m = 0;
    for (int i = 0; i < n; ++i)
      if (keep & (1 << i)) pts[m++] = pts[i];
    n = m;
  }

  bool contains_close(const Vec3& p) const {
    for (int i = 0; i < n; ++i)
      if ((pts[i] - p).squaredNorm() < 1e-20) return true;
    return false;
  }
};

// Closest point of the simplex to the origin, reducing to the supporting
// face/edge/vertex. Returns false when the origin is enclosed (tetrahedron).
bool closest_on_simplex(Simplex& s, Vec3& out) {
  switch (s.n) {
    case 1:
      out = s.pts[0];
      return true;
    case 2: {
      int keep;
      out = closest_on_segment(s.pts[0], s.pts[1], keep);
      s.reduce(keep);
      return true;
    }
    case 3: {
      int keep;
      out = closest_on_triangle(s.pts[0], s.pts[1], s.pts[2], keep);
      s.reduce(keep);
      return true;
    }
    case 4: {
      // Check each face; origin inside if not outside any face plane.
      struct Face {
        int i, j, k, opp;
      };
      const Face faces[4] = {{0, 1, 2, 3}, {0, 1, 3, 2}, {0, 2, 3, 1}, {1, 2, 3, 0}};
      double best = std::numeric_limits<double>::infinity();
      Vec3 best_pt = Vec3::Zero();
      int best_keep = 0;
      bool outside_any = false;
      for (const Face& f : faces) {
        const Vec3 &p = s.pts[f.i], &q = s.pts[f.j], &r = s.pts[f.k];
        Vec3 nrm = (q - p).cross(r - p);
        double side_origin = nrm.dot(-p);
        double side_opp = nrm.dot(s.pts[f.opp] - p);
        if (side_origin * side_opp >= -1e-30 && std::abs(side_opp) > 1e-30) continue;
        outside_any = true;
        int keep;
        Vec3 pt = closest_on_triangle(p, q, r, keep);
        double d2 = pt.squaredNorm();
        if (d2 < best) {
          best = d2;
          best_pt = pt;
          int mask = 0;
          if (keep & 1) mask |= 1 << f.i;
          if (keep & 2) mask |= 1 << f.j;
          if (keep & 4) mask |= 1 << f.k;
          best_keep = mask;
        }
      }
      if (!outside_any) return false;  // origin enclosed
      out = best_pt;
      s.reduce(best_keep);
      return true;
    }
    default:
      out = Vec3::Zero();
      return true;
  }
}

}  // namespace

double gjk_distance(const Convex& A, const Convex& B) {
  Vec3 d = A.center() - B.center();
  if (d.squaredNorm() < 1e-18) d = Vec3(1, 0, 0);
  Simplex s;
  s.add(A.support(d) - B.support(-d));
  Vec3 v = s.pts[0];

  for (int iter = 0; iter < 128; ++iter) {
    if (v.squaredNorm() < 1e-18) return 0.0;
    Vec3 w = A.support(-v) - B.support(v);
    // No meaningful progress toward the origin: v is (near) optimal.
    if (v.squaredNorm() - v.dot(w) <= 1e-12 * v.squaredNorm() + 1e-24) return v.norm();
    if (s.contains_close(w)) return v.norm();
    s.add(w);
    if (!closest_on_simplex(s, v)) return 0.0;
  }
  return v.norm();
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                const Vec3& q2) {
  // Ericson 5.1.9 closest points of two segments.
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s, t;
  if (a <= 1e-30 && e <= 1e-30) return r.norm();
  if (a <= 1e-30) {
    s = 0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= 1e-30) {
      t = 0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 1e-30 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

double capsule_capsule_distance(const Capsule& a, const Capsule& b) {
  double d = segment_segment_distance(a.a, a.b, b.a, b.b) - a.radius - b.radius;
  return std::max(0.0, d);
}

double capsule_convex_distance(const Capsule& c, const Convex& piece) {
  Convex seg = Convex::hull({c.a, c.b});
  double d = gjk_distance(seg, piece) - c.radius;
  return std::max(0.0, d);
}

double point_convex_distance(const Vec3& p, const Convex& piece) {
  return gjk_distance(Convex::hull({p}), piece);
}

bool segment_hits_convex(const Vec3& a, const Vec3& b, const Convex& piece, double eps) {
  Convex seg = Convex::hull({a, b});
  return gjk_distance(seg, piece) <= eps;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0;
  for (size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2 &p = poly[i], &q = poly[(i + 1) % n];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Vec2 &a = poly[j], &b = poly[i];
    if ((b.y() > p.y()) != (a.y() > p.y())) {
      double x = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points) {
  if (points.size() < 3) return points;
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> h(2 * points.size());
  size_t k = 0;
  for (const Vec2& p : points) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], points[i]) <= 0) --k;
    h[k++] = points[i];
  }
  h.resize(k - 1);
  return h;
}

namespace {

double tri_cross(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  double d1 = tri_cross(a, b, p), d2 = tri_cross(b, c, p), d3 = tri_cross(c, a, p);
  bool neg = d1 < 0 || d2 < 0 || d3 < 0;
  bool pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(neg && pos);
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Vec2>& poly) {
  int n = int(poly.size());
  if (n < 3) throw std::invalid_argument("triangulate_polygon: need >= 3 vertices");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (polygon_area(poly) < 0) std::reverse(idx.begin(), idx.end());

  std::vector<std::array<int, 3>> tris;
  tris.reserve(size_t(n) - 2);
  int guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    int m = int(idx.size());
    for (int i = 0; i < m; ++i) {
      int ia = idx[(i + m - 1) % m], ib = idx[i], ic = idx[(i + 1) % m];
      if (tri_cross(poly[ia], poly[ib], poly[ic]) <= 1e-14) continue;  // reflex/degenerate
      bool ear = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (point_in_triangle(poly[j], poly[ia], poly[ib], poly[ic])) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) {
      // Degenerate input; fall back to a fan so callers always get a cover.
      for (size_t i = 1; i + 1 < idx.size(); ++i)
        tris.push_back({idx[0], idx[i], idx[i + 1]});
      return tris;
    }
    if (++guard > 10 * n) throw std::runtime_error("triangulate_polygon: no progress");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

bool convex_polygons_separated(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                               double margin) {
  auto project = [](const std::vector<Vec2>& poly, const Vec2& axis, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const Vec2& p : poly) {
      double d = p.dot(axis);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  };
  auto test_axes = [&](const std::vector<Vec2>& poly) {
    for (size_t i = 0, n = poly.size(); i < n; ++i) {
      Vec2 e = poly[(i + 1) % n] - poly[i];
      double len = e.norm();
      if (len < 1e-12) continue;
      Vec2 axis(-e.y() / len, e.x() / len);
      double alo, ahi, blo, bhi;
      project(a, axis, alo, ahi);
      project(b, axis, blo, bhi);
      if (blo - ahi >= margin || alo - bhi >= margin) return true;
    }
    return false;
  };
  if (test_axes(a) || test_axes(b)) return true;
  // Centroid axis covers point-like degenerate inputs.
  Vec2 ca = Vec2::Zero(), cb = Vec2::Zero();
  for (const Vec2& p : a) ca += p;
  for (const Vec2& p : b) cb += p;
  ca /= double(a.size());
  cb /= double(b.size());
  Vec2 d = cb - ca;
  if (d.norm() > 1e-12) {
    Vec2 axis = d.normalized();
    double alo, ahi, blo, bhi;
    project(a, axis, alo, ahi);
    project(b, axis, blo, bhi);
    if (blo - ahi >= margin || alo - bhi >= margin) return true;
  }
  return false;
}

}  // namespace taskforge
