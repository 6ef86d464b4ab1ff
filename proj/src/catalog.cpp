#include "taskforge/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "taskforge/config.hpp"
#include "taskforge/textdoc.hpp"

namespace taskforge {

double PrimitiveShape::top_z() const {
  return kind == Kind::Box ? box_half.z() : height * 0.5;
}

double PrimitiveShape::bottom_z() const { return -top_z(); }

std::vector<Convex> PrimitiveShape::pieces() const {
  switch (kind) {
    case Kind::Box: {
      std::vector<Vec3> v;
      for (int sx : {-1, 1})
        for (int sy : {-1, 1})
          for (int sz : {-1, 1})
            v.emplace_back(sx * box_half.x(), sy * box_half.y(), sz * box_half.z());
      return {Convex::hull(std::move(v))};
    }
    case Kind::Cylinder:
      return {Convex::cylinder(Vec3(0, 0, -height * 0.5), Vec3(0, 0, height * 0.5), radius)};
    case Kind::Polygon: {
      std::vector<Convex> out;
      auto tris = triangulate_polygon(polygon);
      out.reserve(tris.size());
      for (const auto& t : tris)
        out.push_back(Convex::prism({polygon[t[0]], polygon[t[1]], polygon[t[2]]},
                                    -height * 0.5, height * 0.5));
      return out;
    }
  }
  return {};
}

std::vector<Vec2> PrimitiveShape::footprint() const {
  switch (kind) {
    case Kind::Box:
      return {{-box_half.x(), -box_half.y()},
              {box_half.x(), -box_half.y()},
              {box_half.x(), box_half.y()},
              {-box_half.x(), box_half.y()}};
    case Kind::Cylinder: {
      std::vector<Vec2> v;
      for (int i = 0; i < 16; ++i) {
        double a = 2 * kPi * i / 16;
        v.emplace_back(radius * std::cos(a), radius * std::sin(a));
      }
      return v;
    }
    case Kind::Polygon:
      return convex_hull_2d(polygon);
  }
  return {};
}

double PrimitiveShape::surface_area() const {
  switch (kind) {
    case Kind::Box:
      return 8 * (box_half.x() * box_half.y() + box_half.y() * box_half.z() +
                  box_half.x() * box_half.z());
    case Kind::Cylinder:
      return 2 * kPi * radius * height + 2 * kPi * radius * radius;
    case Kind::Polygon: {
      double area = std::abs(polygon_area(polygon));
      double perim = 0;
      for (size_t i = 0; i < polygon.size(); ++i)
        perim += (polygon[(i + 1) % polygon.size()] - polygon[i]).norm();
      return 2 * area + perim * height;
    }
  }
  return 0;
}

std::pair<Vec3, Vec3> PrimitiveShape::sample_surface(Rng& rng) const {
  switch (kind) {
    case Kind::Box: {
      const double ax = box_half.y() * box_half.z(), ay = box_half.x() * box_half.z(),
                   az = box_half.x() * box_half.y();
      double pick = rng.uniform(0, 2 * (ax + ay + az));
      int axis = pick < 2 * ax ? 0 : pick < 2 * (ax + ay) ? 1 : 2;
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      Vec3 p = rng.uniform_in_box(box_half);
      p[axis] = sign * box_half[axis];
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      return {p, n};
    }
    case Kind::Cylinder: {
      const double side = 2 * kPi * radius * height, cap = kPi * radius * radius;
      double pick = rng.uniform(0, side + 2 * cap);
      if (pick < side) {
        double a = rng.uniform(0, 2 * kPi);
        Vec3 n(std::cos(a), std::sin(a), 0);
        return {Vec3(radius * n.x(), radius * n.y(), rng.uniform(-height / 2, height / 2)), n};
      }
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double r = radius * std::sqrt(rng.uniform());
      double a = rng.uniform(0, 2 * kPi);
      return {Vec3(r * std::cos(a), r * std::sin(a), sign * height / 2), Vec3(0, 0, sign)};
    }
    case Kind::Polygon: {
      double area = std::abs(polygon_area(polygon));
      double perim = 0;
      std::vector<double> edge_len(polygon.size());
      for (size_t i = 0; i < polygon.size(); ++i) {
        edge_len[i] = (polygon[(i + 1) % polygon.size()] - polygon[i]).norm();
        perim += edge_len[i];
      }
      bool ccw = polygon_area(polygon) > 0;
      double pick = rng.uniform(0, 2 * area + perim * height);
      if (pick < 2 * area) {
        // Caps: triangle-fan area-weighted sampling.
        double sign = pick < area ? 1.0 : -1.0;
        auto tris = triangulate_polygon(polygon);
        double total = 0;
        std::vector<double> ta(tris.size());
        for (size_t i = 0; i < tris.size(); ++i) {
          const auto& t = tris[i];
          ta[i] = std::abs(polygon_area({polygon[t[0]], polygon[t[1]], polygon[t[2]]}));
          total += ta[i];
        }
        double u = rng.uniform(0, total);
        size_t ti = 0;
        for (; ti + 1 < tris.size() && u > ta[ti]; ++ti) u -= ta[ti];
        const auto& t = tris[ti];
        double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
        Vec2 p = (1 - r1) * polygon[t[0]] + r1 * (1 - r2) * polygon[t[1]] +
                 r1 * r2 * polygon[t[2]];
        return {Vec3(p.x(), p.y(), sign * height / 2), Vec3(0, 0, sign)};
      }
      double u = pick - 2 * area;
      size_t e = 0;
      for (; e + 1 < polygon.size() && u > edge_len[e] * height; ++e) u -= edge_len[e] * height;
      const Vec2 &a = polygon[e], &b = polygon[(e + 1) % polygon.size()];
      double t = rng.uniform();
      Vec2 p = a + t * (b - a);
      Vec2 dir = (b - a).normalized();
      Vec2 nrm = ccw ? Vec2(dir.y(), -dir.x()) : Vec2(-dir.y(), dir.x());
      return {Vec3(p.x(), p.y(), rng.uniform(-height / 2, height / 2)),
              Vec3(nrm.x(), nrm.y(), 0)};
    }
  }
  return {Vec3::Zero(), Vec3::UnitZ()};
}

PrimitiveShape PrimitiveShape::scaled(double s) const {
  PrimitiveShape p = *this;
  p.box_half *= s;
  p.radius *= s;
  p.height *= s;
  for (Vec2& v : p.polygon) v *= s;
  return p;
}

double ShapeSpec::bottom_z() const {
  double z = std::numeric_limits<double>::infinity();
  for (const auto& [frame, prim] : parts) {
    // Conservative: offset z minus the primitive's own vertical extent. All
    // catalog parts are axis-aligned in the shape frame, so this is exact.
    z = std::min(z, frame.position.z() + prim.bottom_z());
  }
  return z;
}

double ShapeSpec::top_z() const {
  double z = -std::numeric_limits<double>::infinity();
  for (const auto& [frame, prim] : parts) z = std::max(z, frame.position.z() + prim.top_z());
  return z;
}

std::vector<Convex> ShapeSpec::pieces(const Pose& world, double scale) const {
  std::vector<Convex> out;
  for (const auto& [frame, prim] : parts) {
    Pose f = frame;
    f.position *= scale;
    Pose w = compose(world, f);
    for (const Convex& c : prim.scaled(scale).pieces()) out.push_back(c.transformed(w));
  }
  return out;
}

std::vector<Vec2> ShapeSpec::footprint(double scale) const {
  std::vector<Vec2> pts;
  for (const auto& [frame, prim] : parts) {
    Eigen::Rotation2Dd yaw(quat_log(frame.orientation).z());
    for (const Vec2& p : prim.footprint()) {
      Vec2 q = yaw * p + Vec2(frame.position.x(), frame.position.y());
      pts.push_back(q * scale);
    }
  }
  return convex_hull_2d(std::move(pts));
}

double ShapeSpec::surface_area() const {
  double a = 0;
  for (const auto& [frame, prim] : parts) a += prim.surface_area();
  return a;
}

std::pair<Vec3, Vec3> ShapeSpec::sample_surface(Rng& rng) const {
  double total = surface_area();
  double pick = rng.uniform(0, total);
  for (const auto& [frame, prim] : parts) {
    double a = prim.surface_area();
    if (pick <= a || &prim == &parts.back().second) {
      auto [p, n] = prim.sample_surface(rng);
      return {frame.transform(p), frame.rotate(n)};
    }
    pick -= a;
  }
  return {Vec3::Zero(), Vec3::UnitZ()};
}

ShapeSpec ShapeSpec::scaled(double s) const {
  ShapeSpec out;
  out.parts.reserve(parts.size());
  for (const auto& [frame, prim] : parts) {
    Pose f = frame;
    f.position *= s;
    out.parts.emplace_back(f, prim.scaled(s));
  }
  return out;
}

const ColorDef& Palette::by_name(const std::string& name) const {
  for (const auto& c : colors)
    if (c.name == name) return c;
  throw std::out_of_range("palette: unknown color '" + name + "'");
}

std::vector<std::string> Palette::names(bool unseen) const {
  std::vector<std::string> out;
  for (const auto& c : colors)
    if (c.unseen == unseen) out.push_back(c.name);
  return out;
}

namespace {

Vec3 vec3_key(const Section& s, const std::string& key) {
  auto v = s.get_doubles(key);
  if (v.size() != 3) throw std::runtime_error("catalog: '" + key + "' needs 3 values");
  return Vec3(v[0], v[1], v[2]);
}

Pose pose_keys(const Section& s, const std::string& pos_key, const std::string& rpy_key) {
  Pose p;
  if (s.has(pos_key)) p.position = vec3_key(s, pos_key);
  if (s.has(rpy_key)) {
    Vec3 rpy = vec3_key(s, rpy_key);
    p.orientation = Quat(Eigen::AngleAxisd(deg2rad(rpy.z()), Vec3::UnitZ()) *
                         Eigen::AngleAxisd(deg2rad(rpy.y()), Vec3::UnitY()) *
                         Eigen::AngleAxisd(deg2rad(rpy.x()), Vec3::UnitX()));
  }
  return p;
}

PrimitiveShape primitive_from(const Section& s) {
  PrimitiveShape prim;
  const std::string kind = s.get("shape");
  if (kind == "box") {
    prim.kind = PrimitiveShape::Kind::Box;
    prim.box_half = vec3_key(s, "half");
  } else if (kind == "cylinder") {
    prim.kind = PrimitiveShape::Kind::Cylinder;
    prim.radius = s.get_double("radius");
    prim.height = s.get_double("height");
  } else if (kind == "polygon") {
    prim.kind = PrimitiveShape::Kind::Polygon;
    prim.height = s.get_double("height");
    auto v = s.get_doubles("points");
    if (v.size() < 6 || v.size() % 2 != 0)
      throw std::runtime_error("catalog: polygon needs an even list of >= 6 coordinates");
    for (size_t i = 0; i < v.size(); i += 2) prim.polygon.emplace_back(v[i], v[i + 1]);
    if (polygon_area(prim.polygon) < 0)
      std::reverse(prim.polygon.begin(), prim.polygon.end());
  } else {
    throw std::runtime_error("catalog: unknown shape kind '" + kind + "'");
  }
  return prim;
}

}  // namespace

const CatalogEntry& Catalog::get(const std::string& class_name) const {
  auto it = entries.find(class_name);
  if (it == entries.end()) throw std::out_of_range("catalog: unknown class '" + class_name + "'");
  return it->second;
}

std::vector<std::string> Catalog::graspable_classes() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries) {
    if (e.graspable) out.push_back(name);
    for (const auto& p : e.parts)
      if (p.graspable && !p.grasp_class.empty() &&
          std::find(out.begin(), out.end(), p.grasp_class) == out.end())
        out.push_back(p.grasp_class);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Catalog load_catalog(const std::filesystem::path& dir) {
  Catalog cat;

  TextDoc pal = TextDoc::parse_file(dir / "palette.txt");
  pal.expect_format("palette/1");
  for (const Section* s : pal.sections_named("color")) {
    ColorDef c;
    c.name = s->get("name");
    c.rgb = vec3_key(*s, "rgb");
    c.unseen = s->get_or("split", "seen") == "unseen";
    cat.palette.colors.push_back(c);
  }
  if (cat.palette.colors.empty()) throw std::runtime_error("palette: no colors");

  TextDoc doc = TextDoc::parse_file(dir / "catalog.txt");
  doc.expect_format("catalog/1");

  CatalogEntry* entry = nullptr;
  PartDef* part = nullptr;
  for (const Section& s : doc.sections) {
    if (s.name == "object") {
      std::string cls = s.get("class");
      CatalogEntry e;
      e.class_name = cls;
      e.display = s.get_or("display", cls);
      e.graspable = s.get_or("graspable", "0") == "1";
      e.is_region = s.get_or("is_region", "0") == "1";
      e.unseen = s.get_or("unseen", "0") == "1";
      if (s.has("opening_radius")) e.opening_radius = s.get_double("opening_radius");
      auto [it, inserted] = cat.entries.emplace(cls, std::move(e));
      if (!inserted) throw std::runtime_error("catalog: duplicate class '" + cls + "'");
      entry = &it->second;
      part = nullptr;
      if (s.has("shape")) entry->shape.parts.emplace_back(Pose{}, primitive_from(s));
    } else if (s.name == "piece") {
      if (!entry) throw std::runtime_error("catalog: [piece] before any [object]");
      Pose frame = pose_keys(s, "position", "rpy_deg");
      if (part)
        part->shape.parts.emplace_back(frame, primitive_from(s));
      else
        entry->shape.parts.emplace_back(frame, primitive_from(s));
    } else if (s.name == "part") {
      if (!entry) throw std::runtime_error("catalog: [part] before any [object]");
      PartDef p;
      p.id = s.get("id");
      p.parent = s.get_or("parent", "");
      p.frame = pose_keys(s, "position", "rpy_deg");
      p.graspable = s.get_or("graspable", "0") == "1";
      p.grasp_class = s.get_or("grasp_class", "");
      if (s.has("joint_id")) {
        PartDef::JointDef j;
        j.id = s.get("joint_id");
        j.prismatic = s.get("joint_kind") == "prismatic";
        j.origin = pose_keys(s, "joint_position", "joint_rpy_deg");
        j.axis = vec3_key(s, "joint_axis").normalized();
        auto r = s.get_doubles("joint_range");
        if (r.size() != 2 || !(r[0] < r[1]))
          throw std::runtime_error("catalog: joint_range must be [lo hi]");
        j.lo = r[0];
        j.hi = r[1];
        p.joint = j;
      }
      entry->parts.push_back(std::move(p));
      part = &entry->parts.back();
    } else if (s.name == "detector") {
      if (!entry) throw std::runtime_error("catalog: [detector] before any [object]");
      entry->detector = Box3(pose_keys(s, "position", "rpy_deg"), vec3_key(s, "half"));
    } else if (s.name == "slot") {
      if (!entry) throw std::runtime_error("catalog: [slot] before any [object]");
      entry->slots[s.get("class")] = pose_keys(s, "position", "rpy_deg");
    } else {
      throw std::runtime_error("catalog: unknown section [" + s.name + "]");
    }
  }

  for (auto& [name, e] : cat.entries) {
    if (!e.articulated() && e.shape.parts.empty())
      throw std::runtime_error("catalog: class '" + name + "' has no geometry");
    for (auto& p : e.parts)
      if (p.shape.parts.empty())
        throw std::runtime_error("catalog: part '" + p.id + "' of '" + name + "' has no geometry");
  }
  return cat;
}

const Catalog& default_catalog() {
  static const Catalog cat = load_catalog(data_dir());
  return cat;
}

double nearest_scale_bucket(double s) {
  double best = kScaleBuckets[0];
  for (double b : kScaleBuckets)
    if (std::abs(s - b) < std::abs(s - best)) best = b;
  return best;
}

}  // namespace taskforge
