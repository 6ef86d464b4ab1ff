#include "taskforge/observation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "taskforge/convex.hpp"
#include "taskforge/rng.hpp"

namespace taskforge {

namespace {

constexpr std::uint64_t kCloudSalt = 0x0b5e97edULL;

std::array<std::uint8_t, 3> to_u8(const Vec3& rgb) {
  auto ch = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  return {ch(rgb.x()), ch(rgb.y()), ch(rgb.z())};
}

// Density -> sample count via the summed AABB areas of the pieces; crude but
// monotone and deterministic, which is all the observation needs.
int count_for(const std::vector<Convex>& pieces, double density) {
  double area = 0;
  for (const auto& piece : pieces) {
    auto [lo, hi] = piece.bounds();
    Vec3 d = hi - lo;
    area += 2.0 * (d.x() * d.y() + d.y() * d.z() + d.z() * d.x());
  }
  return std::clamp<int>(static_cast<int>(std::lround(density * area)), 24, 4000);
}

struct Candidate {
  Vec3 p, n;
  std::array<std::uint8_t, 3> rgb;
  std::uint16_t object;
};

// Conservative segment vs AABB pre-test before the exact convex query.
bool slab_hit(const Vec3& a, const Vec3& b, const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0, t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    double d = b[i] - a[i];
    if (std::abs(d) < 1e-12) {
      if (a[i] < lo[i] || a[i] > hi[i]) return false;
      continue;
    }
    double u = (lo[i] - a[i]) / d, v = (hi[i] - a[i]) / d;
    if (u > v) std::swap(u, v);
    t0 = std::max(t0, u);
    t1 = std::min(t1, v);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

std::vector<Pose> default_cameras(const Scene& scene) {
  double z0 = scene.table_z();
  Vec3 focus(0.46, 0.0, z0 + 0.10);
  auto look = [&](const Vec3& eye) {
    Mat3 basis = basis_from_z((focus - eye).normalized());
    return Pose{eye, Quat(basis)};
  };
  return {
      look({1.25, 0.0, z0 + 0.55}),   // front
      look({0.46, 0.95, z0 + 0.55}),  // left
      look({0.46, -0.95, z0 + 0.55}), // right
      look({0.46, 0.0, z0 + 1.05}),   // overhead
  };
}

FusedCloud fuse_observation(const Scene& scene, const std::vector<Pose>& cameras,
                            double density) {
  FusedCloud cloud;
  cloud.ids.push_back("table");
  std::vector<Candidate> cand;

  // Tabletop patch under the workspace; objects rest on it, so it is the
  // occlusion floor and the empty background of top views.
  {
    Box3 ws = default_workspace(scene);
    Rng rng(derive_seed(kCloudSalt, "table"));
    double area = 4.0 * ws.half.x() * ws.half.y();
    int n = std::clamp<int>(static_cast<int>(std::lround(density * area)), 64, 4000);
    for (int i = 0; i < n; ++i) {
      Vec3 p(ws.center.position.x() + (2 * rng.uniform() - 1) * ws.half.x(),
             ws.center.position.y() + (2 * rng.uniform() - 1) * ws.half.y(), scene.table_z());
      cand.push_back({p, Vec3(0, 0, 1), {168, 168, 168}, 0});
    }
  }

  for (const auto& obj : scene.objects()) {
    auto idx = static_cast<std::uint16_t>(cloud.ids.size());
    cloud.ids.push_back(obj.id);
    std::array<std::uint8_t, 3> rgb{150, 150, 150};
    if (!obj.color.empty()) rgb = to_u8(scene.catalog().palette.by_name(obj.color).rgb);
    Rng rng(derive_seed(kCloudSalt, obj.id, obj.class_name));
    int n = count_for(scene.object_pieces(obj), density);
    for (auto& [p, nrm] : scene.surface_points(obj, n, rng))
      cand.push_back({p, nrm, rgb, idx});
  }

  std::vector<Convex> pieces = scene.world_pieces();
  std::vector<std::pair<Vec3, Vec3>> boxes;
  boxes.reserve(pieces.size());
  for (const auto& piece : pieces) boxes.push_back(piece.bounds());

  for (const auto& c : cand) {
    bool seen = false;
    for (const auto& cam : cameras) {
      Vec3 ray = c.p - cam.position;
      double len = ray.norm();
      if (len < 1e-9 || c.n.dot(ray) >= 0.0) continue;  // behind or edge-on
      Vec3 b = c.p - ray * (1e-4 / len);                // stop short of the surface
      bool blocked = false;
      for (std::size_t i = 0; i < pieces.size() && !blocked; ++i) {
        if (!slab_hit(cam.position, b, boxes[i].first, boxes[i].second)) continue;
        blocked = segment_hits_convex(cam.position, b, pieces[i]);
      }
      if (!blocked) {
        seen = true;
        break;
      }
    }
    if (seen) cloud.points.push_back({c.p, c.n, c.rgb, c.object});
  }
  return cloud;
}

Box3 default_workspace(const Scene& scene) {
  return Box3{Pose{Vec3(0.46, 0.0, scene.table_z() + 0.25), Quat::Identity()},
              Vec3(0.21, 0.34, 0.25)};
}

TopView top_view(const FusedCloud& cloud, const Box3& workspace, int width, int height) {
  TopView view;
  view.width = width;
  view.height = height;
  int cells = width * height;
  view.heights.assign(cells, std::numeric_limits<float>::quiet_NaN());
  view.object.assign(cells, TopView::kEmptyCell);
  view.rgb.assign(cells, {0, 0, 0});

  Vec3 c = workspace.center.position, h = workspace.half;
  double x0 = c.x() - h.x(), y0 = c.y() - h.y(), z0 = c.z() - h.z();
  double px = 2.0 * h.x() / height, py = 2.0 * h.y() / width;
  std::vector<float> best(cells, -std::numeric_limits<float>::infinity());

  for (const auto& pt : cloud.points) {
    if (pt.position.z() < z0 - 0.02) continue;
    int row = static_cast<int>(std::floor((pt.position.x() - x0) / px));
    int col = static_cast<int>(std::floor((pt.position.y() - y0) / py));
    if (row < 0 || row >= height || col < 0 || col >= width) continue;
    auto z = static_cast<float>(pt.position.z() - z0);
    int cell = view.cell(row, col);
    if (z <= best[cell]) continue;
    best[cell] = z;
    view.heights[cell] = z;
    view.object[cell] = pt.object;
    view.rgb[cell] = pt.rgb;
  }
  return view;
}

void write_topview_pgm(const TopView& view, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << view.width << " " << view.height << "\n255\n";
  for (int r = 0; r < view.height; ++r)
    for (int c = 0; c < view.width; ++c) {
      std::uint8_t v = 0;
      if (!view.empty(r, c)) {
        double t = std::clamp(view.heights[view.cell(r, c)] / 0.5, 0.0, 1.0);
        v = static_cast<std::uint8_t>(1 + std::lround(t * 254.0));
      }
      out.put(static_cast<char>(v));
    }
}

void write_topview_ppm(const TopView& view, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P6\n" << view.width << " " << view.height << "\n255\n";
  for (int r = 0; r < view.height; ++r)
    for (int c = 0; c < view.width; ++c) {
      auto rgb = view.rgb[view.cell(r, c)];
      out.put(static_cast<char>(rgb[0]));
      out.put(static_cast<char>(rgb[1]));
      out.put(static_cast<char>(rgb[2]));
    }
}

}  // namespace taskforge
