#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskforge/geometry.hpp"
#include "taskforge/scene.hpp"

namespace taskforge {

// One fused surface sample: world position, outward normal, object colour and
// the index of the owning object in FusedCloud::ids.
struct CloudPoint {
  Vec3 position;
  Vec3 normal;
  std::array<std::uint8_t, 3> rgb{128, 128, 128};
  std::uint16_t object = 0;
};

struct FusedCloud {
  std::vector<std::string> ids;  // object id table, index ties points to objects
  std::vector<CloudPoint> points;
};

// Static viewpoints around the workspace (front, left, right, overhead).
// Only the eye position participates in visibility; orientation is carried
// for consumers that want extrinsics.
std::vector<Pose> default_cameras(const Scene& scene);

// Merged multi-view cloud: every object surface is sampled at `density`
// points per square metre, and a sample survives if at least one camera sees
// it front-facing and unoccluded.  The result is independent of camera order
// and deterministic for a given scene.
FusedCloud fuse_observation(const Scene& scene, const std::vector<Pose>& cameras,
                            double density = 3000.0);

// Orthographic top-down projection of a fused cloud onto a fixed grid.
// Each cell keeps the highest point that lands in it; cells nobody hits are
// marked empty (object == kEmptyCell, height NaN).
struct TopView {
  static constexpr std::uint16_t kEmptyCell = 0xffff;

  int width = 160;   // columns, along +y
  int height = 128;  // rows, along +x
  std::vector<float> heights;                    // metres above the grid floor
  std::vector<std::uint16_t> object;             // index into cloud ids
  std::vector<std::array<std::uint8_t, 3>> rgb;  // colour of the kept point

  int cell(int row, int col) const { return row * width + col; }
  bool empty(int row, int col) const { return object[cell(row, col)] == kEmptyCell; }
};

// Grid bounds used by default: the tabletop workspace with headroom.
Box3 default_workspace(const Scene& scene);

TopView top_view(const FusedCloud& cloud, const Box3& workspace, int width = 160,
                 int height = 128);

// Inspection exports: PGM carries the height field, PPM the colours.
void write_topview_pgm(const TopView& view, const std::filesystem::path& path);
void write_topview_ppm(const TopView& view, const std::filesystem::path& path);

}  // namespace taskforge
