#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskforge/catalog.hpp"
#include "taskforge/rng.hpp"

namespace taskforge {

struct NoGraspFound : std::runtime_error {
  explicit NoGraspFound(const std::string& what) : std::runtime_error("NoGraspFound: " + what) {}
};
struct DegenerateNeighborhood : std::runtime_error {
  explicit DegenerateNeighborhood(const std::string& what)
      : std::runtime_error("DegenerateNeighborhood: " + what) {}
};

// Parallel-jaw gripper. The grasp (tool) frame sits at the fingertip midpoint:
// -z is the approach direction, y the closing axis, x across the finger faces.
struct GripperSpec {
  double finger_length = 0.045;  // m, along the approach
  double finger_width = 0.018;   // m, across the closing axis
  double max_opening = 0.08;     // m, between the inner finger faces
  double palm_depth = 0.06;      // m, body behind the finger bases
};
const GripperSpec& default_gripper();

// Object-frame surface samples with analytic outward normals.
struct SurfaceCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

// Differential frame at a sample, from k-NN PCA: `normal` is the smallest-
// variance direction (sign-matched to the analytic normal when given, else
// pointed away from the cloud centroid), `principal` the largest-variance one.
struct LocalFrame {
  Vec3 normal;
  Vec3 principal;
};

// Throws DegenerateNeighborhood when a neighborhood is rank-deficient
// (collinear samples).
std::vector<LocalFrame> estimate_normals(const std::vector<Vec3>& points, int k = 16,
                                         const std::vector<Vec3>* analytic = nullptr);

// One antipodal grasp in the object frame. `width` is the extent of the
// closing-region points along the closing axis, `quality` the fraction of
// those points whose normals are within 30 degrees of the closing line.
struct GraspPose {
  Pose local;
  double width = 0;
  double quality = 0;
};

// Seeds farthest-point samples, tries the two tangential closing axes at each
// seed, and keeps the `keep` best candidates that pass the finger-clearance,
// support-count and width tests.
std::vector<GraspPose> generate_candidates(const SurfaceCloud& cloud, const GripperSpec& gripper,
                                           int seed_count = 200, int keep = 32);

// Deterministic cloud for a shape at a given scale.
SurfaceCloud sample_cloud(const ShapeSpec& shape, double scale, int count, Rng& rng);
// Sample budget: proportional to the scaled surface area, clamped to a range
// that keeps the PCA stable without blowing up the k-NN cost.
int cloud_count_for(const ShapeSpec& shape, double scale);

struct GraspDictionary {
  struct Entry {
    std::string key;     // "<grasp class>@<bucket>"
    std::string source;  // catalog class the cloud was sampled from
    std::string part;    // part id for articulated sources, "" otherwise
    double bucket = 1.0;
    std::uint64_t cloud_seed = 0;
    int cloud_count = 0;
    std::vector<GraspPose> grasps;
  };

  std::uint64_t seed = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& grasp_class, double bucket) const;
};

std::string dictionary_key(const std::string& grasp_class, double bucket);

// Builds entries for every graspable catalog class (all scale buckets) and
// every articulated grasp class (unit bucket). Throws NoGraspFound when an
// entry ends up with fewer than 8 grasps.
GraspDictionary build_dictionary(const Catalog& catalog, std::uint64_t seed);

void save_dictionary(const GraspDictionary& dict, const std::filesystem::path& path);
// With verify set, re-samples every entry's cloud from its recorded seed and
// re-runs candidate generation; any mismatch with the stored grasps throws.
GraspDictionary load_dictionary(const std::filesystem::path& path, const Catalog& catalog,
                                bool verify = false);
// Bundled dictionary (data/grasp_dictionary.txt), loaded once without verify.
const GraspDictionary& default_dictionary();

}  // namespace taskforge
