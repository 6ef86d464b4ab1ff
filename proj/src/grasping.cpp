#include "taskforge/grasping.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "taskforge/config.hpp"
#include "taskforge/textdoc.hpp"

namespace taskforge {

namespace {

constexpr double kFingerClearance = 1.5e-3;  // air gap between finger face and object
constexpr double kFingerThickness = 0.01;    // finger body along the closing axis
constexpr int kMinSupport = 5;               // closing-region points required
const double kQualityCos = std::cos(deg2rad(30.0));

// Deterministic farthest-point seed selection (ties go to the lower index).
std::vector<int> farthest_point_seeds(const std::vector<Vec3>& pts, int count) {
  const int n = static_cast<int>(pts.size());
  count = std::min(count, n);
  std::vector<int> seeds;
  seeds.reserve(count);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  int current = 0;
  for (int s = 0; s < count; ++s) {
    seeds.push_back(current);
    int next = 0;
    double best = -1;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (pts[i] - pts[current]).squaredNorm());
      if (dist[i] > best) {
        best = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return seeds;
}

Vec3 canonical_sign(const Vec3& v) {
  int major = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(v[k]) > std::abs(v[major])) major = k;
  }
  return v[major] < 0 ? Vec3(-v) : v;
}

Quat canonical_quat(Quat q) {
  const double comps[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double c : comps) {
    if (c > 0) break;
    if (c < 0) {
      q.coeffs() = -q.coeffs();
      break;
    }
  }
  return q;
}

struct Candidate {
  GraspPose grasp;
};

// Runs the clearance / support / width tests for a grasp at surface point p
// with outward normal n and closing axis c. Returns false when rejected.
bool evaluate_grasp(const SurfaceCloud& cloud, const std::vector<LocalFrame>& frames,
                    const GripperSpec& g, const Vec3& p, const Vec3& n, const Vec3& c,
                    GraspPose* out) {
  const Vec3 x = c.cross(n);  // across the finger faces

  const double half_close = g.max_opening / 2;
  const double half_face = g.finger_width / 2;
  const double half_depth = g.finger_length / 2;

  double lo_c = 0, hi_c = 0;
  int support = 0, aligned = 0;
  std::vector<int> region;
  region.reserve(64);
  for (int i = 0; i < static_cast<int>(cloud.points.size()); ++i) {
    const Vec3 d = cloud.points[i] - p;
    const double dc = d.dot(c);
    if (std::abs(dc) > half_close || std::abs(d.dot(x)) > half_face ||
        std::abs(d.dot(n)) > half_depth) {
      continue;
    }
    if (support == 0) {
      lo_c = hi_c = dc;
    } else {
      lo_c = std::min(lo_c, dc);
      hi_c = std::max(hi_c, dc);
    }
    ++support;
    if (std::abs(frames[i].normal.dot(c)) >= kQualityCos) ++aligned;
  }
  if (support < kMinSupport) return false;

  const double width = hi_c - lo_c;
  if (width > g.max_opening) return false;
  const double finger_face = width / 2 + kFingerClearance;  // inner finger face offset
  if (finger_face > g.max_opening / 2) return false;

  // The jaws close symmetrically, so center the hand over the gripped span
  // rather than over the seed point.
  const Vec3 pc = p + c * ((lo_c + hi_c) / 2);

  // Finger volumes and the palm slab must be free of surface points.
  const double finger_center = finger_face + kFingerThickness / 2;
  const Vec3 palm_center = pc + n * (half_depth + g.palm_depth / 2);
  auto inside_box = [](const Vec3& d, const Vec3& ax, const Vec3& ay, const Vec3& az,
                       double hx, double hy, double hz) {
    return std::abs(d.dot(ax)) <= hx && std::abs(d.dot(ay)) <= hy && std::abs(d.dot(az)) <= hz;
  };
  for (const Vec3& q : cloud.points) {
    for (double side : {-1.0, 1.0}) {
      const Vec3 d = q - (pc + c * (side * finger_center));
      if (inside_box(d, c, x, n, kFingerThickness / 2, half_face, half_depth)) return false;
    }
    const Vec3 dp = q - palm_center;
    if (inside_box(dp, c, x, n, half_close + 0.01, 0.015, g.palm_depth / 2)) return false;
  }

  Eigen::Matrix3d rot;
  rot.col(0) = x;
  rot.col(1) = c;
  rot.col(2) = n;
  out->local.position = pc - n * half_depth;  // fingertip midpoint, half a finger deep
  out->local.orientation = canonical_quat(Quat(rot));
  out->width = width;
  out->quality = static_cast<double>(aligned) / support;
  return true;
}

const CatalogEntry& source_entry(const Catalog& catalog, const GraspDictionary::Entry& e) {
  return catalog.get(e.source);
}

const ShapeSpec& source_shape(const Catalog& catalog, const GraspDictionary::Entry& e) {
  const CatalogEntry& src = source_entry(catalog, e);
  if (e.part.empty()) return src.shape;
  for (const PartDef& part : src.parts) {
    if (part.id == e.part) return part.shape;
  }
  throw std::runtime_error("grasp dictionary: unknown part '" + e.part + "' in " + e.source);
}

bool same_grasps(const std::vector<GraspPose>& a, const std::vector<GraspPose>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].local.position != b[i].local.position) return false;
    if (a[i].local.orientation.coeffs() != b[i].local.orientation.coeffs()) return false;
    if (a[i].width != b[i].width || a[i].quality != b[i].quality) return false;
  }
  return true;
}

}  // namespace

const GripperSpec& default_gripper() {
  static const GripperSpec g;
  return g;
}

std::vector<LocalFrame> estimate_normals(const std::vector<Vec3>& points, int k,
                                         const std::vector<Vec3>* analytic) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw DegenerateNeighborhood("cloud has fewer than 3 points");
  k = std::min(k, n - 1);

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= n;

  std::vector<LocalFrame> frames(n);
  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) order[j] = {(points[j] - points[i]).squaredNorm(), j};
    std::partial_sort(order.begin(), order.begin() + k + 1, order.end());

    Vec3 mean = Vec3::Zero();
    for (int s = 1; s <= k; ++s) mean += points[order[s].second];
    mean /= k;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int s = 1; s <= k; ++s) {
      const Vec3 d = points[order[s].second] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.eigenvalues()(1) < 1e-12) {
      throw DegenerateNeighborhood("rank-deficient neighborhood at point " + std::to_string(i));
    }
    Vec3 normal = eig.eigenvectors().col(0);
    const Vec3 reference = analytic ? (*analytic)[i] : Vec3(points[i] - centroid);
    if (normal.dot(reference) < 0) normal = -normal;
    frames[i].normal = normal;
    frames[i].principal = canonical_sign(eig.eigenvectors().col(2));
  }
  return frames;
}

std::vector<GraspPose> generate_candidates(const SurfaceCloud& cloud, const GripperSpec& gripper,
                                           int seed_count, int keep) {
  auto frames = estimate_normals(cloud.points, 16, &cloud.normals);
  auto seeds = farthest_point_seeds(cloud.points, seed_count);

  std::vector<GraspPose> accepted;
  for (int idx : seeds) {
    const Vec3& p = cloud.points[idx];
    const Vec3& n = frames[idx].normal;
    const Vec3 axes[2] = {frames[idx].principal, n.cross(frames[idx].principal)};
    for (const Vec3& raw : axes) {
      Vec3 c = raw - raw.dot(n) * n;  // tangential closing axis
      if (c.squaredNorm() < 1e-12) continue;
      c = canonical_sign(c.normalized());
      GraspPose grasp;
      if (evaluate_grasp(cloud, frames, gripper, p, n, c, &grasp)) accepted.push_back(grasp);
    }
  }

  auto lex_less = [](const GraspPose& a, const GraspPose& b) {
    if (a.quality != b.quality) return a.quality > b.quality;
    for (int k = 0; k < 3; ++k) {
      if (a.local.position[k] != b.local.position[k]) return a.local.position[k] < b.local.position[k];
    }
    const Quat &qa = a.local.orientation, &qb = b.local.orientation;
    const double ca[4] = {qa.w(), qa.x(), qa.y(), qa.z()};
    const double cb[4] = {qb.w(), qb.x(), qb.y(), qb.z()};
    for (int k = 0; k < 4; ++k) {
      if (ca[k] != cb[k]) return ca[k] < cb[k];
    }
    return false;
  };
  std::sort(accepted.begin(), accepted.end(), lex_less);
  if (static_cast<int>(accepted.size()) > keep) accepted.resize(keep);
  return accepted;
}

SurfaceCloud sample_cloud(const ShapeSpec& shape, double scale, int count, Rng& rng) {
  SurfaceCloud cloud;
  cloud.points.reserve(count);
  cloud.normals.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto [p, n] = shape.sample_surface(rng);
    cloud.points.push_back(p * scale);
    cloud.normals.push_back(n);
  }
  return cloud;
}

int cloud_count_for(const ShapeSpec& shape, double scale) {
  const double area = shape.surface_area() * scale * scale;
  return std::clamp(static_cast<int>(std::lround(area * 8000.0)), 1200, 3000);
}

std::string dictionary_key(const std::string& grasp_class, double bucket) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "@%.2f", bucket);
  return grasp_class + buf;
}

const GraspDictionary::Entry* GraspDictionary::find(const std::string& grasp_class,
                                                    double bucket) const {
  const std::string key = dictionary_key(grasp_class, nearest_scale_bucket(bucket));
  for (const Entry& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

GraspDictionary build_dictionary(const Catalog& catalog, std::uint64_t seed) {
  GraspDictionary dict;
  dict.seed = seed;

  struct Job {
    std::string key, source, part;
    double bucket;
    const ShapeSpec* shape;
  };
  std::vector<Job> jobs;
  for (const auto& [name, entry] : catalog.entries) {
    if (entry.articulated()) {
      std::vector<std::string> seen;
      for (const PartDef& part : entry.parts) {
        if (!part.graspable) continue;
        if (std::find(seen.begin(), seen.end(), part.grasp_class) != seen.end()) continue;
        seen.push_back(part.grasp_class);
        jobs.push_back({dictionary_key(part.grasp_class, 1.0), name, part.id, 1.0, &part.shape});
      }
    } else if (entry.graspable) {
      for (double bucket : kScaleBuckets) {
        jobs.push_back({dictionary_key(name, bucket), name, "", bucket, &entry.shape});
      }
    }
  }

  for (const Job& job : jobs) {
    GraspDictionary::Entry e;
    e.key = job.key;
    e.source = job.source;
    e.part = job.part;
    e.bucket = job.bucket;
    e.cloud_seed = derive_seed(seed, job.key);
    e.cloud_count = cloud_count_for(*job.shape, job.bucket);
    Rng rng(e.cloud_seed);
    SurfaceCloud cloud = sample_cloud(*job.shape, job.bucket, e.cloud_count, rng);
    e.grasps = generate_candidates(cloud, default_gripper());
    if (e.grasps.size() < 8) {
      throw NoGraspFound(job.key + ": only " + std::to_string(e.grasps.size()) +
                         " feasible grasps");
    }
    dict.entries.push_back(std::move(e));
  }
  return dict;
}

void save_dictionary(const GraspDictionary& dict, const std::filesystem::path& path) {
  TextDoc doc;
  doc.header.set("format", "graspdict/1");
  doc.header.set("seed", std::to_string(dict.seed));
  for (const auto& e : dict.entries) {
    Section sec;
    sec.name = "entry";
    sec.set("key", e.key);
    sec.set("source", e.source);
    if (!e.part.empty()) sec.set("part", e.part);
    sec.set("bucket", format_double(e.bucket));
    sec.set("cloud_seed", std::to_string(e.cloud_seed));
    sec.set("cloud_count", std::to_string(e.cloud_count));
    doc.sections.push_back(std::move(sec));
    for (const GraspPose& g : e.grasps) {
      Section gs;
      gs.name = "grasp";
      gs.set("position", join_doubles(g.local.position.data(), 3));
      const double q[4] = {g.local.orientation.w(), g.local.orientation.x(),
                           g.local.orientation.y(), g.local.orientation.z()};
      gs.set("orientation", join_doubles(q, 4));
      gs.set("width", format_double(g.width));
      gs.set("quality", format_double(g.quality));
      doc.sections.push_back(std::move(gs));
    }
  }
  doc.write_file(path.string());
}

GraspDictionary load_dictionary(const std::filesystem::path& path, const Catalog& catalog,
                                bool verify) {
  TextDoc doc = TextDoc::parse_file(path.string());
  doc.expect_format("graspdict/1");
  GraspDictionary dict;
  dict.seed = std::stoull(doc.header.get("seed"));

  for (const Section& sec : doc.sections) {
    if (sec.name == "entry") {
      GraspDictionary::Entry e;
      e.key = sec.get("key");
      e.source = sec.get("source");
      e.part = sec.get_or("part", "");
      e.bucket = sec.get_double("bucket");
      e.cloud_seed = std::stoull(sec.get("cloud_seed"));
      e.cloud_count = static_cast<int>(sec.get_int("cloud_count"));
      dict.entries.push_back(std::move(e));
    } else if (sec.name == "grasp") {
      if (dict.entries.empty()) throw TextDocError(path.string() + ": grasp before entry");
      GraspPose g;
      auto p = sec.get_doubles("position");
      auto q = sec.get_doubles("orientation");
      if (p.size() != 3 || q.size() != 4) throw TextDocError(path.string() + ": bad grasp pose");
      g.local.position = Vec3(p[0], p[1], p[2]);
      g.local.orientation = Quat(q[0], q[1], q[2], q[3]);
      g.width = sec.get_double("width");
      g.quality = sec.get_double("quality");
      dict.entries.back().grasps.push_back(g);
    }
  }

  for (const auto& e : dict.entries) {
    if (e.grasps.size() < 8) {
      throw NoGraspFound(e.key + ": dictionary entry has only " + std::to_string(e.grasps.size()) +
                         " grasps");
    }
  }
  if (verify) {
    for (const auto& e : dict.entries) {
      const ShapeSpec& shape = source_shape(catalog, e);
      Rng rng(e.cloud_seed);
      SurfaceCloud cloud = sample_cloud(shape, e.bucket, e.cloud_count, rng);
      auto regenerated = generate_candidates(cloud, default_gripper());
      if (!same_grasps(regenerated, e.grasps)) {
        throw std::runtime_error("grasp dictionary self-check failed for " + e.key);
      }
    }
  }
  return dict;
}

const GraspDictionary& default_dictionary() {
  static const GraspDictionary dict =
      load_dictionary(data_dir() / "grasp_dictionary.txt", default_catalog(), false);
  return dict;
}

}  // namespace taskforge
