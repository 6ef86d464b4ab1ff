#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Core>

namespace taskforge {

// All random draws in the engine go through this wrapper so that streams are
// pinned to the mt19937_64 bit sequence and not to implementation-defined
// standard-library distributions. Identical seeds give identical bytes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) using the top 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range, rejection-free bias is acceptable at 64-bit width.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller; pinned rather than std::normal_distribution.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  Eigen::Vector3d uniform_in_box(const Eigen::Vector3d& half) {
    return {uniform(-half.x(), half.x()), uniform(-half.y(), half.y()),
            uniform(-half.z(), half.z())};
  }

  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  // Shoemake's method for uniform rotations.
  Eigen::Vector4d unit_quaternion_wxyz() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    return {b * std::cos(2 * M_PI * u3), a * std::sin(2 * M_PI * u2),
            a * std::cos(2 * M_PI * u2), b * std::sin(2 * M_PI * u3)};
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a, used to derive per-episode seeds from (master seed, labels, index).
inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& a,
                                 const std::string& b = "", std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, &master, sizeof(master));
  h = fnv1a(h, a.data(), a.size());
  h = fnv1a(h, "|", 1);
  h = fnv1a(h, b.data(), b.size());
  h = fnv1a(h, &index, sizeof(index));
  return h;
}

}  // namespace taskforge
