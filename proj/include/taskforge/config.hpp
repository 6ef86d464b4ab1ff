#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace taskforge {

// Engine-wide tunables. Everything that behaves like a tolerance or budget
// lives here with its default pinned, so tests and tools agree on the numbers.
struct EngineConfig {
  // Constraint audit tolerances (used by validate and the M2 audit).
  double audit_position_tol = 5e-3;   // m
  double audit_angle_tol_deg = 2.0;   // deg

  // Inverse kinematics.
  double ik_position_tol = 1e-3;      // m
  double ik_angle_tol_deg = 0.5;      // deg
  int ik_max_iters = 200;

  // Joint-space planner.
  double plan_step = 0.3;             // rad, extend step
  double plan_edge_resolution = 0.02; // rad, edge validation spacing
  int plan_shortcut_attempts = 100;
  double plan_budget_seconds = 5.0;
  // Deterministic stand-in for the wall-clock budget: the tree search gives up
  // after this many extend iterations so reruns stay byte-identical.
  int plan_max_iters = 20000;
  double plan_densify_step = 0.05;    // rad, max per-joint spacing in output
  double collision_margin = 3e-3;     // m
  double cartesian_continuity = 0.2;  // rad, max per-joint jump in follow_cartesian
  double joint_speed = 0.8;           // rad/s, max per-joint speed for timing

  // Particle effects.
  int particle_count = 50;
  int pour_transfer_per_step = 5;
  double pour_tilt_deg = 75.0;
  double wipe_capture_dist = 5e-3;    // m above surface

  // Evaluation preprocessing.
  double snap_position_tol = 0.05;    // m
  double snap_angle_tol_deg = 10.0;   // deg
  double pregrasp_offset = 0.08;      // m along grasp approach
  double postgrasp_lift = 0.08;       // m straight up

  // Episode recording.
  std::int64_t frame_ms = 50;         // fixed cadence, integer milliseconds

  // Articulated "amount" targets as fractions of the joint range.
  double open_fully_lo = 0.85, open_fully_hi = 1.00;
  double open_slightly_lo = 0.25, open_slightly_hi = 0.40;
  double close_fully_lo = 0.00, close_fully_hi = 0.05;
  double close_slightly_lo = 0.60, close_slightly_hi = 0.75;

  // Harness.
  double agent_timeout_seconds = 30.0;
  int max_steps_per_unit = 2;         // max steps = max_steps_per_unit * units + 2

  // Spatial-relation margin for left/right/front/rear checks.
  double relation_margin = 0.02;      // m

  // Generation quota: discard rate above this fails the run.
  double discard_quota = 0.20;

  static const EngineConfig& instance();
};

// Per-run settings, resolved as: defaults < config file < environment < CLI.
struct RunConfig {
  std::uint64_t seed = 1;
  double scale = 1.0;                 // dataset size multiplier
  std::string out_dir = "dataset";
  int workers = 1;
  std::vector<std::string> categories;  // empty = all

  // Merge keys from a config/1 file. Throws std::runtime_error on bad input.
  void load_file(const std::filesystem::path& path);
  // Merge TASKFORGE_SEED, TASKFORGE_SCALE, TASKFORGE_OUT, TASKFORGE_WORKERS,
  // TASKFORGE_CATEGORIES when present.
  void apply_env();
};

// Directory holding the bundled data files (arm model, grasp dictionary,
// language templates, ...). Resolved from $TASKFORGE_DATA, falling back to
// the path baked in at build time.
std::filesystem::path data_dir();

}  // namespace taskforge
