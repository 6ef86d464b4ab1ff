#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskforge/kinematics.hpp"
#include "taskforge/language.hpp"
#include "taskforge/planner.hpp"
#include "taskforge/tasks.hpp"

namespace taskforge {

// Demonstration synthesis gave up (planning/IK failed on every retry).
struct GenerationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A saved episode failed checksum or structural validation; the message names
// the offending file.
struct CorruptEpisode : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One 50 ms state sample.
struct Frame {
  std::int64_t t_ms = 0;
  JointVec q = JointVec::Zero();
  Pose ee;                     // tool pose; always FK(q)
  std::uint8_t gripper = 0;    // 0 open, 1 closed
  std::int32_t waypoint = 0;   // waypoint currently being served
  std::vector<Pose> object_poses;    // parallel to EpisodeRecord::object_ids
  std::vector<double> joint_values;  // parallel to EpisodeRecord::joint_columns
};

// Initial state of one scene object; enough to rebuild the scene for audits.
struct ObjectSnapshot {
  std::string id, class_name, color;
  double scale = 1.0;
  bool fixture = false;
  Pose pose;
  std::vector<std::pair<std::string, double>> joints;
};

struct EpisodeRecord {
  TaskCategory category{};
  std::string variation;  // cell kind: color/relative/shape/size/direction/action
  std::string value;      // folder value within the cell
  bool unseen = false;
  std::uint64_t seed = 0;

  InstructionSet instructions;
  SlotMap slots;
  std::string target, target_part;
  double unlock_fraction = 0;

  std::vector<ObjectSnapshot> objects;
  std::vector<UnitTask> units;
  // Object pose at each unit's completion (audits point constraints that the
  // 50 ms samples straddle).
  std::vector<Pose> unit_end_object;
  SuccessCondition success;
  std::optional<ParticleSet> particles;  // initial states

  std::vector<std::string> object_ids;  // pose column order in frames
  std::vector<std::pair<std::string, std::string>> joint_columns;
  std::vector<Waypoint> waypoints;
  std::vector<double> waypoint_times;  // arrival, seconds
  std::vector<Frame> steps;
  bool outcome = false;
};

// Plans and executes a full demonstration: grasps come from the bundled
// dictionary (pre-grasp offset backed off along the approach, lift after
// close), M1 legs run free planning to a sampled goal, M2 legs track their
// constraint manifolds, articulated joints sweep in lockstep with the tool.
// State is sampled every 50 ms; carried objects ride the tool, releases
// settle, particles advance on M2 frames.  Draws all samples from `rng` and
// retries transient planning failures twice before throwing GenerationFailed.
EpisodeRecord execute_and_record(const TaskInstance& task, const ArmModel& arm, Rng& rng);

// Structural + physical re-check of a record: FK replay matches stored tool
// poses, cadence is exactly 50 ms, waypoint indices are monotone, M2 frames
// and unit end poses satisfy their constraints, particles replay to the same
// outcome, and the recomputed success flag matches.  Returns one line per
// violation; empty means clean.
std::vector<std::string> audit_episode(const EpisodeRecord& rec, const ArmModel& arm);

// Layout: root/<category>_<variation>/<value>/episodeNNNN/
std::filesystem::path episode_dir(const std::filesystem::path& root, const EpisodeRecord& rec,
                                  int index);

// Writes metadata/waypoints/steps plus a checksum manifest.  save_episode
// picks the next free index under root; save_episode_at writes exactly there.
std::filesystem::path save_episode(const EpisodeRecord& rec, const std::filesystem::path& root);
void save_episode_at(const EpisodeRecord& rec, const std::filesystem::path& dir);

// Verifies checksums before parsing; throws CorruptEpisode naming the file.
EpisodeRecord load_episode(const std::filesystem::path& dir);

// Episode counts per split/category/variation compared against the bundled
// cell matrix (scaled by the manifest's scale when the root carries one).
struct DatasetStats {
  struct Row {
    std::string split;
    TaskCategory category{};
    std::string variation;
    long expected = 0;
    long found = 0;
    bool ok() const { return expected == found; }
  };
  std::vector<Row> rows;
  long total = 0;
  long discarded = 0;  // from the manifest when present
  bool all_ok() const;
};
DatasetStats dataset_stats(const std::filesystem::path& root);

}  // namespace taskforge
