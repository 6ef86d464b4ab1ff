#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "taskforge/language.hpp"
#include "taskforge/scene.hpp"
#include "taskforge/unit_tasks.hpp"

namespace taskforge {

struct InvalidVariation : std::runtime_error {
  explicit InvalidVariation(const std::string& w) : std::runtime_error(w) {}
};
struct UnknownToken : std::runtime_error {
  explicit UnknownToken(const std::string& w) : std::runtime_error(w) {}
};

enum class TaskCategory { PickPlace, Stack, Drop, ShapeSorter, Pour, Wipe, Drawer, Door };

// Folder token: pick, stack, drop, sorter, pour, wipe, drawer, door.
std::string to_string(TaskCategory c);
TaskCategory category_from(const std::string& name);
const std::vector<TaskCategory>& all_categories();

// Variation kinds valid for a category ("action" covers the articulated
// level/action/amount combinations).
const std::vector<std::string>& variations_of(TaskCategory c);

struct VariationSpec {
  std::string kind;  // color | size | shape | relative | direction | action
  // Chosen values by attribute role: color, size, relation, shape, direction,
  // level, action, amount. Values present before build_task are kept;
  // missing ones are sampled.
  std::map<std::string, std::string> tokens;
  bool unseen = false;
  // Dataset folder token for the variation value ("green", "fully_close_top").
  std::string value;
};

// --- success conditions -------------------------------------------------------
// Triggered when an accepted object's geometric center lies inside the box.
// The box is given in the frame object's local metric coordinates (already
// scaled); world placement follows the frame object's pose.
struct ObjectDetector {
  std::string frame_id;
  Box3 box;
  std::vector<std::string> accepted;
};
struct JointDetector {
  std::string object, joint;
  double lo = 0, hi = 0;
};
// Fraction of particles transferred/removed must reach the threshold.
struct ParticleDetector {
  double threshold = 0.5;
};
using SuccessCondition = std::variant<ObjectDetector, JointDetector, ParticleDetector>;

// World position of the reference point the detectors test.
Vec3 geometric_center(const Scene& scene, const SceneObject& obj);

// --- particles -----------------------------------------------------------------
struct ParticleSet {
  enum class Kind { Pour, Wipe };
  enum State : std::uint8_t { Active = 0, Done = 1, Lost = 2 };

  Kind kind = Kind::Pour;
  std::string owner;   // pour: source mug; wipe: target area
  std::string other;   // pour: container mug; wipe: sponge
  // Pour: positions in the source mug frame; wipe: world positions on the area.
  std::vector<Vec3> points;
  std::vector<std::uint8_t> state;

  int count(State s) const;
  double fraction(State s) const { return points.empty() ? 0.0 : double(count(s)) / points.size(); }
};

// --- task instance ---------------------------------------------------------------
struct TaskInstance {
  TaskCategory category{};
  VariationSpec variation;
  std::uint64_t seed = 0;
  Scene scene;

  std::vector<UnitTask> units;
  // One goal per M1/M2 unit, in unit order (Control units carry none).
  std::vector<GoalCondition> goals;
  SuccessCondition success;
  SlotMap slots;  // instruction slot values, complete except noted below

  std::string target;       // object the Control unit grasps (G-G reference)
  std::string target_part;  // part id on articulated targets, else empty

  std::optional<ParticleSet> particles;

  // Joint sweep backing an articulated M2 unit, parallel to `units`.
  struct JointMove {
    std::string object, joint;
    double from = 0, to = 0;
  };
  std::vector<std::optional<JointMove>> joint_moves;

  // Door interlock: the swing joint is held while the door is closed until
  // the latch reaches this fraction of its range (0 = no interlock).
  double unlock_fraction = 0;
};

// Builds the scene, unit sequence, goals and instruction slots for one
// episode. `variation.kind` selects the cell; any pre-set tokens are kept.
// Deterministic given (category, variation, rng state).
TaskInstance build_task(TaskCategory category, VariationSpec variation, Rng& rng);

// The pour tilt unit depends on where the carry leg actually ended; fills in
// the final unit's path constraint and goal from the current scene state.
void finalize_pour_tilt(TaskInstance& task);

// True while the task's door interlock pins the swing joint.
bool door_locked(const TaskInstance& task);

bool success_check(const Scene& scene, const std::optional<ParticleSet>& particles,
                   const SuccessCondition& condition);

// Advances particle bookkeeping for one recorded frame (pour transfer/spill,
// wipe removal) from the current scene state.
void particle_step(ParticleSet& particles, const Scene& scene);

// (open|close, fully|slightly) -> target window as fractions of joint range.
// Open windows are measured from the low end, close windows likewise (close
// targets decrease the joint value toward its low end).
std::pair<double, double> amount_target(TaskCategory category, const std::string& action,
                                        const std::string& amount);

// Instruction rendering for a built task (wires the template library).
InstructionSet instructions_for(const TaskInstance& task);

// "pick_color" — dataset folder for a matrix cell.
std::string task_folder(TaskCategory c, const std::string& variation_kind);

// --- episode matrix ---------------------------------------------------------------
struct TaskMatrix {
  struct Cell {
    TaskCategory category{};
    std::string variation;
    std::map<std::string, int> counts;  // split name -> episodes
  };
  std::vector<Cell> cells;

  static TaskMatrix load(const std::filesystem::path& file);
  static const TaskMatrix& bundled();  // data/task_matrix.txt

  TaskMatrix scaled(double factor) const;
  int total(const std::string& split) const;
  const Cell* find(TaskCategory c, const std::string& variation) const;
};

}  // namespace taskforge
