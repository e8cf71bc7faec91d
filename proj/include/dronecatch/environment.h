#ifndef DRONECATCH_ENVIRONMENT_H_
#define DRONECATCH_ENVIRONMENT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dronecatch/agent.h"
#include "dronecatch/perception.h"
#include "dronecatch/physics.h"
#include "dronecatch/rng.h"

namespace dronecatch {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct LauncherConfig {
  Range force{40.0, 60.0};          // N
  Range elevation_deg{45.0, 60.0};
  Range azimuth_deg{-30.0, 30.0};   // about the launcher->drone bearing
  double height = 1.8;              // m
  double horizontal_distance = 2.0; // launcher to drone, m
  double impulse_duration = 0.05;   // s
  double wall_margin = 0.5;         // keep-out band along the walls, m

  void Validate(const RoomGeometry& room) const;
};

// How the camera is pointed each step.
enum class CameraMode {
  kEstimated,    // the controller points it at its own prediction
  kFixed,        // frozen at the spawn orientation
  kGroundTruth,  // points at the true object position
};

const char* CameraModeName(CameraMode mode);
CameraMode ParseCameraMode(const std::string& name);

struct EpisodeConfig {
  uint64_t seed = 0;
  ObjectSpec object;
  RoomGeometry room = RoomGeometry::Default();
  DroneSpec drone;
  LauncherConfig launcher;
  SimConfig sim;
  ObservationModel observation;
  CameraMode camera = CameraMode::kEstimated;
  double agent_height = 1.0;  // drone spawn altitude (basket center), m
  int max_control_steps = 50;

  void Validate() const;
};

struct LaunchSample {
  double force = 0.0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

struct Spawn {
  Vec3 launcher;
  AgentState agent;
  ObjectState object;  // already launched
  LaunchSample launch;
};

LaunchSample SampleLaunch(const LauncherConfig& launcher, Rng& rng);

// Initial object state for a launch from `launcher_pos` toward `drone_pos`.
// |v0| = force * impulse_duration / mass.
ObjectState LaunchObject(const EpisodeConfig& cfg, const Vec3& launcher_pos,
                         const Vec3& drone_pos, const LaunchSample& sample);

// Places launcher and drone, points the camera at the launcher and launches
// the object. Deterministic in cfg.seed. Throws kPlacementInfeasible.
Spawn SpawnEpisode(const EpisodeConfig& cfg);

// Executed-action provenance kept for policy-gradient training.
struct PolicyTrace {
  Eigen::VectorXd features;
  Eigen::VectorXd draw;  // pre-clamp sample whose log-density gets credit
};

// Everything below is expressed in the agent start frame (world minus the
// drone's spawn position).
struct EpisodeContext {
  const EpisodeConfig* cfg = nullptr;
  Vec3 frame_origin;
  // True object positions per control step, padded to max_control_steps + 1
  // with the final position. Only the oracle may look at it.
  std::vector<Vec3> reference;
  uint64_t run_seed = 0;
  Rng* rng = nullptr;  // controller-owned stream
};

struct ControlInput {
  int step = 0;
  std::span<const Observation> observations;  // t = 0..step
  AgentState agent;
};

struct Command {
  Vec3 accel;
  std::optional<CameraOrientation> camera;
  std::optional<ObjectState> estimate;  // current object state estimate
  std::vector<Vec3> forecast;           // positions the planner tracked
  std::optional<PolicyTrace> trace;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void Reset(const EpisodeContext& ctx) = 0;
  virtual Command Act(const ControlInput& input) = 0;
};

// Always commands zero acceleration.
class NullController : public Controller {
 public:
  void Reset(const EpisodeContext&) override {}
  Command Act(const ControlInput&) override { return {}; }
};

enum class Outcome { kCaught, kGround, kRest, kStepCap };

const char* OutcomeName(Outcome outcome);
Outcome ParseOutcome(const std::string& name);

// Entry t holds the states and observation at step t and the command issued
// at t. `collided` refers to the transition into t. The final entry carries
// no command.
struct StepLog {
  int t = 0;
  AgentState agent;    // world frame
  ObjectState object;  // world frame
  Observation observation;
  Vec3 action;
  bool collided = false;
  std::optional<ObjectState> estimate;
  std::vector<Vec3> forecast;
  std::optional<PolicyTrace> trace;
};

struct EpisodeRecord {
  uint64_t seed = 0;
  uint64_t run_seed = 0;
  std::string object_id;
  Vec3 frame_origin;
  std::vector<StepLog> steps;
  Outcome outcome = Outcome::kStepCap;
  int collision_count = 0;
  // True when the last entry was taken at a substep before the control-step
  // boundary (catch or termination mid-step).
  bool ended_mid_step = false;
  double reward = 0.0;
};

struct RewardSpec {
  double success_bonus = 1.0;
  double distance_coefficient = 0.01;
  double gamma = 0.99;

  void Validate() const;
};

// r_t = -c ||d_t - o_t|| for every logged step, plus the bonus on the last
// step of a caught episode.
std::vector<double> StepRewards(const EpisodeRecord& record, const RewardSpec& spec);

// G_t = r_t + gamma G_{t+1}, accumulated backward.
std::vector<double> DiscountedSums(std::span<const double> rewards, double gamma);

double EpisodeReward(const EpisodeRecord& record, const RewardSpec& spec);

// Runs one throw. Observation noise, movement noise and the controller's
// stream derive from (cfg.seed, run_seed). Controller exceptions are rethrown
// as kControllerFailure.
EpisodeRecord RunEpisode(const EpisodeConfig& cfg, Controller& controller,
                         uint64_t run_seed = 0, const RewardSpec& reward = {});

// Agent-free object trajectory for cfg, positions in world coordinates.
Trajectory ReferenceTrajectory(const EpisodeConfig& cfg);

enum class Difficulty { kEasy, kMedium, kDifficult };

const char* DifficultyName(Difficulty d);
Difficulty ClassifyDifficulty(int collision_count);
Difficulty ClassifyDifficulty(const EpisodeRecord& record);

// Kalman prototype from the full control-step object tracks of `records`.
KalmanState KalmanInit(std::span<const EpisodeRecord> records);

}  // namespace dronecatch

#endif  // DRONECATCH_ENVIRONMENT_H_
