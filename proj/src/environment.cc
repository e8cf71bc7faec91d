#include "dronecatch/environment.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

constexpr int kMaxPlacementAttempts = 1000;

// Stream indices under DeriveSeed(seed, .).
constexpr uint64_t kSpawnStream = 1;
constexpr uint64_t kLaunchStream = 2;
constexpr uint64_t kObservationStream = 3;
constexpr uint64_t kMovementStream = 4;
constexpr uint64_t kControllerStream = 5;

double Radians(double deg) { return deg * std::numbers::pi / 180.0; }

bool RangeValid(const Range& r) { return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi; }

double Draw(const Range& r, Rng& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

bool InsideHorizontal(const Vec3& p, const RoomGeometry& room, double margin) {
  return p.x >= room.min_corner.x + margin && p.x <= room.max_corner.x - margin &&
         p.z >= room.min_corner.z + margin && p.z <= room.max_corner.z - margin;
}

}  // namespace

void LauncherConfig::Validate(const RoomGeometry& room) const {
  bool ok = RangeValid(force) && force.lo > 0.0 && RangeValid(elevation_deg) &&
            elevation_deg.lo >= -90.0 && elevation_deg.hi <= 90.0 &&
            RangeValid(azimuth_deg) && azimuth_deg.lo >= -180.0 &&
            azimuth_deg.hi <= 180.0 && horizontal_distance > 0.0 &&
            impulse_duration > 0.0 && wall_margin >= 0.0 && height > 0.0 &&
            room.min_corner.y + height < room.max_corner.y;
  if (!ok) throw Error(ErrorKind::kInvalidArgument, "invalid launcher config");
}

const char* CameraModeName(CameraMode mode) {
  switch (mode) {
    case CameraMode::kEstimated: return "rotating";
    case CameraMode::kFixed: return "fixed";
    case CameraMode::kGroundTruth: return "ground-truth";
  }
  return "?";
}

CameraMode ParseCameraMode(const std::string& name) {
  if (name == "rotating" || name == "estimated") return CameraMode::kEstimated;
  if (name == "fixed") return CameraMode::kFixed;
  if (name == "ground-truth" || name == "gt") return CameraMode::kGroundTruth;
  throw Error(ErrorKind::kInvalidArgument, "unknown camera mode '" + name + "'");
}

void EpisodeConfig::Validate() const {
  object.Validate();
  room.Validate();
  drone.Validate();
  sim.Validate();
  launcher.Validate(room);
  if (max_control_steps < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_control_steps must be >= 1");
  }
  if (!(agent_height > room.min_corner.y && agent_height < room.max_corner.y)) {
    throw Error(ErrorKind::kInvalidArgument, "agent height outside the room");
  }
  if (!(observation.sigma_obs >= 0.0) ||
      !(observation.fov_deg > 0.0 && observation.fov_deg <= 180.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid observation model");
  }
}

LaunchSample SampleLaunch(const LauncherConfig& launcher, Rng& rng) {
  LaunchSample s;
  s.force = Draw(launcher.force, rng);
  s.elevation_deg = Draw(launcher.elevation_deg, rng);
  s.azimuth_deg = Draw(launcher.azimuth_deg, rng);
  return s;
}

ObjectState LaunchObject(const EpisodeConfig& cfg, const Vec3& launcher_pos,
                         const Vec3& drone_pos, const LaunchSample& sample) {
  double bearing = std::atan2(drone_pos.x - launcher_pos.x, drone_pos.z - launcher_pos.z);
  double yaw = bearing + Radians(sample.azimuth_deg);
  double elev = Radians(sample.elevation_deg);
  double speed = sample.force * cfg.launcher.impulse_duration / cfg.object.mass;
  ObjectState s;
  s.o = launcher_pos;
  s.v = {speed * std::cos(elev) * std::sin(yaw), speed * std::sin(elev),
         speed * std::cos(elev) * std::cos(yaw)};
  s.a = cfg.sim.gravity_vector();
  return s;
}

Spawn SpawnEpisode(const EpisodeConfig& cfg) {
  cfg.Validate();
  const RoomGeometry& room = cfg.room;
  const double margin = cfg.launcher.wall_margin;
  const double dist = cfg.launcher.horizontal_distance;
  Rng rng(DeriveSeed(cfg.seed, kSpawnStream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    Vec3 launcher{
        room.min_corner.x + margin + (room.max_corner.x - room.min_corner.x - 2 * margin) * unit(rng),
        room.min_corner.y + cfg.launcher.height,
        room.min_corner.z + margin + (room.max_corner.z - room.min_corner.z - 2 * margin) * unit(rng)};
    double bearing = 2.0 * std::numbers::pi * unit(rng);
    Vec3 drone{launcher.x + dist * std::sin(bearing), room.min_corner.y + cfg.agent_height,
               launcher.z + dist * std::cos(bearing)};
    if (!InsideHorizontal(launcher, room, margin) || !InsideHorizontal(drone, room, margin)) {
      continue;
    }
    Spawn sp;
    sp.launcher = launcher;
    sp.agent.d = drone;
    CameraOrientation cam = CameraAngles(launcher, drone);
    sp.agent.theta = cam.theta;
    sp.agent.phi = cam.phi;
    Rng launch_rng(DeriveSeed(cfg.seed, kLaunchStream));
    sp.launch = SampleLaunch(cfg.launcher, launch_rng);
    sp.object = LaunchObject(cfg, launcher, drone, sp.launch);
    return sp;
  }
  std::ostringstream msg;
  msg << "no launcher/drone placement " << dist << " m apart after "
      << kMaxPlacementAttempts << " attempts";
  throw Error(ErrorKind::kPlacementInfeasible, msg.str());
}

const char* OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kCaught: return "Caught";
    case Outcome::kGround: return "Ground";
    case Outcome::kRest: return "Rest";
    case Outcome::kStepCap: return "StepCap";
  }
  return "?";
}

Outcome ParseOutcome(const std::string& name) {
  if (name == "Caught") return Outcome::kCaught;
  if (name == "Ground") return Outcome::kGround;
  if (name == "Rest") return Outcome::kRest;
  if (name == "StepCap") return Outcome::kStepCap;
  throw Error(ErrorKind::kParse, "unknown outcome '" + name + "'");
}

void RewardSpec::Validate() const {
  if (!(success_bonus >= 0.0) || !(distance_coefficient >= 0.0) ||
      !(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid reward spec");
  }
}

std::vector<double> StepRewards(const EpisodeRecord& record, const RewardSpec& spec) {
  std::vector<double> r(record.steps.size());
  for (size_t t = 0; t < r.size(); ++t) {
    const StepLog& s = record.steps[t];
    r[t] = -spec.distance_coefficient * Distance(s.agent.d, s.object.o);
  }
  if (record.outcome == Outcome::kCaught && !r.empty()) r.back() += spec.success_bonus;
  return r;
}

std::vector<double> DiscountedSums(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

double EpisodeReward(const EpisodeRecord& record, const RewardSpec& spec) {
  std::vector<double> r = StepRewards(record, spec);
  if (r.empty()) return 0.0;
  return DiscountedSums(r, 1.0).front();
}

Trajectory ReferenceTrajectory(const EpisodeConfig& cfg) {
  Spawn sp = SpawnEpisode(cfg);
  return SimulateTrajectory(cfg.object, sp.object, cfg.room, cfg.sim, cfg.max_control_steps);
}

EpisodeRecord RunEpisode(const EpisodeConfig& cfg, Controller& controller,
                         uint64_t run_seed, const RewardSpec& reward) {
  Spawn sp = SpawnEpisode(cfg);
  const Vec3 origin = sp.agent.d;
  const double dt = cfg.sim.control_dt;
  const int substeps = cfg.sim.physics_substeps;

  const uint64_t base = DeriveSeed(cfg.seed, MixSeed(run_seed) ^ 0xA5A5A5A5ull);
  Rng obs_rng(DeriveSeed(base, kObservationStream));
  Rng move_rng(DeriveSeed(base, kMovementStream));
  Rng ctl_rng(DeriveSeed(base, kControllerStream));

  EpisodeContext ctx;
  ctx.cfg = &cfg;
  ctx.frame_origin = origin;
  ctx.run_seed = run_seed;
  ctx.rng = &ctl_rng;
  {
    Trajectory ref = SimulateTrajectory(cfg.object, sp.object, cfg.room, cfg.sim,
                                        cfg.max_control_steps);
    for (const ObjectState& s : ref.states) ctx.reference.push_back(s.o - origin);
    while (static_cast<int>(ctx.reference.size()) < cfg.max_control_steps + 1) {
      ctx.reference.push_back(ctx.reference.back());
    }
  }

  EpisodeRecord record;
  record.seed = cfg.seed;
  record.run_seed = run_seed;
  record.object_id = cfg.object.id;
  record.frame_origin = origin;

  ObjectSimulator sim(cfg.object, cfg.room, cfg.sim, sp.object);
  AgentState agent = sp.agent;
  std::vector<Observation> observations;
  observations.push_back(Observe(agent, sim.state().o, cfg.observation, obs_rng, 0, origin));
  {
    StepLog first;
    first.agent = agent;
    first.object = sim.state();
    first.observation = observations.back();
    record.steps.push_back(first);
  }

  auto finish = [&](Outcome outcome) {
    record.outcome = outcome;
    record.collision_count = sim.collision_count();
    record.reward = EpisodeReward(record, reward);
    return record;
  };
  auto terminal_outcome = [](Terminal t) {
    return t == Terminal::kRest ? Outcome::kRest : Outcome::kGround;
  };

  if (sim.terminal() != Terminal::kNone) return finish(terminal_outcome(sim.terminal()));

  controller.Reset(ctx);
  for (int k = 0; k < cfg.max_control_steps; ++k) {
    ControlInput input;
    input.step = k;
    input.observations = observations;
    input.agent = agent;
    input.agent.d = agent.d - origin;
    Command cmd;
    try {
      cmd = controller.Act(input);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "episode seed " << cfg.seed << " step " << k << ": " << e.what();
      throw Error(ErrorKind::kControllerFailure, msg.str());
    }
    StepLog& current = record.steps.back();
    current.action = cmd.accel;
    current.estimate = cmd.estimate;
    current.forecast = std::move(cmd.forecast);
    current.trace = std::move(cmd.trace);

    AgentState next = StepAgent(agent, cmd.accel, cfg.drone, dt, &move_rng);
    next = ConfineToRoom(next, cfg.room, cfg.drone);
    if (cfg.camera == CameraMode::kEstimated && cmd.camera) {
      next.theta = cmd.camera->theta;
      next.phi = cmd.camera->phi;
    }

    bool collided = false;
    bool caught = false;
    int s = 1;
    Vec3 drone_at = next.d;
    for (; s <= substeps; ++s) {
      collided |= sim.Advance().collided;
      double frac = static_cast<double>(s) / substeps;
      drone_at = agent.d + (next.d - agent.d) * frac;
      if (CheckCatch(drone_at, sim.state().o, cfg.drone)) {
        caught = true;
        break;
      }
      if (sim.terminal() != Terminal::kNone) break;
    }
    const bool ended = caught || sim.terminal() != Terminal::kNone;
    if (ended) {
      next.d = drone_at;
      record.ended_mid_step = s < substeps;
    }
    if (cfg.camera == CameraMode::kGroundTruth) {
      Vec3 p = sim.state().o - next.d;
      if (p.x != 0.0 || p.y != 0.0 || p.z != 0.0) {
        CameraOrientation cam = CameraAngles(sim.state().o, next.d);
        next.theta = cam.theta;
        next.phi = cam.phi;
      }
    }
    agent = next;
    observations.push_back(
        Observe(agent, sim.state().o, cfg.observation, obs_rng, k + 1, origin));

    StepLog entry;
    entry.t = k + 1;
    entry.agent = agent;
    entry.object = sim.state();
    entry.observation = observations.back();
    entry.collided = collided;
    record.steps.push_back(std::move(entry));

    if (caught) return finish(Outcome::kCaught);
    if (sim.terminal() != Terminal::kNone) return finish(terminal_outcome(sim.terminal()));
  }
  return finish(Outcome::kStepCap);
}

const char* DifficultyName(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "Easy";
    case Difficulty::kMedium: return "Medium";
    case Difficulty::kDifficult: return "Difficult";
  }
  return "?";
}

Difficulty ClassifyDifficulty(int collision_count) {
  if (collision_count <= 0) return Difficulty::kEasy;
  if (collision_count == 1) return Difficulty::kMedium;
  return Difficulty::kDifficult;
}

Difficulty ClassifyDifficulty(const EpisodeRecord& record) {
  return ClassifyDifficulty(record.collision_count);
}

KalmanState KalmanInit(std::span<const EpisodeRecord> records) {
  std::vector<std::vector<Vec3>> tracks;
  tracks.reserve(records.size());
  for (const EpisodeRecord& rec : records) {
    size_t n = rec.steps.size();
    // a mid-step terminal entry would contribute a partial displacement
    if (rec.ended_mid_step && n > 1) --n;
    std::vector<Vec3> track;
    track.reserve(n);
    for (size_t i = 0; i < n; ++i) track.push_back(rec.steps[i].object.o);
    tracks.push_back(std::move(track));
  }
  return KalmanInit(std::span<const std::vector<Vec3>>(tracks));
}

}  // namespace dronecatch
