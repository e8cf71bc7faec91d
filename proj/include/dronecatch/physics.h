#ifndef DRONECATCH_PHYSICS_H_
#define DRONECATCH_PHYSICS_H_

#include <string>
#include <vector>

#include "dronecatch/vec3.h"

namespace dronecatch {

// Tangential velocity scale applied on every contact.
inline constexpr double kTangentialFriction = 0.95;

// Physical catalog entry. The object is modeled as a sphere of `radius`;
// angular_drag is carried for completeness and has no effect on dynamics.
struct ObjectSpec {
  std::string id;
  double mass = 1.0;         // kg
  double bounciness = 0.0;   // restitution in [0, 1]
  double drag = 0.0;         // 1/s
  double angular_drag = 0.0;
  double radius = 0.05;      // m

  void Validate() const;
};

struct ObjectState {
  Vec3 o;  // position
  Vec3 v;  // velocity
  Vec3 a;  // acceleration
};

struct Box {
  Vec3 min;
  Vec3 max;

  bool Contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
};

struct RoomGeometry {
  Vec3 min_corner;
  Vec3 max_corner;
  std::vector<Box> obstacles;

  void Validate() const;
  double floor() const { return min_corner.y; }

  // 6 x 3 x 6 m living room with a sofa and a coffee table.
  static RoomGeometry Default();
};

struct SimConfig {
  double gravity = 9.81;            // m/s^2 along -y
  double control_dt = 0.02;         // s
  int physics_substeps = 4;
  double rest_speed_epsilon = 0.05; // m/s
  double friction = kTangentialFriction;
  // A floor contact that rebounds with vertical speed >= rest_speed_epsilon
  // keeps the throw alive; otherwise the object has reached the ground.
  bool continue_after_bounce = true;

  double substep_dt() const { return control_dt / physics_substeps; }
  Vec3 gravity_vector() const { return {0.0, -gravity, 0.0}; }
  void Validate() const;
};

// One step of the discrete motion equation with multiplicative drag:
//   o' = o + v dt,  v' = (v + a dt) * max(0, 1 - drag dt),  a' = (0, -g, 0).
ObjectState IntegrateObjectStep(const ObjectState& state, const ObjectSpec& spec,
                                double dt, double gravity = 9.81);

struct CollisionResult {
  ObjectState state;
  bool collided = false;
  bool floor_contact = false;
};

// Pushes the collision sphere out of any wall or obstacle it penetrates,
// reflecting the normal velocity with restitution and scaling the tangential
// velocity by `friction`. Throws kGeometryDegenerate when the sphere
// penetrates opposing faces at once.
CollisionResult ResolveCollision(const ObjectState& state, const ObjectSpec& spec,
                                 const RoomGeometry& room,
                                 double friction = kTangentialFriction);

enum class Terminal { kNone, kGround, kRest, kStepCap };

const char* TerminalName(Terminal t);

// Substep-resolution object simulator shared by SimulateTrajectory and the
// episode runner, so agent-free reference trajectories and live episodes
// evolve identically.
class ObjectSimulator {
 public:
  ObjectSimulator(const ObjectSpec& spec, const RoomGeometry& room,
                  const SimConfig& cfg, const ObjectState& initial);

  struct Substep {
    bool collided = false;  // penetration resolved during this substep
    Terminal terminal = Terminal::kNone;
  };

  // Advances one physics substep. Must not be called after termination.
  Substep Advance();

  const ObjectState& state() const { return state_; }
  int collision_count() const { return collision_count_; }
  Terminal terminal() const { return terminal_; }

 private:
  const ObjectSpec* spec_;
  const RoomGeometry* room_;
  SimConfig cfg_;
  ObjectState state_;
  bool in_contact_ = false;
  int collision_count_ = 0;
  Terminal terminal_ = Terminal::kNone;
};

struct Trajectory {
  // states[0] is the initial state; states[k] the state after control step k.
  // If the throw terminated mid-step the last entry is the terminal substep.
  std::vector<ObjectState> states;
  std::vector<bool> collided;  // per control step, collided[0] is unused
  int collision_count = 0;
  Terminal terminal = Terminal::kStepCap;
};

Trajectory SimulateTrajectory(const ObjectSpec& spec, const ObjectState& initial,
                              const RoomGeometry& room, const SimConfig& cfg,
                              int max_steps);

}  // namespace dronecatch

#endif  // DRONECATCH_PHYSICS_H_
