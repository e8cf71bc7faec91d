#ifndef DRONECATCH_AGENT_H_
#define DRONECATCH_AGENT_H_

#include "dronecatch/physics.h"
#include "dronecatch/rng.h"
#include "dronecatch/vec3.h"

namespace dronecatch {

// Drone state. d is the basket center, the point the planner steers; the
// body hangs below the basket. phi/theta are camera pitch/yaw.
struct AgentState {
  Vec3 d;
  Vec3 v;
  Vec3 a;  // last realized acceleration
  double phi = 0.0;
  double theta = 0.0;
};

struct DroneSpec {
  double max_accel = 25.0;     // m/s^2, per component
  double max_velocity = 40.0;  // m/s
  Vec3 body_extent{0.47, 0.14, 0.37};
  Vec3 basket_extent{0.3, 0.2, 0.3};  // sits on the body top, centered on d
  // Std of per-component acceleration noise as a fraction of max_accel.
  double movement_noise_sigma = 0.0;

  void Validate() const;
};

// Scales the acceleration cap; fraction 0.6 turns +-25 into +-15 m/s^2.
DroneSpec WithMobility(DroneSpec drone, double fraction);

// Noise-free kinematic update shared by StepAgent and the planner rollout:
// d' = d + v dt, v' = v + accel dt, then v' renormalized to max_velocity.
inline void AdvanceKinematics(Vec3& d, Vec3& v, const Vec3& accel, double max_velocity,
                              double dt) {
  d = d + v * dt;
  v = v + accel * dt;
  double speed = Norm(v);
  if (speed > max_velocity) v *= max_velocity / speed;
}

// Drone motion: clamp the command to +-max_accel, add movement noise, then
//   d' = d + v dt,  v' = v + a dt,
// renormalizing v' to max_velocity. `rng` may be null when the noise is zero.
AgentState StepAgent(const AgentState& state, const Vec3& action, const DroneSpec& drone,
                     double dt, Rng* rng);

// Keeps the drone body (and basket) inside the room, zeroing any outward
// velocity component at a clamped face.
AgentState ConfineToRoom(const AgentState& state, const RoomGeometry& room,
                         const DroneSpec& drone);

// True iff the object center lies inside the basket box centered on d.
bool CheckCatch(const Vec3& drone_position, const Vec3& object_position,
                const DroneSpec& drone);

struct CameraOrientation {
  double theta = 0.0;  // yaw about +y, zero looking along +z
  double phi = 0.0;    // pitch, positive looking up
};

// Points the camera along p = object - agent using full-quadrant arctangents:
//   theta = atan2(p_x, p_z),  phi = atan2(p_y, hypot(p_x, p_z)).
// Throws kDegenerateDirection when p = 0.
CameraOrientation CameraAngles(const Vec3& object_pos, const Vec3& agent_pos);

// Unit viewing direction for a camera orientation.
Vec3 CameraAxis(double phi, double theta);

}  // namespace dronecatch

#endif  // DRONECATCH_AGENT_H_
