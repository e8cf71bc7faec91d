#include "dronecatch/agent.h"

#include <algorithm>
#include <cmath>

#include "dronecatch/error.h"

namespace dronecatch {

void DroneSpec::Validate() const {
  bool ok = max_accel > 0.0 && max_velocity > 0.0 && body_extent.x > 0.0 &&
            body_extent.y > 0.0 && body_extent.z > 0.0 && basket_extent.x > 0.0 &&
            basket_extent.y > 0.0 && basket_extent.z > 0.0 &&
            movement_noise_sigma >= 0.0;
  if (!ok) throw Error(ErrorKind::kInvalidArgument, "invalid drone spec");
}

DroneSpec WithMobility(DroneSpec drone, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mobility fraction must be in (0, 1]");
  }
  drone.max_accel *= fraction;
  return drone;
}

AgentState StepAgent(const AgentState& state, const Vec3& action, const DroneSpec& drone,
                     double dt, Rng* rng) {
  Vec3 accel{std::clamp(action.x, -drone.max_accel, drone.max_accel),
             std::clamp(action.y, -drone.max_accel, drone.max_accel),
             std::clamp(action.z, -drone.max_accel, drone.max_accel)};
  if (drone.movement_noise_sigma > 0.0) {
    if (rng == nullptr) {
      throw Error(ErrorKind::kInvalidArgument, "movement noise requires an rng");
    }
    std::normal_distribution<double> noise(0.0, drone.movement_noise_sigma * drone.max_accel);
    accel.x += noise(*rng);
    accel.y += noise(*rng);
    accel.z += noise(*rng);
  }
  AgentState next = state;
  AdvanceKinematics(next.d, next.v, accel, drone.max_velocity, dt);
  next.a = accel;
  return next;
}

AgentState ConfineToRoom(const AgentState& state, const RoomGeometry& room,
                         const DroneSpec& drone) {
  // Basket centered on d, body directly below it.
  const double half_x = 0.5 * std::max(drone.body_extent.x, drone.basket_extent.x);
  const double half_z = 0.5 * std::max(drone.body_extent.z, drone.basket_extent.z);
  const double above = 0.5 * drone.basket_extent.y;
  const double below = above + drone.body_extent.y;
  Vec3 lo = room.min_corner + Vec3{half_x, below, half_z};
  Vec3 hi = room.max_corner - Vec3{half_x, above, half_z};
  AgentState out = state;
  for (int i = 0; i < 3; ++i) {
    if (out.d[i] < lo[i]) {
      out.d[i] = lo[i];
      if (out.v[i] < 0.0) out.v[i] = 0.0;
    } else if (out.d[i] > hi[i]) {
      out.d[i] = hi[i];
      if (out.v[i] > 0.0) out.v[i] = 0.0;
    }
  }
  return out;
}

bool CheckCatch(const Vec3& drone_position, const Vec3& object_position,
                const DroneSpec& drone) {
  Vec3 rel = object_position - drone_position;
  return std::abs(rel.x) <= 0.5 * drone.basket_extent.x &&
         std::abs(rel.y) <= 0.5 * drone.basket_extent.y &&
         std::abs(rel.z) <= 0.5 * drone.basket_extent.z;
}

CameraOrientation CameraAngles(const Vec3& object_pos, const Vec3& agent_pos) {
  Vec3 p = object_pos - agent_pos;
  if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) {
    throw Error(ErrorKind::kDegenerateDirection, "object coincides with agent");
  }
  return {std::atan2(p.x, p.z), std::atan2(p.y, std::hypot(p.x, p.z))};
}

Vec3 CameraAxis(double phi, double theta) {
  double c = std::cos(phi);
  return {std::sin(theta) * c, std::sin(phi), std::cos(theta) * c};
}

}  // namespace dronecatch
