#include "dronecatch/physics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "dronecatch/error.h"

namespace dronecatch {
namespace {

struct Contact {
  Vec3 normal;   // unit, pointing out of the surface toward the sphere center
  double depth;  // penetration depth along normal
  bool floor;
};

Vec3 AxisVector(int axis, double sign) {
  Vec3 n;
  n[axis] = sign;
  return n;
}

bool BoxValid(const Box& b) {
  return IsFinite(b.min) && IsFinite(b.max) && b.min.x < b.max.x &&
         b.min.y < b.max.y && b.min.z < b.max.z;
}

// Appends the contact between a sphere and an axis-aligned solid box, if any.
// Faces flush with the room boundary are treated as continuing through it, so
// a sphere dipping below the floor next to a sofa is pushed sideways, not down.
void BoxContact(const Vec3& p, double r, Box box, const Box& room,
                std::vector<Contact>* contacts) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (box.min[i] <= room.min[i]) box.min[i] = -kInf;
    if (box.max[i] >= room.max[i]) box.max[i] = kInf;
  }
  Vec3 q{std::clamp(p.x, box.min.x, box.max.x),
         std::clamp(p.y, box.min.y, box.max.y),
         std::clamp(p.z, box.min.z, box.max.z)};
  Vec3 diff = p - q;
  double dist = Norm(diff);
  if (dist > 0.0) {
    if (dist < r) contacts->push_back({diff / dist, r - dist, false});
    return;
  }
  // center inside the box: exit through the nearest face
  int best_axis = 0;
  double best_sign = -1.0;
  double best_gap = kInf;
  for (int i = 0; i < 3; ++i) {
    double lo = p[i] - box.min[i];
    double hi = box.max[i] - p[i];
    if (lo < best_gap) {
      best_gap = lo;
      best_axis = i;
      best_sign = -1.0;
    }
    if (hi < best_gap) {
      best_gap = hi;
      best_axis = i;
      best_sign = 1.0;
    }
  }
  contacts->push_back({AxisVector(best_axis, best_sign), r + best_gap, false});
}

}  // namespace

void ObjectSpec::Validate() const {
  if (!(mass > 0.0) || !(bounciness >= 0.0 && bounciness <= 1.0) ||
      !(drag >= 0.0) || !(angular_drag >= 0.0) || !(radius > 0.0)) {
    std::ostringstream msg;
    msg << "object spec '" << id << "' out of range (mass=" << mass
        << ", bounciness=" << bounciness << ", drag=" << drag
        << ", radius=" << radius << ")";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
}

void RoomGeometry::Validate() const {
  Box room{min_corner, max_corner};
  if (!BoxValid(room)) {
    throw Error(ErrorKind::kInvalidArgument, "room corners not ordered");
  }
  for (const Box& b : obstacles) {
    bool inside = BoxValid(b) && b.min.x > min_corner.x && b.min.y >= min_corner.y &&
                  b.min.z > min_corner.z && b.max.x < max_corner.x &&
                  b.max.y < max_corner.y && b.max.z < max_corner.z;
    if (!inside) {
      throw Error(ErrorKind::kInvalidArgument, "obstacle outside room");
    }
  }
}

RoomGeometry RoomGeometry::Default() {
  RoomGeometry room;
  room.min_corner = {0.0, 0.0, 0.0};
  room.max_corner = {6.0, 3.0, 6.0};
  // sofa against the far wall, coffee table near the middle
  room.obstacles.push_back({{1.5, 0.0, 5.0}, {4.5, 0.85, 5.6}});
  room.obstacles.push_back({{2.4, 0.0, 2.6}, {3.6, 0.45, 3.4}});
  return room;
}

void SimConfig::Validate() const {
  if (!(control_dt > 0.0) || physics_substeps < 1 || !(gravity >= 0.0) ||
      !(rest_speed_epsilon >= 0.0) || !(friction >= 0.0 && friction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid simulation config");
  }
}

const char* TerminalName(Terminal t) {
  switch (t) {
    case Terminal::kNone: return "None";
    case Terminal::kGround: return "Ground";
    case Terminal::kRest: return "Rest";
    case Terminal::kStepCap: return "StepCap";
  }
  return "?";
}

ObjectState IntegrateObjectStep(const ObjectState& state, const ObjectSpec& spec,
                                double dt, double gravity) {
  ObjectState next;
  next.o = state.o + state.v * dt;
  next.v = (state.v + state.a * dt) * std::max(0.0, 1.0 - spec.drag * dt);
  next.a = {0.0, -gravity, 0.0};
  return next;
}

CollisionResult ResolveCollision(const ObjectState& state, const ObjectSpec& spec,
                                 const RoomGeometry& room, double friction) {
  const Vec3& p = state.o;
  const double r = spec.radius;
  std::vector<Contact> contacts;
  for (int i = 0; i < 3; ++i) {
    bool low = p[i] - r < room.min_corner[i];
    bool high = p[i] + r > room.max_corner[i];
    if (low && high) {
      throw Error(ErrorKind::kGeometryDegenerate,
                  "object '" + spec.id + "' wider than the room along an axis");
    }
    if (low) {
      contacts.push_back({AxisVector(i, 1.0), room.min_corner[i] - (p[i] - r), i == 1});
    }
    if (high) {
      contacts.push_back({AxisVector(i, -1.0), p[i] + r - room.max_corner[i], false});
    }
  }
  const Box bounds{room.min_corner, room.max_corner};
  for (const Box& box : room.obstacles) BoxContact(p, r, box, bounds, &contacts);

  CollisionResult result{state, false, false};
  if (contacts.empty()) return result;

  for (size_t i = 0; i < contacts.size(); ++i) {
    for (size_t j = i + 1; j < contacts.size(); ++j) {
      if (Dot(contacts[i].normal, contacts[j].normal) < -0.5) {
        throw Error(ErrorKind::kGeometryDegenerate,
                    "object '" + spec.id + "' penetrates opposing faces");
      }
    }
  }

  const double e = spec.bounciness;
  ObjectState& s = result.state;
  for (const Contact& c : contacts) {
    double vn = Dot(s.v, c.normal);
    if (vn < 0.0) {
      Vec3 tangential = s.v - c.normal * vn;
      s.v = tangential * friction - c.normal * (e * vn);
      s.o += c.normal * (c.depth * (1.0 + e));
    } else {
      s.o += c.normal * c.depth;
    }
    result.floor_contact |= c.floor;
  }
  result.collided = true;
  return result;
}

ObjectSimulator::ObjectSimulator(const ObjectSpec& spec, const RoomGeometry& room,
                                 const SimConfig& cfg, const ObjectState& initial)
    : spec_(&spec), room_(&room), cfg_(cfg), state_(initial) {
  bool touching_floor = initial.o.y - spec.radius <= room.floor() + 1e-9;
  if (touching_floor && Norm(initial.v) < cfg.rest_speed_epsilon) {
    terminal_ = Terminal::kRest;
  }
}

ObjectSimulator::Substep ObjectSimulator::Advance() {
  Substep out;
  if (terminal_ != Terminal::kNone) return out;
  ObjectState next = IntegrateObjectStep(state_, *spec_, cfg_.substep_dt(), cfg_.gravity);
  CollisionResult res = ResolveCollision(next, *spec_, *room_, cfg_.friction);
  state_ = res.state;
  out.collided = res.collided;
  const bool new_event = res.collided && !in_contact_;
  in_contact_ = res.collided;

  if (res.floor_contact) {
    const double eps = cfg_.rest_speed_epsilon;
    if (Norm(state_.v) < eps) {
      terminal_ = Terminal::kRest;
    } else if (state_.v.y < eps || !cfg_.continue_after_bounce) {
      terminal_ = Terminal::kGround;
    }
  }
  // The contact that ends the throw is not one of its collisions.
  if (new_event && terminal_ == Terminal::kNone) ++collision_count_;
  out.terminal = terminal_;
  return out;
}

Trajectory SimulateTrajectory(const ObjectSpec& spec, const ObjectState& initial,
                              const RoomGeometry& room, const SimConfig& cfg,
                              int max_steps) {
  ObjectSimulator sim(spec, room, cfg, initial);
  Trajectory traj;
  traj.states.push_back(initial);
  traj.collided.push_back(false);
  if (sim.terminal() != Terminal::kNone) {
    traj.terminal = sim.terminal();
    return traj;
  }
  for (int step = 1; step <= max_steps; ++step) {
    bool collided = false;
    for (int s = 0; s < cfg.physics_substeps; ++s) {
      collided |= sim.Advance().collided;
      if (sim.terminal() != Terminal::kNone) break;
    }
    traj.states.push_back(sim.state());
    traj.collided.push_back(collided);
    if (sim.terminal() != Terminal::kNone) {
      traj.terminal = sim.terminal();
      traj.collision_count = sim.collision_count();
      return traj;
    }
  }
  traj.terminal = Terminal::kStepCap;
  traj.collision_count = sim.collision_count();
  return traj;
}

}  // namespace dronecatch
