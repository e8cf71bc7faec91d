#include "dronecatch/physics.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dronecatch/catalog.h"
#include "dronecatch/error.h"

namespace dronecatch {
namespace {

ObjectSpec Ball(double bounciness = 0.0, double drag = 0.0, double radius = 0.05) {
  ObjectSpec s;
  s.id = "ball";
  s.mass = 0.5;
  s.bounciness = bounciness;
  s.drag = drag;
  s.radius = radius;
  return s;
}

RoomGeometry EmptyRoom(Vec3 lo, Vec3 hi) {
  RoomGeometry room;
  room.min_corner = lo;
  room.max_corner = hi;
  return room;
}

double Energy(const ObjectState& s, double g) {
  return 0.5 * Dot(s.v, s.v) + g * s.o.y;
}

TEST(IntegrateObjectStepTest, AppliesRecurrence) {
  ObjectState s{{0, 2, 0}, {1, 3, 0}, {0, -9.81, 0}};
  ObjectState n = IntegrateObjectStep(s, Ball(), 0.02);
  EXPECT_NEAR(n.o.x, 0.02, 1e-15);
  EXPECT_NEAR(n.o.y, 2.06, 1e-15);
  EXPECT_DOUBLE_EQ(n.o.z, 0.0);
  EXPECT_NEAR(n.v.x, 1.0, 1e-15);
  EXPECT_NEAR(n.v.y, 2.8038, 1e-15);
  EXPECT_EQ(n.a, (Vec3{0, -9.81, 0}));
}

TEST(IntegrateObjectStepTest, DragDecaysVelocity) {
  ObjectState s{{0, 0, 0}, {10, 0, 0}, {0, 0, 0}};
  ObjectState n = IntegrateObjectStep(s, Ball(0.0, 0.5), 0.02, 0.0);
  EXPECT_NEAR(n.v.x, 9.9, 1e-12);
  EXPECT_EQ(n.v.y, 0.0);
}

TEST(IntegrateObjectStepTest, DragNeverReversesVelocity) {
  ObjectState s{{0, 0, 0}, {10, 0, 0}, {0, 0, 0}};
  ObjectState n = IntegrateObjectStep(s, Ball(0.0, 100.0), 0.02, 0.0);
  EXPECT_EQ(n.v.x, 0.0);
}

TEST(IntegrateObjectStepTest, MatchesClosedFormSum) {
  const double dt = 0.02, g = 9.81;
  ObjectState s{{0, 1.8, 0}, {2, 5, 0}, {0, -g, 0}};
  for (int n = 0; n < 25; ++n) s = IntegrateObjectStep(s, Ball(), dt, g);
  // y_n = y0 + sum_{i<n} (vy0 - i g dt) dt
  const int n = 25;
  double y = 1.8 + n * 5.0 * dt - g * dt * dt * n * (n - 1) / 2.0;
  EXPECT_NEAR(s.o.x, n * 2.0 * dt, 1e-12);
  EXPECT_NEAR(s.o.y, y, 1e-12);
  EXPECT_NEAR(s.v.y, 5.0 - n * g * dt, 1e-12);
}

TEST(ResolveCollisionTest, FloorBounceScalesNormalVelocity) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {5, 3, 5});
  ObjectState s{{2, 0.04, 2}, {0, -4, 0}, {0, -9.81, 0}};
  CollisionResult r = ResolveCollision(s, Ball(0.5), room);
  EXPECT_TRUE(r.collided);
  EXPECT_TRUE(r.floor_contact);
  EXPECT_NEAR(r.state.v.y, 2.0, 1e-12);
  EXPECT_EQ(r.state.v.x, 0.0);
  EXPECT_GE(r.state.o.y, 0.05);
}

TEST(ResolveCollisionTest, FreeSpaceIsIdentity) {
  RoomGeometry room = RoomGeometry::Default();
  ObjectState s{{1, 1.5, 1}, {3, -2, 1}, {0, -9.81, 0}};
  CollisionResult r = ResolveCollision(s, Ball(0.7), room);
  EXPECT_FALSE(r.collided);
  EXPECT_EQ(r.state.o, s.o);
  EXPECT_EQ(r.state.v, s.v);
}

TEST(ResolveCollisionTest, TangentialFriction) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {5, 3, 5});
  ObjectState s{{2, 0.03, 2}, {3, -4, 0}, {}};
  CollisionResult r = ResolveCollision(s, Ball(1.0), room);
  EXPECT_NEAR(r.state.v.x, 2.85, 1e-12);
  EXPECT_NEAR(r.state.v.y, 4.0, 1e-12);
  EXPECT_EQ(r.state.v.z, 0.0);
}

// Independent reflection of a sphere against the floor plane.
ObjectState ReflectOffFloor(ObjectState s, double r, double e, double friction) {
  double depth = r - s.o.y;
  if (s.v.y < 0) {
    s.v = {s.v.x * friction, -e * s.v.y, s.v.z * friction};
    s.o.y += depth * (1 + e);
  } else {
    s.o.y += depth;
  }
  return s;
}

TEST(ResolveCollisionTest, MatchesReflectionOracleOnImpactGrid) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {5, 3, 5});
  for (double e : {0.0, 0.3, 0.8, 1.0}) {
    for (double y = 0.0; y < 0.05; y += 0.01) {
      for (double vx = -4; vx <= 4; vx += 2) {
        for (double vy = -6; vy <= 2; vy += 2) {
          ObjectState s{{2.5, y, 2.5}, {vx, vy, 1.0}, {}};
          ObjectState want = ReflectOffFloor(s, 0.05, e, kTangentialFriction);
          CollisionResult got = ResolveCollision(s, Ball(e), room);
          ASSERT_TRUE(got.collided);
          EXPECT_NEAR(got.state.o.y, want.o.y, 1e-12);
          EXPECT_NEAR(got.state.v.x, want.v.x, 1e-12);
          EXPECT_NEAR(got.state.v.y, want.v.y, 1e-12);
          EXPECT_NEAR(got.state.v.z, want.v.z, 1e-12);
        }
      }
    }
  }
}

TEST(ResolveCollisionTest, OpposingFacesAreDegenerate) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {0.08, 3, 5});
  ObjectState s{{0.04, 1, 1}, {1, 0, 0}, {}};
  try {
    ResolveCollision(s, Ball(0.5, 0.0, 0.05), room);
    FAIL() << "expected geometry-degenerate";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGeometryDegenerate);
  }
}

TEST(ResolveCollisionTest, ObstacleTopActsAsFloorlessSurface) {
  RoomGeometry room = RoomGeometry::Default();
  // Falling onto the coffee table top.
  ObjectState s{{3.0, 0.48, 3.0}, {0.5, -3, 0}, {}};
  CollisionResult r = ResolveCollision(s, Ball(0.5), room);
  EXPECT_TRUE(r.collided);
  EXPECT_FALSE(r.floor_contact);
  EXPECT_GT(r.state.v.y, 0.0);
}

TEST(ResolveCollisionTest, SpeedNeverGrows) {
  RoomGeometry room = RoomGeometry::Default();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  int hits = 0;
  for (int i = 0; i < 20000; ++i) {
    ObjectState s{{3 + 3.2 * u(rng), 1.5 + 1.7 * u(rng), 3 + 3.2 * u(rng)},
                  {8 * u(rng), 8 * u(rng), 8 * u(rng)},
                  {}};
    double e = 0.5 + 0.5 * u(rng);
    CollisionResult r;
    try {
      r = ResolveCollision(s, Ball(e), room);
    } catch (const Error&) {
      continue;
    }
    hits += r.collided;
    EXPECT_LE(Norm(r.state.v), Norm(s.v) + 1e-12);
  }
  EXPECT_GT(hits, 100);
}

TEST(SimulateTrajectoryTest, RestingObjectStopsImmediately) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {5, 3, 5});
  ObjectState s{{2, 0.05, 2}, {0, 0, 0}, {0, -9.81, 0}};
  Trajectory t = SimulateTrajectory(Ball(), s, room, SimConfig{}, 50);
  EXPECT_EQ(t.terminal, Terminal::kRest);
  EXPECT_EQ(t.collision_count, 0);
  EXPECT_EQ(t.states.size(), 1u);
}

TEST(SimulateTrajectoryTest, FloorCrossingMatchesFineOracle) {
  RoomGeometry room = EmptyRoom({-100, 0, -100}, {100, 100, 100});
  ObjectState s{{0, 1.8, 0}, {2, 4, 0}, {0, -9.81, 0}};
  SimConfig cfg;
  Trajectory t = SimulateTrajectory(Ball(), s, room, cfg, 500);
  ASSERT_EQ(t.terminal, Terminal::kGround);
  int coarse_step = static_cast<int>(t.states.size()) - 1;

  // Same recurrence at dt/100; find the control step of the first contact.
  const double fine = cfg.control_dt / 100.0;
  ObjectState f = s;
  int k = 0;
  while (f.o.y - 0.05 > 0.0) {
    f = IntegrateObjectStep(f, Ball(), fine, cfg.gravity);
    ++k;
  }
  int fine_step = (k + 99) / 100;
  EXPECT_LE(std::abs(coarse_step - fine_step), 1);
}

TEST(SimulateTrajectoryTest, WallBounceFlipsVelocity) {
  RoomGeometry room = EmptyRoom({0, 0, 0}, {3, 3, 3});
  ObjectState s{{2.0, 1.5, 1.5}, {5, 1, 0}, {0, -9.81, 0}};
  Trajectory t = SimulateTrajectory(Ball(0.8), s, room, SimConfig{}, 50);
  EXPECT_GE(t.collision_count, 1);
  int hit = -1;
  for (size_t k = 1; k < t.collided.size(); ++k) {
    if (t.collided[k]) {
      hit = static_cast<int>(k);
      break;
    }
  }
  ASSERT_GT(hit, 0);
  EXPECT_GT(t.states[hit - 1].v.x, 0.0);
  EXPECT_LT(t.states[hit].v.x, 0.0);
}

TEST(SimulateTrajectoryTest, Deterministic) {
  RoomGeometry room = RoomGeometry::Default();
  ObjectState s{{1, 1.8, 1}, {3, 4, 3.5}, {0, -9.81, 0}};
  Trajectory a = SimulateTrajectory(Ball(0.7, 0.2), s, room, SimConfig{}, 50);
  Trajectory b = SimulateTrajectory(Ball(0.7, 0.2), s, room, SimConfig{}, 50);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_EQ(a.states[i].o, b.states[i].o);
    EXPECT_EQ(a.states[i].v, b.states[i].v);
  }
  EXPECT_EQ(a.collision_count, b.collision_count);
}

TEST(SimulateTrajectoryTest, FreeFlightHasNoCollisions) {
  RoomGeometry room = EmptyRoom({-100, 0, -100}, {100, 100, 100});
  ObjectState s{{0, 50, 0}, {3, 2, 1}, {0, -9.81, 0}};
  Trajectory t = SimulateTrajectory(Ball(0.9), s, room, SimConfig{}, 50);
  EXPECT_EQ(t.collision_count, 0);
  EXPECT_EQ(t.terminal, Terminal::kStepCap);
  EXPECT_EQ(t.states.size(), 51u);
}

TEST(SimulateTrajectoryTest, EnergyBound) {
  RoomGeometry room = EmptyRoom({-100, 0, -100}, {100, 100, 100});
  SimConfig cfg;
  const double h = cfg.substep_dt();
  const double slack = 0.5 * cfg.gravity * cfg.gravity * h * h * cfg.physics_substeps;
  for (double drag : {0.0, 0.4}) {
    ObjectState s{{0, 50, 0}, {4, 6, -2}, {0, -cfg.gravity, 0}};
    Trajectory t = SimulateTrajectory(Ball(0, drag), s, room, cfg, 50);
    for (size_t k = 1; k < t.states.size(); ++k) {
      double de = Energy(t.states[k], cfg.gravity) - Energy(t.states[k - 1], cfg.gravity);
      if (drag == 0.0) {
        EXPECT_LE(de, slack + 1e-12);
      } else {
        EXPECT_LT(de, slack);
      }
    }
  }
}

TEST(SimulateTrajectoryTest, SubstepRefinementConverges) {
  RoomGeometry room = EmptyRoom({-100, 0, -100}, {100, 100, 100});
  ObjectState s{{0, 50, 0}, {6, 3, 0}, {0, -9.81, 0}};
  auto final_pos = [&](int substeps) {
    SimConfig cfg;
    cfg.physics_substeps = substeps;
    return SimulateTrajectory(Ball(0, 0.5), s, room, cfg, 50).states.back().o;
  };
  Vec3 p1 = final_pos(1), p2 = final_pos(2), p4 = final_pos(4), p8 = final_pos(8);
  double d1 = Distance(p1, p2), d2 = Distance(p2, p4), d3 = Distance(p4, p8);
  EXPECT_GE(d1 / d2, 1.8);
  EXPECT_GE(d2 / d3, 1.8);
}

TEST(CatalogTest, DefaultCatalogSpansRanges) {
  std::vector<ObjectSpec> cat = DefaultCatalog();
  ASSERT_EQ(cat.size(), 10u);
  double mmin = 1e9, mmax = 0, bmin = 1, bmax = 0, dmin = 1e9, dmax = 0;
  for (const ObjectSpec& s : cat) {
    s.Validate();
    mmin = std::min(mmin, s.mass);
    mmax = std::max(mmax, s.mass);
    bmin = std::min(bmin, s.bounciness);
    bmax = std::max(bmax, s.bounciness);
    dmin = std::min(dmin, s.drag);
    dmax = std::max(dmax, s.drag);
  }
  EXPECT_DOUBLE_EQ(mmin, 0.05);
  EXPECT_DOUBLE_EQ(mmax, 2.5);
  EXPECT_DOUBLE_EQ(bmin, 0.0);
  EXPECT_DOUBLE_EQ(bmax, 0.9);
  EXPECT_DOUBLE_EQ(dmin, 0.0);
  EXPECT_DOUBLE_EQ(dmax, 1.0);
}

TEST(CatalogTest, TextRoundTrip) {
  std::vector<ObjectSpec> cat = DefaultCatalog();
  std::vector<ObjectSpec> back = ParseCatalog("# comment\n\n" + FormatCatalog(cat));
  ASSERT_EQ(back.size(), cat.size());
  for (size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(back[i].id, cat[i].id);
    EXPECT_EQ(back[i].mass, cat[i].mass);
    EXPECT_EQ(back[i].bounciness, cat[i].bounciness);
    EXPECT_EQ(back[i].drag, cat[i].drag);
    EXPECT_EQ(back[i].angular_drag, cat[i].angular_drag);
    EXPECT_EQ(back[i].radius, cat[i].radius);
  }
}

TEST(CatalogTest, RejectsInvalidEntries) {
  EXPECT_THROW(ParseCatalog("bad -1 0.5 0 0 0.1\n"), Error);
  EXPECT_THROW(ParseCatalog("bad 1 1.5 0 0 0.1\n"), Error);
  EXPECT_THROW(ParseCatalog("short 1 0.5\n"), Error);
}

}  // namespace
}  // namespace dronecatch
