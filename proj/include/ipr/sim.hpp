#pragma once

#include <memory>
#include <vector>

#include "ipr/convex_hull.hpp"
#include "ipr/io.hpp"
#include "ipr/types.hpp"

namespace ipr {

/// Immutable collision geometry in center-of-mass coordinates, shareable
/// across bodies and worlds.
struct CollisionShape {
  struct Face {
    Vec3 n = Vec3::UnitZ();  // outward, COM frame
    double d = 0.0;          // plane n . x = d
    std::vector<int> loop;   // CCW from outside
  };

  std::vector<Vec3> verts;     // COM frame
  std::vector<Face> faces;     // coplanar-merged
  std::vector<std::array<int, 2>> edges;  // unique undirected hull edges
  std::vector<Vec3> edge_dirs; // unique directions, sign-canonical
  double radius = 0.0;         // bounding sphere about the COM
  double volume = 0.0;
  double mass = 0.0;           // at build density
  Mat3 inertia = Mat3::Zero(); // COM frame, at build density
  Vec3 com = Vec3::Zero();     // COM in the source mesh frame
};

std::shared_ptr<const CollisionShape> build_collision_shape(
    const ConvexMesh& mesh, double density);

struct RigidBody {
  int body_id = -1;
  std::shared_ptr<const CollisionShape> shape;
  Pose pose;  // COM frame to world
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  double friction = 0.5;
  double inv_mass = 0.0;          // 0 for static bodies
  Mat3 inv_inertia = Mat3::Zero();  // COM frame

  Vec3 vertex_world(int i) const { return pose.apply(shape->verts[i]); }
};

/// Makes a dynamic body whose world-space hull is the given mesh. Density
/// scales mass and inertia; the mesh is rebased to its center of mass.
RigidBody make_dynamic_body(int body_id, const ConvexMesh& mesh,
                            double density, double friction);
RigidBody make_static_body(int body_id, const ConvexMesh& mesh, double friction);

struct PushAction {
  Vec3 start_point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double speed = 0.05;
  double duration = 1.0;
  double effector_radius = 0.01;
};

/// Kinematic sphere driven along a straight line; infinite effective mass.
struct Effector {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double radius = 0.01;
  bool active = false;
};

struct World {
  double dt = 1.0 / 240.0;
  Vec3 gravity = Vec3(0, 0, -9.81);
  bool has_support = true;
  double support_z = 0.0;
  int solver_iterations = 10;
  std::vector<RigidBody> bodies;
  Effector effector;

  void step();
  std::vector<Pose> poses() const;
};

struct SimTrace {
  std::vector<TraceRow> rows;  // sampled at the output rate
  std::vector<double> displacement;  // per body, total COM travel
};

struct SettleOptions {
  double v_eps = 0.005;
  double t_max = 3.0;
  // Stop early once any dynamic body moved this far; used by exploration
  // scoring where exp(-alpha*d) has already vanished.
  double displacement_cap = std::numeric_limits<double>::infinity();
  double output_rate = 30.0;
  bool record_trace = true;
};

/// Runs gravity until every dynamic body stays below v_eps for a sustained
/// window or t_max elapses. Throws Diverged when a body leaves the 10 m
/// bounding region.
SimTrace settle(World& w, const SettleOptions& opt = {});

struct ReplayResult {
  SimTrace trace;
  // World poses captured after each action finished and the scene re-settled.
  std::vector<std::vector<Pose>> after_action;
};

/// Replays pushes with the kinematic effector, settling out after each one.
ReplayResult replay_actions(World& w, const std::vector<PushAction>& actions,
                            const SettleOptions& opt = {});

/// Largest body-body or body-support penetration depth in the world; the
/// no-penetration test and scene validation use this.
double max_penetration(const World& w);

}  // namespace ipr
