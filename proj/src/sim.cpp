#include "ipr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ipr {

namespace {

constexpr double kContactMargin = 0.001;
constexpr double kSlop = 0.0005;
constexpr double kBaumgarte = 0.2;
constexpr double kBoundsLimit = 10.0;
// Rest must hold this long before a settle ends; marginally unstable poses
// start from zero velocity and need time for the instability to register.
constexpr double kRestWindow = 0.5;
// Below this speed measure velocities are bled off slightly each step so
// contact jitter dies out instead of rectifying into drift.
constexpr double kNearRestSpeed = 0.01;
constexpr double kNearRestDamping = 0.999;

constexpr int kPlane = -1;
constexpr int kEffector = -2;

struct Contact {
  int a = kPlane;  // reference side; kPlane / kEffector / body index
  int b = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // from a to b
  double depth = 0.0;
  // Solver state
  Vec3 ra = Vec3::Zero(), rb = Vec3::Zero();
  Vec3 t1 = Vec3::UnitX(), t2 = Vec3::UnitY();
  double kn = 0, kt1 = 0, kt2 = 0;
  double jn = 0, jt1 = 0, jt2 = 0;
  double jp = 0;     // pseudo impulse, position correction only
  double bias = 0;   // target separation speed for the pseudo pass
  double allow = 0;  // approach speed a separated contact may still close at
  double friction = 0.5;
};

struct BodyCache {
  Mat3 rot;
  Mat3 inv_inertia_world;
  std::vector<Vec3> verts;
  std::vector<Vec3> face_n;
  std::vector<double> face_d;
};

void build_cache(const RigidBody& b, BodyCache& c) {
  c.rot = b.pose.rotation.toRotationMatrix();
  c.inv_inertia_world = c.rot * b.inv_inertia * c.rot.transpose();
  c.verts.resize(b.shape->verts.size());
  for (size_t i = 0; i < c.verts.size(); ++i)
    c.verts[i] = c.rot * b.shape->verts[i] + b.pose.translation;
  c.face_n.resize(b.shape->faces.size());
  c.face_d.resize(b.shape->faces.size());
  for (size_t f = 0; f < c.face_n.size(); ++f) {
    c.face_n[f] = c.rot * b.shape->faces[f].n;
    c.face_d[f] = b.shape->faces[f].d + c.face_n[f].dot(b.pose.translation);
  }
}

void project(const std::vector<Vec3>& verts, const Vec3& axis, double& lo,
             double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& v : verts) {
    double p = axis.dot(v);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
}

// Clips a polygon to the half-space n . x <= d.
void clip_halfspace(std::vector<Vec3>& poly, const Vec3& n, double d) {
  std::vector<Vec3> out;
  out.reserve(poly.size() + 2);
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % poly.size()];
    double sp = n.dot(p) - d, sq = n.dot(q) - d;
    if (sp <= 0) out.push_back(p);
    if ((sp < 0 && sq > 0) || (sp > 0 && sq < 0))
      out.push_back(p + (q - p) * (sp / (sp - sq)));
  }
  poly = std::move(out);
}

// Keeps at most four points: the deepest, then greedy max spread.
void reduce_points(std::vector<std::pair<Vec3, double>>& pts) {
  if (pts.size() <= 4) return;
  std::vector<std::pair<Vec3, double>> keep;
  size_t deepest = 0;
  for (size_t i = 1; i < pts.size(); ++i)
    if (pts[i].second > pts[deepest].second) deepest = i;
  keep.push_back(pts[deepest]);
  while (keep.size() < 4) {
    double best = -1;
    size_t pick = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& k : keep) dmin = std::min(dmin, (pts[i].first - k.first).squaredNorm());
      if (dmin > best) {
        best = dmin;
        pick = i;
      }
    }
    keep.push_back(pts[pick]);
  }
  pts = std::move(keep);
}

void closest_on_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                         const Vec3& q2, Vec3& c1, Vec3& c2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0, t = 0;
  if (a > 1e-18) {
    double c = d1.dot(r), bb = d1.dot(d2);
    double denom = a * e - bb * bb;
    if (denom > 1e-18) s = std::clamp((bb * f - c * e) / denom, 0.0, 1.0);
    t = e > 1e-18 ? std::clamp((bb * s + f) / e, 0.0, 1.0) : 0.0;
    // Re-clamp s for the chosen t.
    s = std::clamp((d1.dot(d2) * t - d1.dot(r)) / a, 0.0, 1.0);
  } else if (e > 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  }
  c1 = p1 + s * d1;
  c2 = p2 + t * d2;
}

// Hull-hull SAT + reference-face clipping. Appends contacts with a = ia.
void collide_hulls(int ia, int ib, const RigidBody& A, const RigidBody& B,
                   const BodyCache& ca, const BodyCache& cb,
                   std::vector<Contact>& out, double margin) {
  const Vec3 dcom = B.pose.translation - A.pose.translation;
  if (dcom.norm() > A.shape->radius + B.shape->radius + margin) return;

  // Signed separations: the face (or edge axis) with the largest signed
  // distance identifies the least-penetrating direction; back faces come out
  // deeply negative and can never shadow the true contact face.
  double best_sep = -std::numeric_limits<double>::infinity();
  int best_kind = -1;  // 0 = A face, 1 = B face
  int best_index = -1;
  double edge_sep = -std::numeric_limits<double>::infinity();
  Vec3 edge_axis = Vec3::UnitZ();
  int best_ea = -1, best_eb = -1;

  for (size_t f = 0; f < ca.face_n.size(); ++f) {
    double lo, hi;
    project(cb.verts, ca.face_n[f], lo, hi);
    double sep = lo - ca.face_d[f];
    if (sep > margin) return;
    if (sep > best_sep) {
      best_sep = sep;
      best_kind = 0;
      best_index = int(f);
    }
  }
  for (size_t f = 0; f < cb.face_n.size(); ++f) {
    double lo, hi;
    project(ca.verts, cb.face_n[f], lo, hi);
    double sep = lo - cb.face_d[f];
    if (sep > margin) return;
    if (sep > best_sep) {
      best_sep = sep;
      best_kind = 1;
      best_index = int(f);
    }
  }
  for (size_t i = 0; i < A.shape->edge_dirs.size(); ++i) {
    Vec3 da = ca.rot * A.shape->edge_dirs[i];
    for (size_t j = 0; j < B.shape->edge_dirs.size(); ++j) {
      Vec3 db = cb.rot * B.shape->edge_dirs[j];
      Vec3 axis = da.cross(db);
      double len = axis.norm();
      if (len < 1e-9) continue;
      axis /= len;
      if (axis.dot(dcom) < 0) axis = -axis;  // orient A to B
      double la, ha, lb, hb;
      project(ca.verts, axis, la, ha);
      project(cb.verts, axis, lb, hb);
      double sep = lb - ha;
      if (sep > margin) return;
      if (sep > edge_sep) {
        edge_sep = sep;
        edge_axis = axis;
        best_ea = int(i);
        best_eb = int(j);
      }
    }
  }
  if (best_kind < 0) return;

  const double friction = std::sqrt(A.friction * B.friction);

  // Face manifolds are richer; an edge axis must beat them by a clear margin.
  if (best_ea >= 0 && edge_sep > best_sep + 1e-5) {
    auto find_edge = [](const RigidBody& body, const BodyCache& cache,
                        const Vec3& dir, const Vec3& axis, double sign, Vec3& p,
                        Vec3& q) {
      double best = -std::numeric_limits<double>::infinity();
      bool found = false;
      for (const auto& e : body.shape->edges) {
        Vec3 a = cache.verts[e[0]], b = cache.verts[e[1]];
        Vec3 d = (b - a).normalized();
        if (std::abs(d.dot(dir)) < 0.999) continue;
        double score = sign * axis.dot(a + b);
        if (score > best) {
          best = score;
          p = a;
          q = b;
          found = true;
        }
      }
      return found;
    };
    Vec3 da = ca.rot * A.shape->edge_dirs[best_ea];
    Vec3 db = cb.rot * B.shape->edge_dirs[best_eb];
    Vec3 pa, qa, pb, qb;
    if (find_edge(A, ca, da, edge_axis, 1.0, pa, qa) &&
        find_edge(B, cb, db, edge_axis, -1.0, pb, qb)) {
      Vec3 c1, c2;
      closest_on_segments(pa, qa, pb, qb, c1, c2);
      Contact c;
      c.a = ia;
      c.b = ib;
      c.normal = edge_axis;
      c.point = 0.5 * (c1 + c2);
      c.depth = -edge_sep;
      c.friction = friction;
      out.push_back(c);
    }
    return;
  }

  const bool ref_is_a = best_kind == 0;
  const RigidBody& R = ref_is_a ? A : B;
  const RigidBody& I = ref_is_a ? B : A;
  const BodyCache& cr = ref_is_a ? ca : cb;
  const BodyCache& ci = ref_is_a ? cb : ca;
  const int rf = best_index;
  const Vec3 rn = cr.face_n[rf];
  const double rd = cr.face_d[rf];

  // Incident face: most anti-parallel to the reference normal.
  int inc = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (size_t f = 0; f < ci.face_n.size(); ++f) {
    double d = ci.face_n[f].dot(rn);
    if (d < worst) {
      worst = d;
      inc = int(f);
    }
  }
  std::vector<Vec3> poly;
  for (int vi : I.shape->faces[inc].loop) poly.push_back(ci.verts[vi]);

  const auto& rloop = R.shape->faces[rf].loop;
  for (size_t e = 0; e < rloop.size() && !poly.empty(); ++e) {
    const Vec3& a = cr.verts[rloop[e]];
    const Vec3& b = cr.verts[rloop[(e + 1) % rloop.size()]];
    Vec3 side_n = (b - a).cross(rn);  // points outside the face
    double len = side_n.norm();
    if (len < 1e-12) continue;
    side_n /= len;
    clip_halfspace(poly, side_n, side_n.dot(a));
  }
  if (poly.empty()) return;

  std::vector<std::pair<Vec3, double>> pts;
  for (const auto& p : poly) {
    double depth = rd - rn.dot(p);
    if (depth >= -margin) pts.emplace_back(p, depth);
  }
  reduce_points(pts);
  for (const auto& [p, depth] : pts) {
    Contact c;
    c.a = ref_is_a ? ia : ib;
    c.b = ref_is_a ? ib : ia;
    c.normal = rn;
    c.point = p;
    c.depth = depth;
    c.friction = friction;
    out.push_back(c);
  }
}

void collide_support(int ib, const RigidBody& B, const BodyCache& cb,
                     double support_z, std::vector<Contact>& out,
                     double margin) {
  std::vector<std::pair<Vec3, double>> pts;
  for (const auto& v : cb.verts) {
    double depth = support_z - v.z();
    if (depth >= -margin) pts.emplace_back(v, depth);
  }
  reduce_points(pts);
  for (const auto& [p, depth] : pts) {
    Contact c;
    c.a = kPlane;
    c.b = ib;
    c.normal = Vec3::UnitZ();
    c.point = p;
    c.depth = depth;
    c.friction = B.friction;
    out.push_back(c);
  }
}

void collide_effector(int ib, const RigidBody& B, const BodyCache& cb,
                      const Effector& e, std::vector<Contact>& out,
                      double margin) {
  const Vec3 center = e.position;
  if ((center - B.pose.translation).norm() >
      B.shape->radius + e.radius + margin)
    return;

  // Closest feature of the hull to the sphere center.
  double inside_best = -std::numeric_limits<double>::infinity();
  int inside_face = -1;
  bool inside = true;
  for (size_t f = 0; f < cb.face_n.size(); ++f) {
    double s = cb.face_n[f].dot(center) - cb.face_d[f];
    if (s > 0) inside = false;
    if (s > inside_best) {
      inside_best = s;
      inside_face = int(f);
    }
  }

  Vec3 normal;  // from body to effector
  Vec3 point;
  double depth;
  if (inside) {
    normal = cb.face_n[inside_face];
    depth = e.radius - inside_best;  // inside_best <= 0
    point = center - normal * inside_best;
  } else {
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 best_p = Vec3::Zero();
    for (size_t f = 0; f < cb.face_n.size(); ++f) {
      const auto& loop = B.shape->faces[f].loop;
      Vec3 proj = center - (cb.face_n[f].dot(center) - cb.face_d[f]) * cb.face_n[f];
      bool in_poly = true;
      for (size_t k = 0; k < loop.size(); ++k) {
        const Vec3& a = cb.verts[loop[k]];
        const Vec3& b = cb.verts[loop[(k + 1) % loop.size()]];
        Vec3 side = (b - a).cross(cb.face_n[f]);
        if (side.dot(proj - a) > 0) {
          in_poly = false;
          // Clamp to the edge segment.
          Vec3 ab = b - a;
          double t = std::clamp(ab.dot(center - a) / ab.squaredNorm(), 0.0, 1.0);
          Vec3 cand = a + t * ab;
          double d2 = (center - cand).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best_p = cand;
          }
        }
      }
      if (in_poly) {
        double d2 = (center - proj).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best_p = proj;
        }
      }
    }
    double dist = std::sqrt(best_d2);
    if (dist > e.radius + margin || dist < 1e-12) return;
    normal = (center - best_p) / dist;
    depth = e.radius - dist;
    point = best_p;
  }
  if (depth < -margin) return;
  Contact c;
  c.a = ib;
  c.b = kEffector;
  c.normal = normal;
  c.point = point;
  c.depth = depth;
  c.friction = B.friction;
  out.push_back(c);
}

}  // namespace

std::shared_ptr<const CollisionShape> build_collision_shape(
    const ConvexMesh& mesh, double density) {
  auto shape = std::make_shared<CollisionShape>();
  auto mp = compute_mass_properties(mesh, density);
  shape->com = mp.com;
  shape->mass = mp.mass;
  shape->inertia = mp.inertia;
  shape->volume = mesh.volume;

  shape->verts.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    shape->verts.push_back(v - mp.com);
    shape->radius = std::max(shape->radius, (v - mp.com).norm());
  }

  auto polys = merge_coplanar_faces(mesh, 1e-4);
  std::set<std::array<int, 2>> edge_set;
  for (const auto& p : polys) {
    CollisionShape::Face f;
    f.n = p.normal;
    f.d = p.offset - p.normal.dot(mp.com);
    f.loop = p.loop;
    shape->faces.push_back(std::move(f));
    for (size_t k = 0; k < p.loop.size(); ++k) {
      int a = p.loop[k], b = p.loop[(k + 1) % p.loop.size()];
      edge_set.insert({std::min(a, b), std::max(a, b)});
    }
  }
  shape->edges.assign(edge_set.begin(), edge_set.end());
  for (const auto& e : shape->edges) {
    Vec3 d = (shape->verts[e[1]] - shape->verts[e[0]]).normalized();
    // Canonical sign: first component of meaningful magnitude positive.
    for (int k = 0; k < 3; ++k) {
      if (std::abs(d[k]) > 1e-9) {
        if (d[k] < 0) d = -d;
        break;
      }
    }
    bool dup = false;
    for (const auto& ex : shape->edge_dirs)
      if ((ex - d).norm() < 1e-6) {
        dup = true;
        break;
      }
    if (!dup) shape->edge_dirs.push_back(d);
  }
  return shape;
}

RigidBody make_dynamic_body(int body_id, const ConvexMesh& mesh, double density,
                            double friction) {
  RigidBody b;
  b.body_id = body_id;
  b.shape = build_collision_shape(mesh, density);
  b.pose.translation = b.shape->com;
  b.friction = friction;
  b.inv_mass = 1.0 / b.shape->mass;
  b.inv_inertia = b.shape->inertia.inverse();
  return b;
}

RigidBody make_static_body(int body_id, const ConvexMesh& mesh,
                           double friction) {
  RigidBody b;
  b.body_id = body_id;
  b.shape = build_collision_shape(mesh, 1000.0);
  b.pose.translation = b.shape->com;
  b.friction = friction;
  b.inv_mass = 0.0;
  b.inv_inertia = Mat3::Zero();
  return b;
}

void World::step() {
  const size_t n = bodies.size();
  std::vector<BodyCache> cache(n);
  for (size_t i = 0; i < n; ++i) {
    if (bodies[i].inv_mass > 0) bodies[i].velocity += dt * gravity;
    build_cache(bodies[i], cache[i]);
  }

  std::vector<Contact> contacts;
  for (size_t i = 0; i < n; ++i) {
    if (has_support && bodies[i].inv_mass > 0)
      collide_support(int(i), bodies[i], cache[i], support_z, contacts,
                      kContactMargin);
    for (size_t j = i + 1; j < n; ++j) {
      if (bodies[i].inv_mass == 0 && bodies[j].inv_mass == 0) continue;
      collide_hulls(int(i), int(j), bodies[i], bodies[j], cache[i], cache[j],
                    contacts, kContactMargin);
    }
    if (effector.active && bodies[i].inv_mass > 0)
      collide_effector(int(i), bodies[i], cache[i], effector, contacts,
                       kContactMargin);
  }

  auto inv_mass_of = [&](int id) { return id >= 0 ? bodies[id].inv_mass : 0.0; };
  auto inv_inertia_of = [&](int id) -> const Mat3& {
    static const Mat3 zero = Mat3::Zero();
    return id >= 0 ? cache[id].inv_inertia_world : zero;
  };
  auto com_of = [&](int id) {
    return id >= 0 ? bodies[id].pose.translation : Vec3::Zero();
  };
  auto vel_at = [&](int id, const Vec3& r) -> Vec3 {
    if (id >= 0)
      return bodies[id].velocity + bodies[id].angular_velocity.cross(r);
    if (id == kEffector) return effector.velocity;
    return Vec3::Zero();
  };

  for (auto& c : contacts) {
    c.ra = c.point - com_of(c.a);
    c.rb = c.point - com_of(c.b);
    Vec3 any = std::abs(c.normal.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    c.t1 = c.normal.cross(any).normalized();
    c.t2 = c.normal.cross(c.t1);
    auto eff_mass = [&](const Vec3& d) {
      double k = inv_mass_of(c.a) + inv_mass_of(c.b);
      Vec3 ta = c.ra.cross(d), tb = c.rb.cross(d);
      k += d.dot((inv_inertia_of(c.a) * ta).cross(c.ra));
      k += d.dot((inv_inertia_of(c.b) * tb).cross(c.rb));
      return k;
    };
    c.kn = eff_mass(c.normal);
    c.kt1 = eff_mass(c.t1);
    c.kt2 = eff_mass(c.t2);
    c.bias = kBaumgarte / dt * std::max(0.0, c.depth - kSlop);
    // Contacts may close until they rest kSlop deep; together with the pseudo
    // pass this makes that depth an attractor from both sides, so jitter has
    // no one-way direction to rectify along.
    c.allow = std::max(0.0, kSlop - c.depth) / dt;
  }

  auto apply = [&](int id, const Vec3& impulse, const Vec3& r, double sign) {
    if (id < 0 || bodies[id].inv_mass == 0) return;
    bodies[id].velocity += sign * impulse * bodies[id].inv_mass;
    bodies[id].angular_velocity +=
        sign * (cache[id].inv_inertia_world * r.cross(impulse));
  };

  for (int it = 0; it < solver_iterations; ++it) {
    for (auto& c : contacts) {
      if (c.kn <= 0) continue;
      Vec3 rel = vel_at(c.b, c.rb) - vel_at(c.a, c.ra);
      double vn = rel.dot(c.normal);
      double jn_new = std::max(0.0, c.jn - (vn + c.allow) / c.kn);
      double dj = jn_new - c.jn;
      c.jn = jn_new;
      apply(c.a, dj * c.normal, c.ra, -1.0);
      apply(c.b, dj * c.normal, c.rb, 1.0);

      const double max_f = c.friction * c.jn;
      rel = vel_at(c.b, c.rb) - vel_at(c.a, c.ra);
      double vt1 = rel.dot(c.t1);
      double jt1_new = std::clamp(c.jt1 - vt1 / c.kt1, -max_f, max_f);
      dj = jt1_new - c.jt1;
      c.jt1 = jt1_new;
      apply(c.a, dj * c.t1, c.ra, -1.0);
      apply(c.b, dj * c.t1, c.rb, 1.0);

      rel = vel_at(c.b, c.rb) - vel_at(c.a, c.ra);
      double vt2 = rel.dot(c.t2);
      double jt2_new = std::clamp(c.jt2 - vt2 / c.kt2, -max_f, max_f);
      dj = jt2_new - c.jt2;
      c.jt2 = jt2_new;
      apply(c.a, dj * c.t2, c.ra, -1.0);
      apply(c.b, dj * c.t2, c.rb, 1.0);
    }
  }

  // Split-impulse position pass: penetration is pushed out through pseudo
  // velocities that move poses this step and are then discarded, so the
  // correction never feeds kinetic energy into the real state.
  std::vector<Vec3> pv(n, Vec3::Zero()), pw(n, Vec3::Zero());
  auto pseudo_at = [&](int id, const Vec3& r) -> Vec3 {
    if (id < 0) return Vec3::Zero();
    return pv[id] + pw[id].cross(r);
  };
  auto apply_pseudo = [&](int id, const Vec3& impulse, const Vec3& r,
                          double sign) {
    if (id < 0 || bodies[id].inv_mass == 0) return;
    pv[id] += sign * impulse * bodies[id].inv_mass;
    pw[id] += sign * (cache[id].inv_inertia_world * r.cross(impulse));
  };
  for (int it = 0; it < solver_iterations; ++it) {
    for (auto& c : contacts) {
      if (c.kn <= 0 || c.bias <= 0) continue;
      double vpn = (pseudo_at(c.b, c.rb) - pseudo_at(c.a, c.ra)).dot(c.normal);
      double jp_new = std::max(0.0, c.jp + (c.bias - vpn) / c.kn);
      double dj = jp_new - c.jp;
      c.jp = jp_new;
      apply_pseudo(c.a, dj * c.normal, c.ra, -1.0);
      apply_pseudo(c.b, dj * c.normal, c.rb, 1.0);
    }
  }

  for (size_t i = 0; i < n; ++i) {
    RigidBody& b = bodies[i];
    if (b.inv_mass == 0) continue;
    double speed = b.velocity.norm() + b.angular_velocity.norm() * b.shape->radius;
    if (speed < kNearRestSpeed) {
      b.velocity *= kNearRestDamping;
      b.angular_velocity *= kNearRestDamping;
    }
    b.pose.translation += dt * (b.velocity + pv[i]);
    Vec3 w = b.angular_velocity + pw[i];
    Quat omega(0, w.x(), w.y(), w.z());
    b.pose.rotation.coeffs() += 0.5 * dt * (omega * b.pose.rotation).coeffs();
    b.pose.rotation.normalize();
  }
  if (effector.active) effector.position += dt * effector.velocity;
}

std::vector<Pose> World::poses() const {
  std::vector<Pose> out;
  out.reserve(bodies.size());
  for (const auto& b : bodies) out.push_back(b.pose);
  return out;
}

namespace {

void check_bounds(const World& w) {
  for (const auto& b : w.bodies)
    if (b.pose.translation.norm() > kBoundsLimit)
      throw Diverged("body left the 10 m bounding region");
}

void sample_trace(const World& w, int frame, SimTrace& trace) {
  for (const auto& b : w.bodies) {
    TraceRow row;
    row.frame = frame;
    row.body_id = b.body_id;
    row.rotation = b.pose.rotation;
    row.translation = b.pose.translation;
    trace.rows.push_back(row);
  }
}

}  // namespace

SimTrace settle(World& w, const SettleOptions& opt) {
  SimTrace trace;
  std::vector<Vec3> start;
  for (const auto& b : w.bodies) start.push_back(b.pose.translation);

  const int max_steps = int(std::ceil(opt.t_max / w.dt));
  const int sample_every = std::max(1, int(std::lround(1.0 / (w.dt * opt.output_rate))));
  int rest_run = 0;
  int frame = 0;
  if (opt.record_trace) sample_trace(w, frame++, trace);

  for (int s = 1; s <= max_steps; ++s) {
    w.step();
    check_bounds(w);

    bool all_rest = true;
    bool capped = false;
    for (size_t i = 0; i < w.bodies.size(); ++i) {
      const auto& b = w.bodies[i];
      if (b.inv_mass == 0) continue;
      double speed = b.velocity.norm() + b.angular_velocity.norm() * b.shape->radius;
      if (speed >= opt.v_eps) all_rest = false;
      if ((b.pose.translation - start[i]).norm() > opt.displacement_cap)
        capped = true;
    }
    rest_run = all_rest ? rest_run + 1 : 0;
    if (opt.record_trace && s % sample_every == 0) sample_trace(w, frame++, trace);
    if (rest_run >= int(std::lround(kRestWindow / w.dt)) || capped) break;
  }
  if (opt.record_trace) sample_trace(w, frame, trace);

  trace.displacement.resize(w.bodies.size());
  for (size_t i = 0; i < w.bodies.size(); ++i)
    trace.displacement[i] = (w.bodies[i].pose.translation - start[i]).norm();
  return trace;
}

ReplayResult replay_actions(World& w, const std::vector<PushAction>& actions,
                            const SettleOptions& opt) {
  ReplayResult result;
  std::vector<Vec3> start;
  for (const auto& b : w.bodies) start.push_back(b.pose.translation);

  const int sample_every = std::max(1, int(std::lround(1.0 / (w.dt * opt.output_rate))));
  int frame = 0;
  int step_count = 0;
  sample_trace(w, frame++, result.trace);

  auto run_steps = [&](int steps, bool allow_rest_exit) {
    int rest_run = 0;
    for (int s = 0; s < steps; ++s) {
      w.step();
      check_bounds(w);
      ++step_count;
      if (step_count % sample_every == 0) sample_trace(w, frame++, result.trace);
      if (allow_rest_exit) {
        bool all_rest = true;
        for (const auto& b : w.bodies) {
          if (b.inv_mass == 0) continue;
          double speed =
              b.velocity.norm() + b.angular_velocity.norm() * b.shape->radius;
          if (speed >= opt.v_eps) all_rest = false;
        }
        rest_run = all_rest ? rest_run + 1 : 0;
        if (rest_run >= int(std::lround(kRestWindow / w.dt))) return;
      }
    }
  };

  for (const auto& action : actions) {
    w.effector.position = action.start_point;
    w.effector.velocity = action.speed * action.direction.normalized();
    w.effector.radius = action.effector_radius;
    w.effector.active = true;
    run_steps(int(std::ceil(action.duration / w.dt)), false);
    w.effector.active = false;
    run_steps(int(std::ceil(opt.t_max / w.dt)), true);
    result.after_action.push_back(w.poses());
  }
  sample_trace(w, frame, result.trace);

  result.trace.displacement.resize(w.bodies.size());
  for (size_t i = 0; i < w.bodies.size(); ++i)
    result.trace.displacement[i] = (w.bodies[i].pose.translation - start[i]).norm();
  return result;
}

double max_penetration(const World& w) {
  std::vector<BodyCache> cache(w.bodies.size());
  for (size_t i = 0; i < w.bodies.size(); ++i) build_cache(w.bodies[i], cache[i]);
  std::vector<Contact> contacts;
  for (size_t i = 0; i < w.bodies.size(); ++i) {
    if (w.has_support && w.bodies[i].inv_mass > 0)
      collide_support(int(i), w.bodies[i], cache[i], w.support_z, contacts, 0.01);
    for (size_t j = i + 1; j < w.bodies.size(); ++j)
      collide_hulls(int(i), int(j), w.bodies[i], w.bodies[j], cache[i], cache[j],
                    contacts, 0.01);
  }
  double worst = 0.0;
  for (const auto& c : contacts) worst = std::max(worst, c.depth);
  return worst;
}

}  // namespace ipr
