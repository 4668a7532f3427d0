#include "ipr/convex_hull.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace ipr {

double Facet::bounding_radius() const {
  double r2 = 0.0;
  for (const auto& p : points) r2 = std::max(r2, (p - centroid).squaredNorm());
  return std::sqrt(r2);
}

Vec3 ConvexMesh::centroid() const { return component_mean(vertices); }

bool ConvexMesh::contains(const Vec3& p, double tol) const {
  for (size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = vertices[faces[f][0]];
    if (face_normals[f].dot(p - a) > tol) return false;
  }
  return true;
}

Facet make_facet(int id, std::vector<Vec3> points, const Vec3& normal,
                 FacetOrigin origin, int parent) {
  Facet f;
  f.id = id;
  f.points = std::move(points);
  f.normal = normal.normalized();
  f.centroid = component_mean(f.points);
  f.origin = origin;
  f.parent = parent;
  return f;
}

namespace {

constexpr double kDegenerateTol = 1e-7;  // coplanarity tolerance, meters

struct HullFace {
  std::array<int, 3> v;
  Vec3 n;
  double d = 0.0;  // plane n . x = d
  bool alive = true;
  std::vector<int> outside;
  int far_pt = -1;
  double far_dist = 0.0;
};

double signed_dist(const HullFace& f, const Vec3& p) { return f.n.dot(p) - f.d; }

}  // namespace

ConvexMesh convex_hull(const std::vector<Vec3>& points) {
  return convex_hull(std::span<const Vec3>(points.data(), points.size()));
}

ConvexMesh convex_hull(std::span<const Vec3> points) {
  if (points.size() < 4) throw DegenerateInput("convex_hull: fewer than 4 points");

  std::vector<Vec3> pts(points.begin(), points.end());

  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = (hi - lo).norm();
  const double eps = 1e-12 * (1.0 + scale);

  auto lex_less = [](const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  };

  // Initial simplex from extreme points.
  int i0 = 0;
  for (size_t i = 1; i < pts.size(); ++i)
    if (lex_less(pts[i], pts[i0])) i0 = int(i);

  int i1 = -1;
  double best = kDegenerateTol;
  for (size_t i = 0; i < pts.size(); ++i) {
    double d = (pts[i] - pts[i0]).norm();
    if (d > best) {
      best = d;
      i1 = int(i);
    }
  }
  if (i1 < 0) throw DegenerateInput("convex_hull: all points coincident");

  const Vec3 axis = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  best = kDegenerateTol;
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec3 r = pts[i] - pts[i0];
    double d = (r - axis * axis.dot(r)).norm();
    if (d > best) {
      best = d;
      i2 = int(i);
    }
  }
  if (i2 < 0) throw DegenerateInput("convex_hull: points collinear");

  Vec3 n0 = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = kDegenerateTol;
  for (size_t i = 0; i < pts.size(); ++i) {
    double d = std::abs(n0.dot(pts[i] - pts[i0]));
    if (d > best) {
      best = d;
      i3 = int(i);
    }
  }
  if (i3 < 0) throw DegenerateInput("convex_hull: points coplanar");

  const Vec3 interior =
      0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);

  std::vector<HullFace> faces;
  auto push_face = [&](int a, int b, int c) {
    HullFace f;
    f.v = {a, b, c};
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    if (n.dot(interior - pts[a]) > 0.0) {
      std::swap(f.v[1], f.v[2]);
      n = -n;
    }
    double len = n.norm();
    if (len < 1e-30) return false;
    f.n = n / len;
    f.d = f.n.dot(pts[f.v[0]]);
    faces.push_back(std::move(f));
    return true;
  };
  push_face(i0, i1, i2);
  push_face(i0, i1, i3);
  push_face(i0, i2, i3);
  push_face(i1, i2, i3);

  auto assign_point = [&](int pi, size_t face_begin) {
    double bestd = eps;
    int bestf = -1;
    for (size_t f = face_begin; f < faces.size(); ++f) {
      if (!faces[f].alive) continue;
      double d = signed_dist(faces[f], pts[pi]);
      if (d > bestd) {
        bestd = d;
        bestf = int(f);
      }
    }
    if (bestf >= 0) {
      faces[bestf].outside.push_back(pi);
      if (bestd > faces[bestf].far_dist) {
        faces[bestf].far_dist = bestd;
        faces[bestf].far_pt = pi;
      }
    }
  };

  for (size_t i = 0; i < pts.size(); ++i) {
    if (int(i) == i0 || int(i) == i1 || int(i) == i2 || int(i) == i3) continue;
    assign_point(int(i), 0);
  }

  // Expand until no face keeps an outside point.
  for (;;) {
    int seed = -1;
    double far = 0.0;
    for (size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && faces[f].far_pt >= 0 && faces[f].far_dist > far) {
        far = faces[f].far_dist;
        seed = int(f);
      }
    }
    if (seed < 0) break;

    const int apex = faces[seed].far_pt;
    const Vec3 ap = pts[apex];

    std::vector<int> visible;
    for (size_t f = 0; f < faces.size(); ++f) {
      if (faces[f].alive && signed_dist(faces[f], ap) > eps) visible.push_back(int(f));
    }

    // Horizon: directed edges of visible faces whose undirected twin is absent.
    std::map<std::pair<int, int>, std::pair<int, int>> edge_use;  // undirected -> (count, a)
    for (int fi : visible) {
      const auto& v = faces[fi].v;
      for (int e = 0; e < 3; ++e) {
        int a = v[e], b = v[(e + 1) % 3];
        std::pair<int, int> key = std::minmax(a, b);
        auto it = edge_use.find(key);
        if (it == edge_use.end())
          edge_use.emplace(key, std::make_pair(1, a));
        else
          it->second.first++;
      }
    }

    std::vector<int> stale;
    for (int fi : visible) {
      faces[fi].alive = false;
      for (int pi : faces[fi].outside)
        if (pi != apex) stale.push_back(pi);
      faces[fi].outside.clear();
      faces[fi].far_pt = -1;
    }

    size_t new_begin = faces.size();
    bool ok = true;
    for (const auto& [key, use] : edge_use) {
      if (use.first != 1) continue;
      int a = use.second;
      int b = (key.first == a) ? key.second : key.first;
      if (!push_face(a, b, apex)) ok = false;
    }
    if (!ok || faces.size() == new_begin) {
      // Apex numerically coincides with the horizon; drop it and retry.
      for (int fi : visible) faces[fi].alive = true;
      faces.resize(new_begin);
      for (int pi : stale) assign_point(pi, 0);
      // Remove apex from every outside list so it is not picked again.
      for (auto& f : faces) {
        auto& o = f.outside;
        o.erase(std::remove(o.begin(), o.end(), apex), o.end());
        if (f.far_pt == apex) {
          f.far_pt = -1;
          f.far_dist = 0.0;
          for (int pi : o) {
            double d = signed_dist(f, pts[pi]);
            if (d > f.far_dist) {
              f.far_dist = d;
              f.far_pt = pi;
            }
          }
        }
      }
      continue;
    }

    for (int pi : stale) assign_point(pi, 0);
  }

  // Compact to the final mesh.
  ConvexMesh mesh;
  std::unordered_map<int, int> remap;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    std::array<int, 3> tri{};
    for (int e = 0; e < 3; ++e) {
      auto it = remap.find(f.v[e]);
      if (it == remap.end()) {
        it = remap.emplace(f.v[e], int(mesh.vertices.size())).first;
        mesh.vertices.push_back(pts[f.v[e]]);
      }
      tri[e] = it->second;
    }
    mesh.faces.push_back(tri);
    mesh.face_normals.push_back(f.n);
  }

  const Vec3 c0 = mesh.centroid();
  double vol6 = 0.0;
  for (const auto& tri : mesh.faces) {
    Vec3 a = mesh.vertices[tri[0]] - c0;
    Vec3 b = mesh.vertices[tri[1]] - c0;
    Vec3 c = mesh.vertices[tri[2]] - c0;
    vol6 += a.dot(b.cross(c));
  }
  mesh.volume = vol6 / 6.0;
  return mesh;
}

std::vector<FacePolygon> merge_coplanar_faces(const ConvexMesh& mesh,
                                              double angle_tol) {
  const size_t nf = mesh.faces.size();
  const double cos_tol = std::cos(angle_tol);

  // Face adjacency over shared undirected edges.
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (size_t f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    for (int e = 0; e < 3; ++e) {
      std::pair<int, int> key = std::minmax(tri[e], tri[(e + 1) % 3]);
      edge_faces[key].push_back(int(f));
    }
  }

  std::vector<int> group(nf, -1);
  std::vector<Vec3> group_normal;
  for (size_t f = 0; f < nf; ++f) {
    if (group[f] >= 0) continue;
    int g = int(group_normal.size());
    group_normal.push_back(mesh.face_normals[f]);
    group[f] = g;
    std::vector<int> stack{int(f)};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      const auto& tri = mesh.faces[cur];
      for (int e = 0; e < 3; ++e) {
        std::pair<int, int> key = std::minmax(tri[e], tri[(e + 1) % 3]);
        for (int nb : edge_faces[key]) {
          if (group[nb] >= 0) continue;
          if (mesh.face_normals[nb].dot(group_normal[g].normalized()) >= cos_tol) {
            group[nb] = g;
            group_normal[g] += mesh.face_normals[nb];  // running mean, renormalized on use
            stack.push_back(nb);
          }
        }
      }
    }
  }

  std::vector<FacePolygon> polys(group_normal.size());
  std::vector<std::map<int, int>> boundary_next(group_normal.size());
  std::vector<double> offset_acc(group_normal.size(), 0.0);
  std::vector<int> offset_cnt(group_normal.size(), 0);

  // Directed edges used once within a group form its boundary loop.
  for (size_t g = 0; g < group_normal.size(); ++g) polys[g].normal = group_normal[g].normalized();
  std::map<std::pair<int, int>, int> dir_count;
  for (size_t f = 0; f < nf; ++f) {
    const auto& tri = mesh.faces[f];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      std::pair<int, int> key = std::minmax(a, b);
      const auto& adj = edge_faces[key];
      bool internal = adj.size() == 2 && group[adj[0]] == group[adj[1]];
      if (!internal) boundary_next[group[f]][a] = b;
    }
    for (int e = 0; e < 3; ++e) {
      offset_acc[group[f]] += polys[group[f]].normal.dot(mesh.vertices[tri[e]]);
      offset_cnt[group[f]]++;
    }
  }

  for (size_t g = 0; g < polys.size(); ++g) {
    polys[g].offset = offset_acc[g] / std::max(1, offset_cnt[g]);
    auto& nxt = boundary_next[g];
    if (nxt.empty()) continue;
    int start = nxt.begin()->first;
    int cur = start;
    size_t guard = 0;
    do {
      polys[g].loop.push_back(cur);
      auto it = nxt.find(cur);
      if (it == nxt.end()) break;
      cur = it->second;
    } while (cur != start && ++guard <= nxt.size());
  }
  return polys;
}

std::vector<Facet> hull_facets(const ConvexMesh& mesh, double angle_tol) {
  auto polys = merge_coplanar_faces(mesh, angle_tol);
  std::vector<Facet> out;
  out.reserve(polys.size());
  for (size_t g = 0; g < polys.size(); ++g) {
    std::vector<Vec3> pts;
    pts.reserve(polys[g].loop.size());
    for (int vi : polys[g].loop) pts.push_back(mesh.vertices[vi]);
    out.push_back(make_facet(int(g), std::move(pts), polys[g].normal,
                             FacetOrigin::Observed));
  }
  return out;
}

Facet mirror_facet(const Facet& f, double d) {
  Facet out;
  out.id = -1;
  out.parent = f.id;
  out.origin = FacetOrigin::Hypothesized;
  out.normal = -f.normal;
  out.points.reserve(f.points.size());
  const Vec3 n = f.normal;
  const Vec3 shift = d * n;
  for (const auto& p : f.points) {
    Vec3 reflected = p - 2.0 * n.dot(p - f.centroid) * n;
    out.points.push_back(reflected - shift);
  }
  out.centroid = component_mean(out.points);
  return out;
}

bool facets_intersect(const Facet& f1, const Facet& f2, double tol,
                      double angle_tol) {
  const double r1 = f1.bounding_radius(), r2 = f2.bounding_radius();
  if ((f1.centroid - f2.centroid).norm() > r1 + r2 + tol) return false;

  // Near pairs via a hash grid over f2.
  const double cell = std::max(tol, 1e-6);
  auto key_of = [&](const Vec3& p) {
    auto q = [&](double x) { return int64_t(std::floor(x / cell)); };
    return std::tuple<int64_t, int64_t, int64_t>(q(p.x()), q(p.y()), q(p.z()));
  };
  std::map<std::tuple<int64_t, int64_t, int64_t>, std::vector<int>> grid;
  for (size_t i = 0; i < f2.points.size(); ++i) grid[key_of(f2.points[i])].push_back(int(i));

  const double tol2 = tol * tol;
  const double plane1 = f1.normal.dot(f1.centroid);
  const double plane2 = f2.normal.dot(f2.centroid);
  bool any_near = false;
  // Signed plane distances of the points participating in near pairs.
  double lo1 = 1e300, hi1 = -1e300;  // f1 points against f2's plane
  double lo2 = 1e300, hi2 = -1e300;  // f2 points against f1's plane
  for (const auto& p : f1.points) {
    auto [kx, ky, kz] = key_of(p);
    for (int64_t dx = -1; dx <= 1; ++dx)
      for (int64_t dy = -1; dy <= 1; ++dy)
        for (int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({kx + dx, ky + dy, kz + dz});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            const Vec3& q = f2.points[j];
            if ((p - q).squaredNorm() > tol2) continue;
            any_near = true;
            double s1 = f2.normal.dot(p) - plane2;
            double s2 = f1.normal.dot(q) - plane1;
            lo1 = std::min(lo1, s1);
            hi1 = std::max(hi1, s1);
            lo2 = std::min(lo2, s2);
            hi2 = std::max(hi2, s2);
          }
        }
  }
  if (!any_near) return false;

  const double cosang = std::abs(f1.normal.dot(f2.normal));
  if (cosang >= std::cos(angle_tol)) return true;  // parallel planes in contact

  // Distinct planes: a true crossing drives each point set through the
  // other's plane near the contact; edge or T contact stays one-sided.
  const double half = 0.5 * tol;
  bool straddle1 = lo1 < -half && hi1 > half;
  bool straddle2 = lo2 < -half && hi2 > half;
  return straddle1 && straddle2;
}

MassProperties compute_mass_properties(const ConvexMesh& mesh, double density) {
  double vol = 0.0;
  Vec3 com_acc = Vec3::Zero();
  Mat3 P = Mat3::Zero();  // second moments about the origin

  for (const auto& tri : mesh.faces) {
    const Vec3& p1 = mesh.vertices[tri[0]];
    const Vec3& p2 = mesh.vertices[tri[1]];
    const Vec3& p3 = mesh.vertices[tri[2]];
    double det = p1.dot(p2.cross(p3));
    vol += det / 6.0;
    com_acc += det / 24.0 * (p1 + p2 + p3);
    Vec3 s = p1 + p2 + p3;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        P(j, k) += det / 120.0 *
                   (s[j] * s[k] + p1[j] * p1[k] + p2[j] * p2[k] + p3[j] * p3[k]);
  }

  MassProperties mp;
  mp.mass = density * vol;
  mp.com = (vol > 0.0) ? Vec3(com_acc / vol) : mesh.centroid();
  P *= density;

  Mat3 I_origin;
  I_origin << P(1, 1) + P(2, 2), -P(0, 1), -P(0, 2),
      -P(0, 1), P(0, 0) + P(2, 2), -P(1, 2),
      -P(0, 2), -P(1, 2), P(0, 0) + P(1, 1);
  const Vec3& c = mp.com;
  Mat3 shift = mp.mass * (c.squaredNorm() * Mat3::Identity() - c * c.transpose());
  mp.inertia = I_origin - shift;
  return mp;
}

Vec3 plane_normal(const std::vector<Vec3>& points) {
  Vec3 mean = component_mean(points);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    Vec3 r = p - mean;
    cov += r * r.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return es.eigenvectors().col(0).normalized();
}

}  // namespace ipr
