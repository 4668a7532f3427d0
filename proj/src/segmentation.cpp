#include "ipr/segmentation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "ipr/convex_hull.hpp"

namespace ipr {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

constexpr double kZeroDegree = 1e-12;
constexpr double kEigengapEps = 1e-6;

struct CellKey {
  int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
  bool operator<(const CellKey& o) const {
    return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
  }
};

struct CellKeyHash {
  size_t operator()(const CellKey& k) const {
    uint64_t h = 1469598103934665603ULL;
    for (uint64_t v : {uint64_t(k.x), uint64_t(k.y), uint64_t(k.z)}) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return size_t(h);
  }
};

double point_segment_dist(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 d = b - a;
  double len2 = d.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Lloyd k-means on rows of U; returns inertia and fills labels.
double kmeans_once(const Eigen::MatrixXd& u, int k, Rng& rng,
                   std::vector<int>& labels) {
  const int n = int(u.rows());
  Eigen::MatrixXd centers(k, u.cols());
  // k-means++ style seeding: spread the initial centers out.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  int first = int(rng.uniform_int(uint64_t(n)));
  centers.row(0) = u.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (u.row(i) - centers.row(c - 1)).squaredNorm());
      total += d2[i];
    }
    double target = rng.uniform() * total;
    int pick = n - 1;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    centers.row(c) = u.row(pick);
  }

  labels.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = (u.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, u.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += u.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Revive an empty cluster with the point farthest from its center.
      int far = 0;
      double fd = -1;
      for (int i = 0; i < n; ++i) {
        double d = (u.row(i) - centers.row(labels[i])).squaredNorm();
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      centers.row(c) = u.row(far);
      labels[far] = c;
      changed = true;
    }
    if (!changed && iter > 0) break;
  }
  double inertia = 0;
  for (int i = 0; i < n; ++i)
    inertia += (u.row(i) - centers.row(labels[i])).squaredNorm();
  return inertia;
}

}  // namespace

Vec3 PartialObject::centroid() const {
  Vec3 sum = Vec3::Zero();
  size_t count = 0;
  for (const auto& f : facets) {
    for (const auto& p : f.points) sum += p;
    count += f.points.size();
  }
  return count ? Vec3(sum / double(count)) : Vec3::Zero();
}

size_t PartialObject::point_count() const {
  size_t count = 0;
  for (const auto& f : facets) count += f.points.size();
  return count;
}

std::vector<ColoredPoint> remove_known_geometry(const std::vector<ColoredPoint>& cloud,
                                                int known_planes,
                                                const EffectorSweep& effector,
                                                Rng& rng,
                                                double plane_tolerance) {
  std::vector<ColoredPoint> out = cloud;

  for (int pass = 0; pass < known_planes; ++pass) {
    const size_t n = out.size();
    if (n < 30) break;

    Vec3 best_n = Vec3::UnitZ();
    double best_d = 0;
    size_t best_count = 0;
    for (int iter = 0; iter < 200; ++iter) {
      size_t ia = rng.uniform_int(n), ib = rng.uniform_int(n), ic = rng.uniform_int(n);
      if (ia == ib || ib == ic || ia == ic) continue;
      Vec3 a = out[ia].position;
      Vec3 nrm = (out[ib].position - a).cross(out[ic].position - a);
      double len = nrm.norm();
      if (len < 1e-12) continue;
      nrm /= len;
      double d = nrm.dot(a);
      size_t count = 0;
      for (const auto& p : out)
        if (std::abs(nrm.dot(p.position) - d) <= plane_tolerance) ++count;
      if (count > best_count) {
        best_count = count;
        best_n = nrm;
        best_d = d;
      }
    }
    // Only remove planes that explain a substantial share of the cloud.
    // A best-of-200 slab through a compact blob can reach ~25% membership,
    // so the bar sits above that; a real support plane clears 50% easily.
    if (best_count < std::max<size_t>(30, (3 * n) / 10)) break;

    std::vector<Vec3> inliers;
    for (const auto& p : out)
      if (std::abs(best_n.dot(p.position) - best_d) <= plane_tolerance)
        inliers.push_back(p.position);
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : inliers) centroid += p;
    centroid /= double(inliers.size());
    Vec3 refined_n = plane_normal(inliers);
    double refined_d = refined_n.dot(centroid);

    std::vector<ColoredPoint> kept;
    kept.reserve(out.size());
    for (const auto& p : out)
      if (std::abs(refined_n.dot(p.position) - refined_d) > plane_tolerance)
        kept.push_back(p);
    out = std::move(kept);
  }

  if (!effector.path.empty()) {
    std::vector<ColoredPoint> kept;
    kept.reserve(out.size());
    for (const auto& p : out) {
      bool inside = false;
      if (effector.path.size() == 1) {
        inside = (p.position - effector.path[0]).norm() <= effector.radius;
      } else {
        for (size_t s = 0; s + 1 < effector.path.size() && !inside; ++s)
          inside = point_segment_dist(p.position, effector.path[s],
                                      effector.path[s + 1]) <= effector.radius;
      }
      if (!inside) kept.push_back(p);
    }
    out = std::move(kept);
  }
  return out;
}

std::vector<Supervoxel> extract_supervoxels(const std::vector<ColoredPoint>& cloud,
                                            double spatial_bandwidth,
                                            double color_bandwidth,
                                            const Vec3& camera_origin) {
  std::vector<Supervoxel> result;
  if (cloud.empty()) return result;

  const size_t n = cloud.size();
  std::vector<Vec6> scaled(n);
  for (size_t i = 0; i < n; ++i) {
    scaled[i].head<3>() = cloud[i].position / spatial_bandwidth;
    scaled[i].tail<3>() = cloud[i].color / color_bandwidth;
  }

  auto cell_of = [&](const Vec3& p) {
    return CellKey{int64_t(std::floor(p.x() / spatial_bandwidth)),
                   int64_t(std::floor(p.y() / spatial_bandwidth)),
                   int64_t(std::floor(p.z() / spatial_bandwidth))};
  };
  std::unordered_map<CellKey, std::vector<size_t>, CellKeyHash> grid;
  for (size_t i = 0; i < n; ++i) grid[cell_of(cloud[i].position)].push_back(i);

  // Candidates within kernel range of a scaled-space location. The kernel
  // radius is 1, so positions differ by at most one bandwidth.
  auto neighbors = [&](const Vec6& s, auto&& fn) {
    Vec3 p = s.head<3>() * spatial_bandwidth;
    CellKey c = cell_of(p);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = grid.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (size_t idx : it->second)
            if ((scaled[idx] - s).norm() <= 1.0) fn(idx);
        }
  };

  // One mean-shift walker per occupied cell, visited in sorted order.
  std::vector<std::pair<CellKey, Vec6>> seeds;
  seeds.reserve(grid.size());
  for (const auto& [key, members] : grid) {
    Vec6 mean = Vec6::Zero();
    for (size_t idx : members) mean += scaled[idx];
    seeds.emplace_back(key, mean / double(members.size()));
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<Vec6> modes;
  for (auto& [key, seed] : seeds) {
    Vec6 s = seed;
    for (int iter = 0; iter < 60; ++iter) {
      Vec6 sum = Vec6::Zero();
      int count = 0;
      neighbors(s, [&](size_t idx) {
        sum += scaled[idx];
        ++count;
      });
      if (count == 0) break;
      Vec6 next = sum / double(count);
      double step = (next - s).norm();
      s = next;
      if (step < 1e-7) break;
    }
    bool merged = false;
    for (const auto& m : modes)
      if ((m - s).norm() < 0.5) {
        merged = true;
        break;
      }
    if (!merged) modes.push_back(s);
  }

  // Assign every point to its nearest mode in the joint space.
  std::vector<std::vector<size_t>> assignment(modes.size());
  for (size_t i = 0; i < n; ++i) {
    size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < modes.size(); ++m) {
      double d = (modes[m] - scaled[i]).squaredNorm();
      if (d < bd) {
        bd = d;
        best = m;
      }
    }
    assignment[best].push_back(i);
  }

  int next_id = 0;
  for (const auto& members : assignment) {
    if (members.empty()) continue;
    Supervoxel sv;
    sv.id = next_id++;
    for (size_t idx : members) {
      sv.members.push_back(cloud[idx]);
      sv.center += cloud[idx].position;
      sv.mean_color += cloud[idx].color;
    }
    sv.center /= double(members.size());
    sv.mean_color /= double(members.size());

    if (members.size() >= 3) {
      std::vector<Vec3> pts;
      pts.reserve(members.size());
      for (size_t idx : members) pts.push_back(cloud[idx].position);
      sv.normal = plane_normal(pts);
      if (sv.normal.norm() < 0.5) sv.normal = Vec3::UnitZ();
    } else {
      Vec3 to_cam = camera_origin - sv.center;
      sv.normal = to_cam.norm() > 1e-12 ? Vec3(to_cam.normalized()) : Vec3::UnitZ();
    }
    if (sv.normal.dot(camera_origin - sv.center) < 0) sv.normal = -sv.normal;
    result.push_back(std::move(sv));
  }
  return result;
}

SupervoxelGraph build_adjacency(const std::vector<Supervoxel>& svs,
                                double spatial_bandwidth,
                                double adjacency_factor) {
  SupervoxelGraph g;
  g.nodes = svs;
  g.weight_floor = 0.1 * spatial_bandwidth;
  const double thr = adjacency_factor * spatial_bandwidth;
  const double thr2 = thr * thr;

  std::vector<double> radius(svs.size(), 0.0);
  for (size_t i = 0; i < svs.size(); ++i)
    for (const auto& p : svs[i].members)
      radius[i] = std::max(radius[i], (p.position - svs[i].center).norm());

  for (size_t i = 0; i < svs.size(); ++i) {
    for (size_t j = i + 1; j < svs.size(); ++j) {
      double gap = (svs[i].center - svs[j].center).norm() - radius[i] - radius[j];
      if (gap > thr) continue;
      bool close = false;
      for (const auto& a : svs[i].members) {
        for (const auto& b : svs[j].members) {
          if ((a.position - b.position).squaredNorm() <= thr2) {
            close = true;
            break;
          }
        }
        if (close) break;
      }
      if (!close) continue;
      Vec3 dij = svs[i].center - svs[j].center;
      double w = std::max({svs[i].normal.dot(dij), svs[j].normal.dot(-dij), 0.0});
      g.edges.push_back({int(i), int(j), w});
    }
  }
  return g;
}

std::vector<std::vector<Supervoxel>> spectral_cluster(const SupervoxelGraph& g,
                                                      Rng& rng) {
  const int n = int(g.nodes.size());
  std::vector<std::vector<Supervoxel>> out;
  if (n == 0) return out;

  // Affinity filter. Supervoxels straddling a crease have centers pulled off
  // their surface plane, which fabricates small convex weights between
  // separate objects. Two tests, both scaled by the graph's floor: the weight
  // must clear the floor, and the two one-sided projections must agree (a
  // genuine convex junction reads convex from both sides; a straddle artifact
  // reads clearly concave from one of them).
  auto effective = [&](const GraphEdge& e) {
    if (g.weight_floor <= 0) return e.weight;
    if (e.weight < g.weight_floor) return 0.0;
    Vec3 d = g.nodes[e.i].center - g.nodes[e.j].center;
    double si = g.nodes[e.i].normal.dot(d);
    double sj = g.nodes[e.j].normal.dot(-d);
    if (std::min(si, sj) < -g.weight_floor) return 0.0;
    return e.weight;
  };

  std::vector<double> degree(n, 0.0);
  UnionFind uf(n);
  for (const auto& e : g.edges) {
    degree[e.i] += effective(e);
    degree[e.j] += effective(e);
    uf.unite(e.i, e.j);
  }

  // Nodes whose incident weights are all zero carry no spectral signal; flat
  // surface interiors are exactly this on noise-free data. They inherit the
  // label of the nearest weighted node through the edge structure, and
  // components with no weighted node at all become one cluster each.
  std::vector<int> spectral_nodes;
  std::vector<int> spectral_index(n, -1);
  for (int i = 0; i < n; ++i) {
    if (degree[i] > kZeroDegree) {
      spectral_index[i] = int(spectral_nodes.size());
      spectral_nodes.push_back(i);
    }
  }

  std::vector<std::vector<int>> clusters;
  const int m = int(spectral_nodes.size());
  std::vector<int> node_cluster(n, -1);

  if (m == 1) {
    clusters.push_back({spectral_nodes[0]});
    node_cluster[spectral_nodes[0]] = 0;
  } else if (m > 1) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
    for (const auto& e : g.edges) {
      int a = spectral_index[e.i], b = spectral_index[e.j];
      if (a < 0 || b < 0) continue;
      w(a, b) += effective(e);
      w(b, a) += effective(e);
    }
    Eigen::VectorXd dinv_sqrt(m);
    for (int i = 0; i < m; ++i) dinv_sqrt(i) = 1.0 / std::sqrt(degree[spectral_nodes[i]]);
    Eigen::MatrixXd lsym = Eigen::MatrixXd::Identity(m, m) -
                           dinv_sqrt.asDiagonal() * w * dinv_sqrt.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lsym);
    const Eigen::VectorXd& ev = es.eigenvalues();

    const int kmax = std::min(15, m - 1);
    int best_k = 1;
    double best_gap = -1;
    for (int k = 1; k <= kmax; ++k) {
      double gap = (ev(k) - ev(k - 1)) / (ev(k - 1) + kEigengapEps);
      if (gap > best_gap) {
        best_gap = gap;
        best_k = k;
      }
    }

    std::vector<int> labels(m, 0);
    if (best_k > 1) {
      Eigen::MatrixXd u = es.eigenvectors().leftCols(best_k);
      for (int i = 0; i < m; ++i) {
        double len = u.row(i).norm();
        if (len > 1e-12) u.row(i) /= len;
      }
      double best_inertia = std::numeric_limits<double>::infinity();
      for (int restart = 0; restart < 20; ++restart) {
        std::vector<int> trial;
        double inertia = kmeans_once(u, best_k, rng, trial);
        if (inertia < best_inertia) {
          best_inertia = inertia;
          labels = trial;
        }
      }
    }

    std::map<int, std::vector<int>> by_label;
    for (int i = 0; i < m; ++i) by_label[labels[i]].push_back(spectral_nodes[i]);
    for (auto& [label, members] : by_label) {
      for (int idx : members) node_cluster[idx] = int(clusters.size());
      clusters.push_back(members);
    }
  }

  // Label propagation from the weighted skeleton along cheapest similarity
  // paths. Hop counts alone could hand a flat interior to a neighboring
  // object whose skeleton happens to be fewer hops away; weighting edges by
  // center and color distance keeps the walk inside the surface it started
  // on. 0.2 m per unit of color matches the default bandwidth ratio.
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  auto edge_cost = [&](int a, int b) {
    return (g.nodes[a].center - g.nodes[b].center).norm() +
           0.2 * (g.nodes[a].mean_color - g.nodes[b].mean_color).norm();
  };
  using QItem = std::pair<double, int>;  // cost, node
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<int> propagated = node_cluster;
  for (int i = 0; i < n; ++i)
    if (node_cluster[i] >= 0) {
      cost[i] = 0;
      pq.push({0.0, i});
    }
  while (!pq.empty()) {
    auto [c, cur] = pq.top();
    pq.pop();
    if (c > cost[cur]) continue;
    for (int nb : adj[cur]) {
      double nc = c + edge_cost(cur, nb);
      if (nc < cost[nb]) {
        cost[nb] = nc;
        propagated[nb] = propagated[cur];
        pq.push({nc, nb});
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (node_cluster[i] < 0 && propagated[i] >= 0) {
      node_cluster[i] = propagated[i];
      clusters[propagated[i]].push_back(i);
    }

  // Components with no weighted node at all (a lone flat board, or a graph
  // whose weights are all zero) become one cluster per component.
  std::map<int, std::vector<int>> leftover;
  for (int i = 0; i < n; ++i)
    if (node_cluster[i] < 0) leftover[uf.find(i)].push_back(i);
  for (auto& [root, members] : leftover) clusters.push_back(members);

  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (const auto& c : clusters) {
    std::vector<Supervoxel> svs;
    svs.reserve(c.size());
    for (int idx : c) svs.push_back(g.nodes[idx]);
    out.push_back(std::move(svs));
  }
  return out;
}

PartialObject decompose_facets(const std::vector<Supervoxel>& cluster,
                               int object_id, int frame_index,
                               double normal_bandwidth_deg) {
  PartialObject obj;
  obj.id = object_id;
  obj.frame_index = frame_index;
  if (cluster.empty()) return obj;

  const double bw = normal_bandwidth_deg * std::numbers::pi / 180.0;
  const double cos_bw = std::cos(bw);

  // Mean shift on the unit sphere, one walker per supervoxel normal.
  std::vector<Vec3> modes;
  for (size_t s = 0; s < cluster.size(); ++s) {
    Vec3 w = cluster[s].normal;
    for (int iter = 0; iter < 50; ++iter) {
      Vec3 sum = Vec3::Zero();
      for (const auto& sv : cluster)
        if (sv.normal.dot(w) >= cos_bw) sum += sv.normal;
      double len = sum.norm();
      if (len < 1e-12) break;
      Vec3 next = sum / len;
      double advance = 1.0 - next.dot(w);
      w = next;
      if (advance < 1e-12) break;
    }
    bool merged = false;
    for (const auto& m : modes)
      if (m.dot(w) >= std::cos(bw * 0.5)) {
        merged = true;
        break;
      }
    if (!merged) modes.push_back(w);
  }

  std::vector<std::vector<size_t>> regions(modes.size());
  for (size_t s = 0; s < cluster.size(); ++s) {
    size_t best = 0;
    double bd = -2.0;
    for (size_t m = 0; m < modes.size(); ++m) {
      double d = modes[m].dot(cluster[s].normal);
      if (d > bd) {
        bd = d;
        best = m;
      }
    }
    regions[best].push_back(s);
  }

  // Supervoxels straddling a sharp edge carry blended normals and spawn tiny
  // in-between regions; fold those into the nearest substantial region.
  const size_t support = std::max<size_t>(2, size_t(std::ceil(0.08 * double(cluster.size()))));
  bool any_large = false;
  for (const auto& r : regions) any_large = any_large || r.size() >= support;
  if (any_large) {
    for (size_t m = 0; m < regions.size(); ++m) {
      if (regions[m].empty() || regions[m].size() >= support) continue;
      size_t target = m;
      double bd = -2.0;
      for (size_t t = 0; t < regions.size(); ++t) {
        if (t == m || regions[t].size() < support) continue;
        double d = modes[t].dot(modes[m]);
        if (d > bd) {
          bd = d;
          target = t;
        }
      }
      if (target != m) {
        regions[target].insert(regions[target].end(), regions[m].begin(),
                               regions[m].end());
        std::sort(regions[target].begin(), regions[target].end());
        regions[m].clear();
      }
    }
  }

  int facet_id = 0;
  for (size_t m = 0; m < regions.size(); ++m) {
    if (regions[m].empty()) continue;
    Facet f;
    f.id = facet_id++;
    f.origin = FacetOrigin::Observed;
    f.parent = -1;
    for (size_t s : regions[m])
      for (const auto& p : cluster[s].members) f.points.push_back(p.position);
    // The mode, not the raw member mean: folded-in edge stragglers would
    // otherwise tilt the plane of a clean face.
    f.normal = modes[m].normalized();
    f.centroid = Vec3::Zero();
    for (const auto& p : f.points) f.centroid += p;
    f.centroid /= double(f.points.size());
    obj.facets.push_back(std::move(f));
  }
  return obj;
}

std::map<int, int> associate_frames(const std::vector<PartialObject>& prev,
                                    const std::vector<PartialObject>& cur,
                                    double gate) {
  struct Pair {
    double dist;
    size_t pi, ci;
  };
  std::vector<Pair> pairs;
  for (size_t p = 0; p < prev.size(); ++p)
    for (size_t c = 0; c < cur.size(); ++c) {
      double d = (prev[p].centroid() - cur[c].centroid()).norm();
      if (d <= gate) pairs.push_back({d, p, c});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.dist, a.pi, a.ci) < std::tie(b.dist, b.pi, b.ci);
  });

  std::map<int, int> mapping;
  std::vector<bool> prev_used(prev.size(), false), cur_used(cur.size(), false);
  for (const auto& pr : pairs) {
    if (prev_used[pr.pi] || cur_used[pr.ci]) continue;
    prev_used[pr.pi] = true;
    cur_used[pr.ci] = true;
    mapping[int(pr.ci)] = prev[pr.pi].id;
  }
  for (size_t c = 0; c < cur.size(); ++c)
    if (!cur_used[c]) mapping[int(c)] = -1;
  return mapping;
}

std::vector<PartialObject> segment_frame(const std::vector<ColoredPoint>& cloud,
                                         const Vec3& camera_origin,
                                         const SegmentationParams& params,
                                         int frame_index, Rng& rng) {
  std::vector<PartialObject> objects;
  if (cloud.empty()) return objects;

  auto svs = extract_supervoxels(cloud, params.spatial_bandwidth,
                                 params.color_bandwidth, camera_origin);
  auto graph = build_adjacency(svs, params.spatial_bandwidth, params.adjacency_factor);
  auto clusters = spectral_cluster(graph, rng);
  for (size_t c = 0; c < clusters.size(); ++c)
    objects.push_back(decompose_facets(clusters[c], int(c), frame_index,
                                       params.normal_bandwidth_deg));
  return objects;
}

}  // namespace ipr
