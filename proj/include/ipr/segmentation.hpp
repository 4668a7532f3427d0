#pragma once

#include <map>
#include <vector>

#include "ipr/rng.hpp"
#include "ipr/types.hpp"

namespace ipr {

struct Supervoxel {
  int id = 0;
  Vec3 center = Vec3::Zero();  // mean of member positions
  Vec3 normal = Vec3::UnitZ(); // unit, oriented toward the camera
  Vec3 mean_color = Vec3::Zero();
  std::vector<ColoredPoint> members;
};

struct GraphEdge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

struct SupervoxelGraph {
  std::vector<Supervoxel> nodes;
  std::vector<GraphEdge> edges;
  // Scale below which an edge weight is not convexity evidence during
  // clustering; it also bounds how concave the minority side of an edge may
  // read before the edge is discounted entirely. Weights themselves always
  // follow the convexity formula exactly; 0 disables the filter.
  double weight_floor = 0.0;
};

/// One partially observed object: the facets visible from the camera.
struct PartialObject {
  int id = 0;
  int frame_index = 0;
  std::vector<Facet> facets;  // origin Observed, point sets disjoint

  Vec3 centroid() const;
  size_t point_count() const;
};

struct SegmentationParams {
  double spatial_bandwidth = 0.02;        // meters
  double color_bandwidth = 0.1;           // color units in [0,1]
  double normal_bandwidth_deg = 20.0;     // facet decomposition
  double adjacency_factor = 0.6;          // edge if point sets within factor*spatial_bw
  double plane_tolerance = 0.005;         // RANSAC inlier distance
};

/// Sphere swept along a polyline; points inside it are dropped so the pusher
/// never masquerades as object surface.
struct EffectorSweep {
  std::vector<Vec3> path;
  double radius = 0.01;
};

/// Strips up to known_planes RANSAC-fitted planes plus the effector sweep.
/// A fitted plane is only removed when it explains a substantial share of the
/// cloud, so plane-free clouds pass through unchanged.
std::vector<ColoredPoint> remove_known_geometry(const std::vector<ColoredPoint>& cloud,
                                                int known_planes,
                                                const EffectorSweep& effector,
                                                Rng& rng,
                                                double plane_tolerance = 0.005);

/// Mean shift in joint (position/spatial_bw, color/color_bw) space. Every
/// point lands in exactly one supervoxel; normals come from the PCA smallest
/// eigenvector, oriented toward camera_origin.
std::vector<Supervoxel> extract_supervoxels(const std::vector<ColoredPoint>& cloud,
                                            double spatial_bandwidth,
                                            double color_bandwidth,
                                            const Vec3& camera_origin);

/// Edges between supervoxels whose member point sets come within
/// adjacency_factor * spatial_bandwidth. The gate is deliberately tight:
/// surfaces must meet at sampling resolution, or nearby faces of separate
/// objects would pick up spurious convex links. Weight is the convexity measure
/// max{v_i.(c_i - c_j), v_j.(c_j - c_i), 0}: convex transitions keep large
/// weights, concave contacts drop to zero.
SupervoxelGraph build_adjacency(const std::vector<Supervoxel>& svs,
                                double spatial_bandwidth,
                                double adjacency_factor = 0.6);

/// Normalized-Laplacian spectral clustering. Cluster count comes from the
/// largest relative eigengap; k-means runs 20 seeded restarts. Zero-weight
/// components degrade to one cluster per edge-connected component.
std::vector<std::vector<Supervoxel>> spectral_cluster(const SupervoxelGraph& g,
                                                      Rng& rng);

/// Groups a cluster's supervoxels by normal direction (mean shift on the
/// sphere) and emits each group as one observed facet.
PartialObject decompose_facets(const std::vector<Supervoxel>& cluster,
                               int object_id, int frame_index,
                               double normal_bandwidth_deg = 20.0);

/// Greedy nearest-centroid match with a 0.05 m gate. Returns cur-index ->
/// prev object id; unmatched entries map to -1 and should get fresh ids.
std::map<int, int> associate_frames(const std::vector<PartialObject>& prev,
                                    const std::vector<PartialObject>& cur,
                                    double gate = 0.05);

/// Full per-frame pipeline: supervoxels, adjacency, spectral clustering,
/// facet decomposition. Plane removal is the caller's job.
std::vector<PartialObject> segment_frame(const std::vector<ColoredPoint>& cloud,
                                         const Vec3& camera_origin,
                                         const SegmentationParams& params,
                                         int frame_index, Rng& rng);

}  // namespace ipr
