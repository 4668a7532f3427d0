#pragma once

#include <map>
#include <vector>

#include "ipr/sim.hpp"
#include "ipr/types.hpp"

namespace ipr {

struct CameraModel {
  int width = 128;
  int height = 128;
  double fx = 128.0;
  double fy = 128.0;
  double cx = 64.0;
  double cy = 64.0;
  double far_plane = 2.0;
  Pose pose;  // camera frame to world; +z looks into the scene

  Vec3 pixel_dir_world(double u, double v) const {
    Vec3 d((u - cx) / fx, (v - cy) / fy, 1.0);
    return pose.rotation * d;
  }
};

struct PredictedObservation {
  CameraModel camera;
  std::vector<double> depth;  // z-depth, far_plane where unmasked
  std::vector<int> mask;      // body_id, -1 where empty
  // z-depth including static geometry; input for free-space carving and
  // synthetic point clouds, never for the likelihood.
  std::vector<double> scene_depth;

  size_t index(int x, int y) const {
    return size_t(x) + size_t(camera.width) * size_t(y);
  }
};

/// Ray-cast depth of every body hull. Static bodies (and the support plane)
/// occlude and appear in scene_depth but never in depth/mask.
PredictedObservation render_depth(const World& w, const CameraModel& cam);

/// Per-object L2 depth discrepancy over the union mask of the two frames,
/// normalized by sqrt(union pixel count). Pixels covered in only one frame
/// count as far_plane minus the present depth.
std::map<int, double> observation_distance(const PredictedObservation& observed,
                                           const PredictedObservation& predicted);

/// exp(-alpha * sum of all per-object per-frame distances).
double likelihood(const std::vector<std::map<int, double>>& frames, double alpha);

/// Per-object factor exp(-alpha * sum_t d_it); the product over objects is
/// the joint likelihood.
std::map<int, double> object_likelihood_factors(
    const std::vector<std::map<int, double>>& frames, double alpha);

}  // namespace ipr
