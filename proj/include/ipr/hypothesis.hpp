#pragma once

#include <cstdint>
#include <vector>

#include "ipr/convex_hull.hpp"
#include "ipr/rng.hpp"
#include "ipr/segmentation.hpp"
#include "ipr/voxel.hpp"

namespace ipr {

/// Distance interval for placing a mirrored facet behind its source.
struct MirrorSampleRange {
  double d_min = 0.005;
  double d_max = 0.005;

  bool valid() const { return d_min > 0 && d_min <= d_max; }
};

/// One candidate full shape: the observed facets plus sampled hidden facets,
/// closed into a convex hull.
struct ObjectModel {
  int object_id = 0;
  std::vector<Facet> observed;      // bit-identical copies of the input facets
  std::vector<Facet> hypothesized;  // mirrors placed in unobserved space
  ConvexMesh hull;                  // contains every facet point
  double volume = 0.0;              // hull volume
  uint64_t signature = 0;           // occupancy hash at voxel resolution

  std::vector<Vec3> all_points() const;
};

struct HypothesisSet {
  int object_id = 0;
  std::vector<ObjectModel> models;  // signatures pairwise distinct
};

struct HypothesisParams {
  // One voxel: the smallest thickness at which a shape still has volume.
  double d_min = 0.005;
  // A hull facet joins the mirror frontier only when its normal differs from
  // every existing facet normal by more than this.
  double novel_normal_deg = 5.0;
  // Re-draws of the sampled distance before a facet whose mirror keeps
  // leaving unobserved space is skipped.
  int redraw_attempts = 10;
  double timeout_s = 1.0;             // per generated model
  double voxel_resolution = 0.005;    // signature granularity
};

/// Thinnest valid completion: every observed facet paired with its mirror one
/// d_min behind it, hulled. Throws InvalidPartial when there are no facets.
ObjectModel minimum_shape(const PartialObject& partial,
                          const HypothesisParams& params = {});

/// Samples one completion by iterated mirroring. Each frontier facet is
/// mirrored across its own tangent plane and pushed a uniformly sampled
/// distance into unobserved space; the convex hull of everything then yields
/// new frontier facets (novel normals only) until none appear or the timeout
/// hits. An observed facet with no room keeps its one-voxel mirror, so the
/// result never falls below the minimum shape; with no hidden space at all
/// the result is exactly the minimum shape.
ObjectModel generate_hypothesis(const PartialObject& partial,
                                const VisibleSpace& vs, Rng& rng,
                                const HypothesisParams& params = {});

/// Up to m models with pairwise distinct signatures; the minimum shape is
/// always one of them. Stops early when repeated draws stop producing new
/// shapes (8*m duplicate draws) or when total_timeout_s runs out.
HypothesisSet sample_model_set(const PartialObject& partial,
                               const VisibleSpace& vs, int m, Rng& rng,
                               const HypothesisParams& params = {},
                               double total_timeout_s = 10.0);

}  // namespace ipr
