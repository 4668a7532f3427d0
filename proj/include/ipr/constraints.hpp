#pragma once

#include <map>
#include <vector>

#include "ipr/hypothesis.hpp"
#include "ipr/types.hpp"
#include "ipr/voxel.hpp"

namespace ipr {

/// One resolved combination: a chosen model per detected object. Models are
/// built in world coordinates from frame-0 observations, so initial poses
/// default to identity and observed facets already sit where the camera saw
/// them.
struct JointSceneModel {
  std::map<int, int> chosen;        // object_id -> model index j
  std::vector<ObjectModel> models;  // one per object, same order as objects
  std::map<int, Pose> initial_poses;
  double support_z = 0.0;  // top of the support surface
};

struct ConstraintParams {
  // Facets may sink at most half a voxel into the support surface.
  double support_tolerance = 0.0025;
  double facet_tolerance = 0.0025;  // adjacency distance for intersection
};

/// True when no point of the facet sits strictly inside space the camera saw
/// empty. Touching surface cells or leaving the grid is allowed: hidden
/// facets meet the observed surface at their rims, and cells beyond the grid
/// were never seen.
bool facet_outside_free_space(const Facet& f, const VisibleSpace& vs);

/// Facet-level crossing test between two models, all pairs.
bool models_intersect(const ObjectModel& a, const ObjectModel& b,
                      const ConstraintParams& params = {});

/// Per-model validity: hypothesized facets confined to unobserved space and
/// nothing sunk into the support. Pairwise separation is a joint property
/// and is not checked here.
bool model_valid(const ObjectModel& model, const VisibleSpace& vs,
                 double support_z, const ConstraintParams& params = {});

/// Joint validity: every model individually valid and no facet of one object
/// crosses a facet of another. Frame 0 carries the static picture; later
/// frames involve motion and are judged by simulation instead.
bool check_constraints(const JointSceneModel& x,
                       const std::vector<VisibleSpace>& vs,
                       const ConstraintParams& params = {});

/// Drops models that fail on their own. A set losing every model gets its
/// smallest-volume member back, so each object always keeps at least one
/// candidate.
std::vector<HypothesisSet> prune_hypotheses(const std::vector<HypothesisSet>& sets,
                                            const VisibleSpace& vs,
                                            double support_z = 0.0,
                                            const ConstraintParams& params = {});

}  // namespace ipr
