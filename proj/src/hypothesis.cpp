#include "ipr/hypothesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>

namespace ipr {

namespace {

// A hidden facet may touch surface cells (it meets the observed surface at
// its rim) and may leave the grid (never seen), but no point of it may sit
// strictly inside space the camera saw empty.
bool facet_in_seen_free(const Facet& f, const VisibleSpace& vs) {
  for (const auto& p : f.points)
    if (point_in_free_space(vs, p)) return true;
  return false;
}

void finalize(ObjectModel& model, double voxel_resolution) {
  std::vector<Vec3> pts = model.all_points();
  model.hull = convex_hull(pts);
  model.volume = model.hull.volume;
  model.signature = occupancy_signature(voxelize(model.hull, voxel_resolution));
}

}  // namespace

std::vector<Vec3> ObjectModel::all_points() const {
  std::vector<Vec3> pts;
  size_t total = 0;
  for (const auto& f : observed) total += f.points.size();
  for (const auto& f : hypothesized) total += f.points.size();
  pts.reserve(total);
  for (const auto& f : observed) pts.insert(pts.end(), f.points.begin(), f.points.end());
  for (const auto& f : hypothesized)
    pts.insert(pts.end(), f.points.begin(), f.points.end());
  return pts;
}

ObjectModel minimum_shape(const PartialObject& partial,
                          const HypothesisParams& params) {
  if (partial.facets.empty())
    throw InvalidPartial("minimum_shape: object has no facets");

  ObjectModel model;
  model.object_id = partial.id;
  model.observed = partial.facets;

  int next_id = 0;
  for (const auto& f : model.observed) next_id = std::max(next_id, f.id + 1);
  for (const auto& f : model.observed) {
    Facet m = mirror_facet(f, params.d_min);
    m.id = next_id++;
    m.origin = FacetOrigin::Hypothesized;
    m.parent = f.id;
    model.hypothesized.push_back(std::move(m));
  }
  finalize(model, params.voxel_resolution);
  return model;
}

ObjectModel generate_hypothesis(const PartialObject& partial,
                                const VisibleSpace& vs, Rng& rng,
                                const HypothesisParams& params) {
  if (partial.facets.empty())
    throw InvalidPartial("generate_hypothesis: object has no facets");

  const auto start = std::chrono::steady_clock::now();
  auto timed_out = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
               .count() > params.timeout_s;
  };
  const double same_normal_cos =
      std::cos(params.novel_normal_deg * std::numbers::pi / 180.0);

  ObjectModel model;
  model.object_id = partial.id;
  model.observed = partial.facets;

  int next_id = 0;
  for (const auto& f : model.observed) next_id = std::max(next_id, f.id + 1);

  std::vector<Vec3> normals;  // of everything in observed + hypothesized
  for (const auto& f : model.observed) normals.push_back(f.normal);

  std::vector<Facet> frontier = model.observed;
  while (!frontier.empty() && !timed_out()) {
    for (const auto& f : frontier) {
      // An observed facet hides the object's far side: its mirror goes
      // behind it, facing away. A hull-discovered facet bounds the shape
      // where nothing was observed at all: the object may extend farther
      // out, so its copy moves outward and keeps facing out. Both moves are
      // capped by how deep the unobserved region runs in that direction.
      const bool behind = f.origin == FacetOrigin::Observed;
      // The direction is recorded whether or not a mirror lands, so a facet
      // whose direction has no room is not re-proposed by the next hull pass.
      normals.push_back(behind ? Vec3(-f.normal) : f.normal);
      Facet probe = f;
      if (!behind) probe.normal = -probe.normal;
      double d_max = ray_trace_free_distance(probe, vs);
      MirrorSampleRange range{params.d_min, d_max};
      bool placed = false;
      if (range.valid()) {
        for (int attempt = 0; attempt < params.redraw_attempts && !placed;
             ++attempt) {
          double x = rng.uniform(range.d_min, range.d_max);
          Facet m = mirror_facet(f, behind ? x : -x);
          if (!behind) m.normal = f.normal;
          if (facet_in_seen_free(m, vs)) continue;
          m.id = next_id++;
          m.origin = FacetOrigin::Hypothesized;
          m.parent = behind ? f.id : -1;
          model.hypothesized.push_back(std::move(m));
          placed = true;
        }
      }
      if (!placed && behind) {
        // An observed facet with no room still gets its one-voxel mirror,
        // the same one the minimum shape uses. Every sampled model then
        // contains the minimum shape, keeping the volume floor, and a scene
        // with no hidden space at all comes out as exactly that shape.
        Facet m = mirror_facet(f, params.d_min);
        m.id = next_id++;
        m.origin = FacetOrigin::Hypothesized;
        m.parent = f.id;
        model.hypothesized.push_back(std::move(m));
      }
    }

    ConvexMesh hull = convex_hull(model.all_points());
    frontier.clear();
    for (Facet& cand : hull_facets(hull)) {
      bool novel = true;
      for (const auto& n : normals)
        if (cand.normal.dot(n) >= same_normal_cos) {
          novel = false;
          break;
        }
      if (novel) {
        cand.id = next_id++;
        cand.origin = FacetOrigin::Hypothesized;
        frontier.push_back(std::move(cand));
      }
    }
  }

  finalize(model, params.voxel_resolution);
  return model;
}

HypothesisSet sample_model_set(const PartialObject& partial,
                               const VisibleSpace& vs, int m, Rng& rng,
                               const HypothesisParams& params,
                               double total_timeout_s) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  HypothesisSet set;
  set.object_id = partial.id;
  set.models.push_back(minimum_shape(partial, params));
  std::set<uint64_t> seen{set.models.front().signature};

  const int duplicate_budget = 8 * std::max(m, 1);
  int duplicates = 0;
  while (int(set.models.size()) < m && duplicates < duplicate_budget &&
         elapsed() < total_timeout_s) {
    ObjectModel model = generate_hypothesis(partial, vs, rng, params);
    if (seen.insert(model.signature).second)
      set.models.push_back(std::move(model));
    else
      ++duplicates;
  }
  return set;
}

}  // namespace ipr
