#include "ipr/constraints.hpp"

#include <algorithm>

namespace ipr {

bool facet_outside_free_space(const Facet& f, const VisibleSpace& vs) {
  for (const auto& p : f.points)
    if (point_in_free_space(vs, p)) return false;
  return true;
}

bool models_intersect(const ObjectModel& a, const ObjectModel& b,
                      const ConstraintParams& params) {
  auto each = [](const ObjectModel& m, auto&& fn) {
    for (const auto& f : m.observed) fn(f);
    for (const auto& f : m.hypothesized) fn(f);
  };
  bool hit = false;
  each(a, [&](const Facet& fa) {
    if (hit) return;
    each(b, [&](const Facet& fb) {
      if (hit) return;
      if (facets_intersect(fa, fb, params.facet_tolerance)) hit = true;
    });
  });
  return hit;
}

bool model_valid(const ObjectModel& model, const VisibleSpace& vs,
                 double support_z, const ConstraintParams& params) {
  for (const auto& f : model.hypothesized)
    if (!facet_outside_free_space(f, vs)) return false;
  const double floor_z = support_z - params.support_tolerance;
  for (const auto* facets : {&model.observed, &model.hypothesized})
    for (const auto& f : *facets)
      for (const auto& p : f.points)
        if (p.z() < floor_z) return false;
  return true;
}

bool check_constraints(const JointSceneModel& x,
                       const std::vector<VisibleSpace>& vs,
                       const ConstraintParams& params) {
  const VisibleSpace& frame0 = vs.front();
  for (const auto& m : x.models)
    if (!model_valid(m, frame0, x.support_z, params)) return false;
  for (size_t i = 0; i < x.models.size(); ++i)
    for (size_t j = i + 1; j < x.models.size(); ++j)
      if (models_intersect(x.models[i], x.models[j], params)) return false;
  return true;
}

std::vector<HypothesisSet> prune_hypotheses(const std::vector<HypothesisSet>& sets,
                                            const VisibleSpace& vs,
                                            double support_z,
                                            const ConstraintParams& params) {
  std::vector<HypothesisSet> out;
  out.reserve(sets.size());
  for (const auto& set : sets) {
    HypothesisSet kept;
    kept.object_id = set.object_id;
    for (const auto& m : set.models)
      if (model_valid(m, vs, support_z, params)) kept.models.push_back(m);
    if (kept.models.empty() && !set.models.empty()) {
      auto smallest = std::min_element(
          set.models.begin(), set.models.end(),
          [](const ObjectModel& a, const ObjectModel& b) { return a.volume < b.volume; });
      kept.models.push_back(*smallest);
    }
    out.push_back(std::move(kept));
  }
  return out;
}

}  // namespace ipr
