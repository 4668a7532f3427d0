#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ipr/constraints.hpp"
#include "ipr/hypothesis.hpp"
#include "ipr/rng.hpp"

using namespace ipr;

namespace {

Facet grid_facet(int id, const Vec3& corner, const Vec3& du, const Vec3& dv,
                 int nu, int nv, const Vec3& normal) {
  Facet f;
  f.id = id;
  f.origin = FacetOrigin::Observed;
  f.normal = normal.normalized();
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i <= nu; ++i)
    for (int j = 0; j <= nv; ++j) {
      Vec3 p = corner + double(i) * du + double(j) * dv;
      f.points.push_back(p);
      sum += p;
    }
  f.centroid = sum / double(f.points.size());
  return f;
}

// Free frame with one axis-aligned unknown box; cells classified by center.
VisibleSpace unknown_box_space(const Vec3& origin, double res,
                               std::array<int, 3> dims, const Vec3& lo,
                               const Vec3& hi) {
  VisibleSpace vs;
  vs.frame_index = 0;
  vs.grid = make_grid(origin, res, dims, kFree);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        Vec3 c = vs.grid.cell_center(x, y, z);
        if (c.x() > lo.x() && c.x() < hi.x() && c.y() > lo.y() &&
            c.y() < hi.y() && c.z() > lo.z() && c.z() < hi.z())
          vs.grid.at(x, y, z) = kUnknown;
      }
  return vs;
}

// Independent reading of the visibility rule: a point violates it only when
// every cell within half a voxel of it in every direction is seen free.
bool deep_in_free(const VisibleSpace& vs, const Vec3& p) {
  const double h = 0.5 * vs.grid.resolution;
  for (int dz : {-1, 0, 1})
    for (int dy : {-1, 0, 1})
      for (int dx : {-1, 0, 1}) {
        Vec3 q = p + Vec3(dx * h, dy * h, dz * h);
        auto c = vs.grid.cell_of(q);
        if (c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] >= vs.grid.dims[0] ||
            c[1] >= vs.grid.dims[1] || c[2] >= vs.grid.dims[2])
          return false;
        if (vs.grid.at(c[0], c[1], c[2]) != kFree) return false;
      }
  return true;
}

void check_sound(const ObjectModel& model, const VisibleSpace& vs) {
  for (const auto& f : model.hypothesized)
    for (const auto& p : f.points) REQUIRE(!deep_in_free(vs, p));
}

bool same_points(const Facet& a, const Facet& b) {
  if (a.points.size() != b.points.size()) return false;
  for (size_t i = 0; i < a.points.size(); ++i)
    if ((a.points[i] - b.points[i]).norm() != 0.0) return false;
  return true;
}

// Cover facet of a book lying at z = 0.1, hidden slab of depth 0.1 below it.
PartialObject book_partial() {
  PartialObject partial;
  partial.id = 3;
  partial.facets.push_back(grid_facet(0, Vec3(0.02, 0.02, 0.1),
                                      Vec3(0.006, 0, 0), Vec3(0, 0.006, 0), 10,
                                      10, Vec3(0, 0, 1)));
  return partial;
}

VisibleSpace book_space() {
  // Hidden region is exactly the cover's footprint, 0.1 m deep, so valid
  // completions vary in thickness but never widen.
  return unknown_box_space(Vec3(0, 0, 0), 0.005, {20, 20, 24},
                           Vec3(0.02, 0.02, 0.0), Vec3(0.08, 0.08, 0.1));
}

// Three faces of the cube [0, 0.1]^3 seen from the (+x, +y, +z) octant; the
// hidden interior is the whole cube.
PartialObject cube_partial() {
  PartialObject partial;
  partial.id = 2;
  partial.facets.push_back(grid_facet(0, Vec3(0.1, 0, 0), Vec3(0, 0.01, 0),
                                      Vec3(0, 0, 0.01), 10, 10,
                                      Vec3(1, 0, 0)));
  partial.facets.push_back(grid_facet(1, Vec3(0, 0.1, 0), Vec3(0.01, 0, 0),
                                      Vec3(0, 0, 0.01), 10, 10,
                                      Vec3(0, 1, 0)));
  partial.facets.push_back(grid_facet(2, Vec3(0, 0, 0.1), Vec3(0.01, 0, 0),
                                      Vec3(0, 0.01, 0), 10, 10,
                                      Vec3(0, 0, 1)));
  return partial;
}

VisibleSpace cube_space() {
  return unknown_box_space(Vec3(-0.02, -0.02, -0.02), 0.005, {28, 28, 28},
                           Vec3(0, 0, 0), Vec3(0.1, 0.1, 0.1));
}

// Slab model built by hand: one horizontal facet plus its mirror d below.
ObjectModel slab_model(int object_id, const Facet& top, double d) {
  ObjectModel m;
  m.object_id = object_id;
  m.observed.push_back(top);
  Facet mirror = mirror_facet(top, d);
  mirror.id = top.id + 1;
  m.hypothesized.push_back(mirror);
  m.hull = convex_hull(m.all_points());
  m.volume = m.hull.volume;
  m.signature = occupancy_signature(voxelize(m.hull, 0.005));
  return m;
}

}  // namespace

TEST_SUITE("hypothesis") {

TEST_CASE("minimum shape of a square plate is a one voxel slab") {
  PartialObject partial;
  partial.id = 4;
  partial.facets.push_back(grid_facet(7, Vec3(0, 0, 0.1), Vec3(0.01, 0, 0),
                                      Vec3(0, 0.01, 0), 10, 10,
                                      Vec3(0, 0, 1)));
  ObjectModel model = minimum_shape(partial);

  CHECK(model.object_id == 4);
  REQUIRE(model.observed.size() == 1);
  CHECK(same_points(model.observed[0], partial.facets[0]));
  REQUIRE(model.hypothesized.size() == 1);
  const Facet& m = model.hypothesized[0];
  CHECK(m.parent == 7);
  CHECK(m.origin == FacetOrigin::Hypothesized);
  CHECK(m.normal.dot(Vec3(0, 0, -1)) == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& p : m.points) CHECK(p.z() == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(model.volume == doctest::Approx(5e-5).epsilon(1e-9));
  for (const auto& p : model.all_points()) CHECK(model.hull.contains(p, 1e-9));
  CHECK(model.signature != 0);
}

TEST_CASE("minimum shape joins perpendicular facets into a wedge") {
  PartialObject partial;
  partial.id = 0;
  partial.facets.push_back(grid_facet(0, Vec3(0, 0, 0.05), Vec3(0.01, 0, 0),
                                      Vec3(0, 0.01, 0), 5, 5, Vec3(0, 0, 1)));
  partial.facets.push_back(grid_facet(1, Vec3(0, 0, 0), Vec3(0.01, 0, 0),
                                      Vec3(0, 0, 0.01), 5, 5, Vec3(0, -1, 0)));
  ObjectModel model = minimum_shape(partial);

  REQUIRE(model.hypothesized.size() == 2);
  CHECK(model.hypothesized[0].parent == 0);
  CHECK(model.hypothesized[1].parent == 1);
  CHECK(model.volume > 1.25e-5 - 1e-12);
  CHECK(model.volume < 1.25e-4 + 1e-12);
  for (const auto& p : model.all_points()) CHECK(model.hull.contains(p, 1e-9));
}

TEST_CASE("objects with no facets are rejected") {
  PartialObject empty;
  CHECK_THROWS_AS(minimum_shape(empty), InvalidPartial);
  VisibleSpace vs;
  vs.grid = make_grid(Vec3::Zero(), 0.005, {4, 4, 4}, kUnknown);
  Rng rng(1);
  CHECK_THROWS_AS(generate_hypothesis(empty, vs, rng), InvalidPartial);
}

TEST_CASE("cover over a deep hidden slab closes into a box") {
  PartialObject partial = book_partial();
  VisibleSpace vs = book_space();
  ObjectModel min_model = minimum_shape(partial);
  const double area = 0.06 * 0.06;

  std::vector<double> thicknesses;
  for (uint64_t seed = 101; seed <= 110; ++seed) {
    Rng rng(seed);
    ObjectModel model = generate_hypothesis(partial, vs, rng);

    REQUIRE(model.observed.size() == 1);
    CHECK(same_points(model.observed[0], partial.facets[0]));
    REQUIRE(model.hypothesized.size() == 1);
    CHECK(model.hypothesized[0].parent == 0);

    CHECK(hull_facets(model.hull).size() == 6);
    double thickness = model.volume / area;
    CHECK(thickness >= 0.005 - 1e-12);
    CHECK(thickness <= 0.1 + 1e-12);
    thicknesses.push_back(thickness);

    check_sound(model, vs);
    CHECK(model.volume >= min_model.volume - 1e-9);
    for (const auto& p : model.all_points()) CHECK(model.hull.contains(p, 1e-9));
  }
  auto [lo, hi] = std::minmax_element(thicknesses.begin(), thicknesses.end());
  CHECK(*hi - *lo > 1e-3);
}

TEST_CASE("no hidden space collapses to the minimum shape") {
  PartialObject partial = book_partial();
  VisibleSpace vs;
  vs.frame_index = 0;
  vs.grid = make_grid(Vec3(0, 0, 0), 0.005, {20, 20, 24}, kFree);
  Rng rng(7);
  ObjectModel model = generate_hypothesis(partial, vs, rng);
  ObjectModel min_model = minimum_shape(partial);

  CHECK(model.signature == min_model.signature);
  CHECK(model.volume == doctest::Approx(min_model.volume).epsilon(1e-12));
  REQUIRE(model.hypothesized.size() == 1);
  CHECK(same_points(model.hypothesized[0], min_model.hypothesized[0]));
}

TEST_CASE("three cube faces complete into shapes between wedge and cube") {
  PartialObject partial = cube_partial();
  VisibleSpace vs = cube_space();
  ObjectModel min_model = minimum_shape(partial);
  const double wedge = 1e-3 - 0.1 * 0.1 * 0.1 / 6.0;

  std::vector<double> volumes;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    ObjectModel model = generate_hypothesis(partial, vs, rng);

    CHECK(model.volume >= wedge * 0.999);
    CHECK(model.volume <= 1e-3 * 1.02);
    CHECK(model.volume >= min_model.volume - 1e-9);
    check_sound(model, vs);
    for (const auto& p : model.all_points()) CHECK(model.hull.contains(p, 1e-7));
    volumes.push_back(model.volume);
  }
  auto [lo, hi] = std::minmax_element(volumes.begin(), volumes.end());
  CHECK(*hi - *lo > 1e-6);

  Rng ra(5), rb(5);
  ObjectModel a = generate_hypothesis(partial, vs, ra);
  ObjectModel b = generate_hypothesis(partial, vs, rb);
  CHECK(a.signature == b.signature);
  CHECK(a.volume == b.volume);
  CHECK(a.hypothesized.size() == b.hypothesized.size());
}

TEST_CASE("model sets deduplicate and always carry the minimum shape") {
  PartialObject partial = book_partial();
  VisibleSpace vs = book_space();
  ObjectModel min_model = minimum_shape(partial);

  Rng r1(9);
  HypothesisSet single = sample_model_set(partial, vs, 1, r1);
  REQUIRE(single.models.size() == 1);
  CHECK(single.models[0].signature == min_model.signature);

  Rng r2(21);
  HypothesisSet set = sample_model_set(partial, vs, 10, r2);
  CHECK(set.object_id == 3);
  CHECK(set.models.size() >= 8);
  CHECK(set.models.size() <= 10);

  std::set<uint64_t> signatures;
  bool has_min = false;
  std::vector<double> volumes;
  for (const auto& m : set.models) {
    signatures.insert(m.signature);
    if (m.signature == min_model.signature) has_min = true;
    volumes.push_back(m.volume);
    CHECK(m.volume <= 0.06 * 0.06 * 0.1 + 1e-9);
  }
  CHECK(signatures.size() == set.models.size());
  CHECK(has_min);
  std::sort(volumes.begin(), volumes.end());
  for (size_t i = 1; i < volumes.size(); ++i) CHECK(volumes[i] > volumes[i - 1]);
}

TEST_CASE("model set draws are deterministic under a fixed seed") {
  PartialObject partial = book_partial();
  VisibleSpace vs = book_space();
  Rng ra(55), rb(55);
  HypothesisSet a = sample_model_set(partial, vs, 6, ra);
  HypothesisSet b = sample_model_set(partial, vs, 6, rb);
  REQUIRE(a.models.size() == b.models.size());
  for (size_t i = 0; i < a.models.size(); ++i) {
    CHECK(a.models[i].signature == b.models[i].signature);
    CHECK(a.models[i].volume == b.models[i].volume);
  }
}

}  // TEST_SUITE hypothesis

namespace {

// Two slab objects on thin hidden pockets, 5 cm of seen free space between.
struct PairScene {
  VisibleSpace vs;
  PartialObject pa, pb;
  ObjectModel ma, mb;
};

PairScene make_pair_scene() {
  PairScene s;
  s.vs.frame_index = 0;
  s.vs.grid = make_grid(Vec3(-0.02, -0.02, -0.02), 0.005, {44, 16, 16}, kFree);
  auto mark = [&](const Vec3& lo, const Vec3& hi) {
    for (int z = 0; z < 16; ++z)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 44; ++x) {
          Vec3 c = s.vs.grid.cell_center(x, y, z);
          if (c.x() > lo.x() && c.x() < hi.x() && c.y() > lo.y() &&
              c.y() < hi.y() && c.z() > lo.z() && c.z() < hi.z())
            s.vs.grid.at(x, y, z) = kUnknown;
        }
  };
  mark(Vec3(0, 0, 0.04), Vec3(0.05, 0.05, 0.05));
  mark(Vec3(0.1, 0, 0.04), Vec3(0.15, 0.05, 0.05));

  s.pa.id = 0;
  s.pa.facets.push_back(grid_facet(0, Vec3(0, 0, 0.05), Vec3(0.01, 0, 0),
                                   Vec3(0, 0.01, 0), 5, 5, Vec3(0, 0, 1)));
  s.pb.id = 1;
  s.pb.facets.push_back(grid_facet(0, Vec3(0.1, 0, 0.05), Vec3(0.01, 0, 0),
                                   Vec3(0, 0.01, 0), 5, 5, Vec3(0, 0, 1)));
  s.ma = minimum_shape(s.pa);
  s.mb = minimum_shape(s.pb);
  return s;
}

JointSceneModel joint_of(const ObjectModel& a, const ObjectModel& b) {
  JointSceneModel x;
  x.models = {a, b};
  x.chosen[a.object_id] = 0;
  x.chosen[b.object_id] = 0;
  return x;
}

VisibleSpace all_unknown_like(const VisibleSpace& vs) {
  VisibleSpace out = vs;
  std::fill(out.grid.cells.begin(), out.grid.cells.end(), kUnknown);
  return out;
}

}  // namespace

TEST_SUITE("constraints") {

TEST_CASE("separated models pass the joint constraints") {
  PairScene s = make_pair_scene();
  JointSceneModel x = joint_of(s.ma, s.mb);
  CHECK(check_constraints(x, {s.vs}));
  CHECK(!models_intersect(s.ma, s.mb));

  // Enlarging unknown space never turns a passing scene into a failing one.
  CHECK(check_constraints(x, {all_unknown_like(s.vs)}));
}

TEST_CASE("overlapping models fail the pairwise test") {
  PairScene s = make_pair_scene();
  PartialObject pc;
  pc.id = 1;
  pc.facets.push_back(grid_facet(0, Vec3(0.03, 0, 0.05), Vec3(0.01, 0, 0),
                                 Vec3(0, 0.01, 0), 5, 5, Vec3(0, 0, 1)));
  ObjectModel mc = minimum_shape(pc);

  CHECK(models_intersect(s.ma, mc));
  JointSceneModel x = joint_of(s.ma, mc);
  // All-unknown frame isolates the pairwise check from per-model validity.
  CHECK(!check_constraints(x, {all_unknown_like(s.vs)}));
}

TEST_CASE("a facet pushed into seen free space invalidates its model") {
  PairScene s = make_pair_scene();
  ObjectModel pushed = s.ma;
  for (auto& p : pushed.hypothesized[0].points) p.z() -= 0.02;
  pushed.hypothesized[0].centroid.z() -= 0.02;

  CHECK(model_valid(s.ma, s.vs, 0.0));
  CHECK(!model_valid(pushed, s.vs, 0.0));
  CHECK(!facet_outside_free_space(pushed.hypothesized[0], s.vs));

  JointSceneModel x = joint_of(pushed, s.mb);
  CHECK(!check_constraints(x, {s.vs}));
  // The same scene passes once the space the facet sits in becomes unknown.
  CHECK(check_constraints(x, {all_unknown_like(s.vs)}));
}

TEST_CASE("support penetration beyond half a voxel is rejected") {
  VisibleSpace vs;
  vs.grid = make_grid(Vec3(-0.05, -0.05, -0.05), 0.005, {40, 40, 40}, kUnknown);

  ObjectModel grazing;
  grazing.observed.push_back(grid_facet(0, Vec3(0, 0, -0.001), Vec3(0.01, 0, 0),
                                        Vec3(0, 0.01, 0), 4, 4, Vec3(0, 0, 1)));
  ObjectModel sunk;
  sunk.observed.push_back(grid_facet(0, Vec3(0, 0, -0.01), Vec3(0.01, 0, 0),
                                     Vec3(0, 0.01, 0), 4, 4, Vec3(0, 0, 1)));

  CHECK(model_valid(grazing, vs, 0.0));
  CHECK(!model_valid(sunk, vs, 0.0));
}

TEST_CASE("pruning keeps valid models and reinstates the smallest when all fail") {
  PairScene s = make_pair_scene();
  const Facet& top = s.pa.facets[0];

  ObjectModel thick_valid = slab_model(0, top, 0.0075);
  ObjectModel deep_a = slab_model(0, top, 0.03);
  ObjectModel deep_b = slab_model(0, top, 0.02);
  REQUIRE(model_valid(thick_valid, s.vs, 0.0));
  REQUIRE(!model_valid(deep_a, s.vs, 0.0));
  REQUIRE(!model_valid(deep_b, s.vs, 0.0));

  HypothesisSet mixed;
  mixed.object_id = 0;
  mixed.models = {s.ma, deep_a, thick_valid};
  HypothesisSet all_valid;
  all_valid.object_id = 0;
  all_valid.models = {s.ma, thick_valid};
  HypothesisSet all_bad;
  all_bad.object_id = 0;
  all_bad.models = {deep_a, deep_b};

  auto pruned = prune_hypotheses({mixed, all_valid, all_bad}, s.vs);
  REQUIRE(pruned.size() == 3);

  REQUIRE(pruned[0].models.size() == 2);
  CHECK(pruned[0].models[0].signature == s.ma.signature);
  CHECK(pruned[0].models[1].signature == thick_valid.signature);

  REQUIRE(pruned[1].models.size() == 2);

  // Both models of the last set fail, so the smaller one comes back.
  REQUIRE(pruned[2].models.size() == 1);
  CHECK(pruned[2].models[0].volume == doctest::Approx(deep_b.volume));
}

}  // TEST_SUITE constraints
