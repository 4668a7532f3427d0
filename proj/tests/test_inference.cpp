#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ipr/inference.hpp"

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

void mark_unknown_box(VisibleSpace& vs, const Vec3& lo, const Vec3& hi) {
  for (int z = 0; z < vs.grid.dims[2]; ++z)
    for (int y = 0; y < vs.grid.dims[1]; ++y)
      for (int x = 0; x < vs.grid.dims[0]; ++x) {
        Vec3 c = vs.grid.cell_center(x, y, z);
        if (c.x() > lo.x() && c.x() < hi.x() && c.y() > lo.y() &&
            c.y() < hi.y() && c.z() > lo.z() && c.z() < hi.z())
          vs.grid.at(x, y, z) = kUnknown;
      }
}

VisibleSpace free_space_with_unknown_box(const Vec3& origin, double res,
                                         std::array<int, 3> dims,
                                         const Vec3& lo, const Vec3& hi) {
  VisibleSpace vs;
  vs.frame_index = 0;
  vs.grid = make_grid(origin, res, dims, kFree);
  mark_unknown_box(vs, lo, hi);
  return vs;
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

// Box whose top is only partially observed: the hidden facet carries the far
// corners, so candidates share the seen patch and differ in extent.
ObjectModel box_model(int object_id, const Facet& top, double x_far,
                      double y_far, double z_top) {
  ObjectModel m;
  m.object_id = object_id;
  m.observed.push_back(top);
  Facet hid;
  hid.id = top.id + 1;
  hid.origin = FacetOrigin::Hypothesized;
  hid.normal = Vec3::UnitX();
  hid.points = {Vec3(0, 0, 0),         Vec3(x_far, 0, 0),
                Vec3(0, y_far, 0),     Vec3(x_far, y_far, 0),
                Vec3(x_far, 0, z_top), Vec3(x_far, y_far, z_top)};
  hid.centroid = component_mean(hid.points);
  m.hypothesized.push_back(hid);
  m.hull = convex_hull(m.all_points());
  m.volume = m.hull.volume;
  m.signature = occupancy_signature(voxelize(m.hull, 0.005));
  return m;
}

CameraModel camera_at(const Vec3& eye, const Vec3& target) {
  CameraModel cam;
  Vec3 z = (target - eye).normalized();
  Vec3 ref = std::abs(z.z()) > 0.9 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  Vec3 x = z.cross(ref).normalized();
  Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  cam.pose.rotation = Quat(r);
  cam.pose.translation = eye;
  return cam;
}

// Ground-truth capture: settle the true bodies, take a frame, then one more
// frame after each push. Deliberately the same pipeline the scorer runs, so
// the true model reproduces its own observations exactly.
std::vector<PredictedObservation> observe_scene(
    const std::vector<const ObjectModel*>& truth,
    const std::vector<PushAction>& actions, const CameraModel& cam,
    const InferenceConfig& cfg) {
  World w;
  w.support_z = cfg.support_z;
  for (const ObjectModel* m : truth)
    w.bodies.push_back(
        make_dynamic_body(m->object_id, m->hull, cfg.density, cfg.friction));
  SettleOptions opt;
  opt.record_trace = false;
  settle(w, opt);
  std::vector<PredictedObservation> frames{render_depth(w, cam)};
  if (!actions.empty()) {
    ReplayResult rr = replay_actions(w, actions, opt);
    for (size_t t = 0; t < actions.size(); ++t) {
      for (size_t b = 0; b < w.bodies.size(); ++b)
        w.bodies[b].pose = rr.after_action[t][b];
      frames.push_back(render_depth(w, cam));
    }
  }
  return frames;
}

// One box on the support, only its top face seen. Candidate thicknesses
// 0.005..0.05; the 0.05 model is the true shape and the only one that rests
// where it was observed. The optional extra model pokes below the support
// and into seen-free space, so constraints reject it.
struct OneBoxScene {
  std::vector<HypothesisSet> sets;
  SceneObservations obs;
  InferenceConfig cfg;
  int true_index = 3;
};

OneBoxScene one_box_scene(bool include_invalid) {
  OneBoxScene s;
  s.cfg.seed = 17;
  Facet top = grid_facet(0, Vec3(0, 0, 0.05), Vec3(0.01, 0, 0),
                         Vec3(0, 0.01, 0), 6, 6, Vec3::UnitZ());
  HypothesisSet set;
  set.object_id = 0;
  std::vector<double> depths{0.005, 0.02, 0.035, 0.05};
  if (include_invalid) depths.push_back(0.065);
  for (double d : depths) set.models.push_back(slab_model(0, top, d));
  s.sets.push_back(std::move(set));
  s.obs.visible.push_back(free_space_with_unknown_box(
      Vec3(-0.02, -0.02, -0.02), 0.005, {20, 20, 20}, Vec3(0, 0, 0),
      Vec3(0.06, 0.06, 0.05)));
  CameraModel cam = camera_at(Vec3(0.03, -0.4, 0.025), Vec3(0.03, 0.03, 0.025));
  s.obs.frames =
      observe_scene({&s.sets[0].models[s.true_index]}, {}, cam, s.cfg);
  return s;
}

// Two separated boxes, true thicknesses 0.04 and 0.03. Object 1 keeps three
// close candidates so the posterior has real spread to estimate.
struct TwoBoxScene {
  std::vector<HypothesisSet> sets;
  SceneObservations obs;
  InferenceConfig cfg;
};

TwoBoxScene two_box_scene() {
  TwoBoxScene s;
  s.cfg.seed = 29;
  Facet ta = grid_facet(0, Vec3(0, 0, 0.04), Vec3(0.01, 0, 0),
                        Vec3(0, 0.01, 0), 5, 5, Vec3::UnitZ());
  Facet tb = grid_facet(10, Vec3(0.1, 0, 0.03), Vec3(0.01, 0, 0),
                        Vec3(0, 0.01, 0), 5, 5, Vec3::UnitZ());
  HypothesisSet a;
  a.object_id = 0;
  for (double d : {0.005, 0.04}) a.models.push_back(slab_model(0, ta, d));
  HypothesisSet b;
  b.object_id = 1;
  for (double d : {0.02, 0.025, 0.03}) b.models.push_back(slab_model(1, tb, d));
  s.sets = {std::move(a), std::move(b)};
  VisibleSpace vs = free_space_with_unknown_box(
      Vec3(-0.02, -0.02, -0.02), 0.005, {44, 16, 16}, Vec3(0, 0, 0),
      Vec3(0.05, 0.05, 0.04));
  mark_unknown_box(vs, Vec3(0.1, 0, 0), Vec3(0.15, 0.05, 0.03));
  s.obs.visible.push_back(std::move(vs));
  CameraModel cam = camera_at(Vec3(0.075, -0.4, 0.02), Vec3(0.075, 0.03, 0.02));
  s.obs.frames = observe_scene({&s.sets[0].models[1], &s.sets[1].models[2]},
                               {}, cam, s.cfg);
  return s;
}

// Two candidates that render identically at rest: a short box and a long one
// whose extra extent hides behind the visible face. Only pushing from the
// hidden side tells them apart. The true shape is the long one.
struct PushScene {
  std::vector<HypothesisSet> sets;
  SceneObservations obs;
  InferenceConfig cfg;
  PushAction push;
};

PushScene push_scene() {
  PushScene s;
  s.cfg.seed = 43;
  Facet top = grid_facet(0, Vec3(0, 0, 0.04), Vec3(0.008, 0, 0),
                         Vec3(0, 0.01, 0), 5, 5, Vec3::UnitZ());
  HypothesisSet set;
  set.object_id = 0;
  set.models.push_back(box_model(0, top, 0.04, 0.05, 0.04));
  set.models.push_back(box_model(0, top, 0.16, 0.05, 0.04));
  s.sets.push_back(std::move(set));
  VisibleSpace vs;
  vs.frame_index = 0;
  vs.grid = make_grid(Vec3(-0.01, -0.01, -0.01), 0.005, {4, 4, 4}, kUnknown);
  s.obs.visible.push_back(std::move(vs));
  s.push.start_point = Vec3(0.3, 0.025, 0.02);
  s.push.direction = Vec3(-1, 0, 0);
  s.push.speed = 0.05;
  s.push.duration = 6.0;
  CameraModel cam = camera_at(Vec3(-0.4, 0.025, 0.02), Vec3(0.1, 0.025, 0.02));
  s.obs.frames =
      observe_scene({&s.sets[0].models[1]}, {s.push}, cam, s.cfg);
  return s;
}

double total_variation(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double tv = 0.0;
  for (size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double row_sum(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("priors normalize and favor smaller volumes under the size rule") {
  OneBoxScene s = one_box_scene(false);
  const auto& set = s.sets[0];

  std::vector<double> uniform = model_priors(set, {PriorKind::Uniform, 1.0});
  for (double v : uniform) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  PriorSpec size{PriorKind::Size, 1.0};
  std::vector<double> sized = model_priors(set, size);
  CHECK(row_sum(sized) == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t j = 0; j + 1 < sized.size(); ++j) {
    CHECK(set.models[j].volume < set.models[j + 1].volume);
    CHECK(sized[j] > sized[j + 1]);
  }

  // The volume law, recomputed from scratch against the returned row.
  double vol_min = set.models.front().volume;
  double vol_max = set.models.back().volume;
  double total = 0.0;
  std::vector<double> expect;
  for (const auto& m : set.models) {
    expect.push_back(std::exp(-(m.volume - vol_min) /
                              (vol_max - vol_min + 1e-9)));
    total += expect.back();
  }
  for (size_t j = 0; j < expect.size(); ++j)
    CHECK(sized[j] == doctest::Approx(expect[j] / total).epsilon(1e-9));

  std::vector<double> flat = model_priors(set, {PriorKind::Size, 0.0});
  for (double v : flat) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("exploration rows normalize and zero out impossible placements") {
  OneBoxScene s = one_box_scene(true);
  RolloutState st;
  st.placed = {false};
  st.model = {-1};

  ExplorationTable t =
      compute_exploration_probs(s.sets, st, s.obs.visible, s.cfg);
  REQUIRE(t.prob.count(0) == 1);
  const auto& row = t.prob.at(0);
  REQUIRE(row.size() == 5);
  CHECK(row_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.selected_object == 0);
  CHECK(t.mass.at(0) > 0.0);

  // The over-deep model pokes below the support and into seen-free space.
  CHECK(row[4] == 0.0);
  // Resting beats falling: probability grows with thickness up to the truth.
  CHECK(row[3] > row[2]);
  CHECK(row[2] > row[1]);
  CHECK(row[1] > row[0]);
  CHECK(row[0] > 0.0);
}

TEST_CASE("the steadier object is placed first in a stacked scene") {
  InferenceConfig cfg;
  Facet base_top = grid_facet(0, Vec3(0, 0, 0.03), Vec3(0.01, 0, 0),
                              Vec3(0, 0.01, 0), 6, 6, Vec3::UnitZ());
  Facet top_top = grid_facet(10, Vec3(0, 0, 0.055), Vec3(0.01, 0, 0),
                             Vec3(0, 0.01, 0), 6, 6, Vec3::UnitZ());
  HypothesisSet base;
  base.object_id = 0;
  for (double d : {0.02, 0.03}) base.models.push_back(slab_model(0, base_top, d));
  HypothesisSet top;
  top.object_id = 1;
  for (double d : {0.005, 0.0215})
    top.models.push_back(slab_model(1, top_top, d));
  std::vector<HypothesisSet> sets{std::move(base), std::move(top)};
  std::vector<VisibleSpace> visible{free_space_with_unknown_box(
      Vec3(-0.02, -0.02, -0.02), 0.005, {20, 20, 20}, Vec3(0, 0, 0),
      Vec3(0.06, 0.06, 0.055))};

  // Stage 1: every placement of the top object rides on the base's thin
  // stand-in and sinks with it, so the base carries more stable mass.
  RolloutState st;
  st.placed = {false, false};
  st.model = {-1, -1};
  ExplorationTable t1 = compute_exploration_probs(sets, st, visible, cfg);
  CHECK(t1.selected_object == 0);
  CHECK(t1.mass.at(0) > t1.mass.at(1));
  CHECK(row_sum(t1.prob.at(0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(row_sum(t1.prob.at(1)) == doctest::Approx(1.0).epsilon(1e-9));

  // Stage 2 with the true base placed: only the top remains, and its nearly
  // resting model outranks the thin floating one.
  st.placed = {true, false};
  st.model = {1, -1};
  st.stage = 2;
  ExplorationTable t2 = compute_exploration_probs(sets, st, visible, cfg);
  CHECK(t2.selected_object == 1);
  CHECK(t2.prob.count(0) == 0);
  const auto& row = t2.prob.at(1);
  CHECK(row_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(row[1] > row[0]);
}

TEST_CASE("rollout draws follow the exploration distribution") {
  OneBoxScene s = one_box_scene(false);
  RolloutState st;
  st.placed = {false};
  st.model = {-1};
  StagedSceneMemo memo;
  ExplorationTable t =
      compute_exploration_probs(s.sets, st, s.obs.visible, s.cfg, &memo);
  const auto& row = t.prob.at(0);

  const int draws = 10000;
  std::vector<int> counts(row.size(), 0);
  for (int r = 0; r < draws; ++r) {
    Rng rng = Rng::stream(7, {uint64_t(r)});
    RolloutResult ro = rollout(s.sets, s.obs.visible, s.cfg, rng, &memo);
    const int j = ro.joint.chosen.at(0);
    ++counts[j];
    CHECK(ro.q.at(0) == row[j]);
  }
  for (size_t j = 0; j < row.size(); ++j)
    CHECK(std::abs(double(counts[j]) / draws - row[j]) <= 0.02);
}

TEST_CASE("importance weights divide the prior by the draw probability") {
  OneBoxScene s = one_box_scene(true);

  JointSceneModel x;
  x.chosen[0] = s.true_index;
  x.models.push_back(s.sets[0].models[s.true_index]);
  x.initial_poses[0] = Pose{};
  std::map<int, double> q{{0, 0.4}};

  PosteriorAccumulator acc(s.sets);
  score_and_update(s.sets, x, q, s.obs, {}, s.cfg, acc);
  CHECK(acc.rollouts() == 1);
  // The true model reproduces its own observation, so the likelihood factor
  // is 1 and the weight is exactly prior / q = 0.2 / 0.4.
  CHECK(acc.weight(0, s.true_index) == doctest::Approx(0.5).epsilon(1e-9));

  JointSceneModel bad;
  bad.chosen[0] = 4;
  bad.models.push_back(s.sets[0].models[4]);
  bad.initial_poses[0] = Pose{};
  PosteriorAccumulator acc2(s.sets);
  score_and_update(s.sets, bad, {{0, 1.0}}, s.obs, {}, s.cfg, acc2);
  for (size_t j = 0; j < s.sets[0].models.size(); ++j)
    CHECK(acc2.weight(0, int(j)) == 0.0);
}

TEST_CASE("posterior concentrates on the shape that rests as observed") {
  OneBoxScene s = one_box_scene(false);
  s.cfg.rollouts = 300;
  PosteriorTable p = infer(s.sets, s.obs, {}, s.cfg);
  const auto& row = p.prob.at(0);
  CHECK(row_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.rollout_count == 300);
  CHECK(row[s.true_index] > 0.5);
  // A thin floating slab falls far from where the surface was seen; resting
  // in place must win by an order of magnitude.
  CHECK(row[s.true_index] >= 10.0 * row[0]);
  CHECK(p.ess.at(0) > 0.0);
  CHECK(p.ess.at(0) <= double(p.rollout_count));
}

TEST_CASE("sampled posterior matches the exhaustive reference") {
  TwoBoxScene s = two_box_scene();
  s.cfg.rollouts = 2000;
  PosteriorTable approx = infer(s.sets, s.obs, {}, s.cfg);
  PosteriorTable exact = exhaustive_posterior(s.sets, s.obs, {}, s.cfg);

  CHECK(exact.rollout_count == 6);  // every combination is feasible here
  for (const auto& set : s.sets) {
    const auto& pa = approx.prob.at(set.object_id);
    const auto& pe = exact.prob.at(set.object_id);
    CHECK(row_sum(pa) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row_sum(pe) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(total_variation(pa, pe) <= 0.05);
    CHECK(approx.ess.at(set.object_id) > 0.0);
  }
}

TEST_CASE("single object exhaustive equals direct per-model scoring") {
  OneBoxScene s = one_box_scene(false);
  PosteriorTable exact = exhaustive_posterior(s.sets, s.obs, {}, s.cfg);

  std::vector<double> expect;
  double total = 0.0;
  for (const auto& m : s.sets[0].models) {
    World w;
    w.support_z = 0.0;
    w.bodies.push_back(
        make_dynamic_body(0, m.hull, s.cfg.density, s.cfg.friction));
    SettleOptions opt;
    opt.record_trace = false;
    settle(w, opt);
    PredictedObservation pred = render_depth(w, s.obs.frames[0].camera);
    auto dm = observation_distance(s.obs.frames[0], pred);
    const double d = dm.count(0) ? dm.at(0) : 0.0;
    expect.push_back(0.25 * std::exp(-s.cfg.alpha_likelihood * d));
    total += expect.back();
  }
  const auto& row = exact.prob.at(0);
  for (size_t j = 0; j < expect.size(); ++j)
    CHECK(row[j] == doctest::Approx(expect[j] / total).epsilon(1e-9));
}

TEST_CASE("recorded pushes separate shapes that look alike at rest") {
  PushScene s = push_scene();
  s.cfg.rollouts = 300;

  InferenceConfig at_rest = s.cfg;
  at_rest.simulate_actions = false;
  PosteriorTable quiet = infer(s.sets, s.obs, {s.push}, at_rest);
  const auto& qrow = quiet.prob.at(0);
  // Identical renders at rest: only draw-count noise separates the extents,
  // about 0.03 at this budget, and neither model can dominate.
  CHECK(std::abs(qrow[0] - 0.5) <= 0.08);
  CHECK(std::abs(qrow[1] - 0.5) <= 0.08);
  CHECK(std::max(qrow[0], qrow[1]) < 2.0 * std::min(qrow[0], qrow[1]));

  PosteriorTable pushed = infer(s.sets, s.obs, {s.push}, s.cfg);
  const auto& prow = pushed.prob.at(0);
  CHECK(prow[1] >= 2.0 * prow[0]);
  CHECK(entropy(prow) <= entropy(qrow));
}

TEST_CASE("inference is deterministic and thread count does not change results") {
  TwoBoxScene s = two_box_scene();
  s.cfg.rollouts = 200;
  PosteriorTable a = infer(s.sets, s.obs, {}, s.cfg);
  PosteriorTable b = infer(s.sets, s.obs, {}, s.cfg);
  InferenceConfig threaded = s.cfg;
  threaded.jobs = 4;
  PosteriorTable c = infer(s.sets, s.obs, {}, threaded);

  for (const auto& set : s.sets) {
    const auto& ra = a.prob.at(set.object_id);
    const auto& rb = b.prob.at(set.object_id);
    const auto& rc = c.prob.at(set.object_id);
    for (size_t j = 0; j < ra.size(); ++j) {
      CHECK(ra[j] == rb[j]);
      CHECK(ra[j] == rc[j]);
    }
    CHECK(a.ess.at(set.object_id) == c.ess.at(set.object_id));
  }
}

TEST_CASE("map selection breaks ties toward the smaller volume") {
  OneBoxScene s = one_box_scene(false);

  PosteriorTable tied;
  tied.prob[0] = {0.25, 0.25, 0.25, 0.25};
  JointSceneModel pick = select_map_models(tied, s.sets);
  CHECK(pick.chosen.at(0) == 0);  // all tied, thinnest slab wins

  PosteriorTable near_tie;
  near_tie.prob[0] = {0.3, 0.3 + 5e-13, 0.2, 0.2 - 5e-13};
  CHECK(select_map_models(near_tie, s.sets).chosen.at(0) == 0);

  PosteriorTable strict;
  strict.prob[0] = {0.2, 0.41, 0.39, 0.0};
  JointSceneModel best = select_map_models(strict, s.sets);
  CHECK(best.chosen.at(0) == 1);
  CHECK(best.models.size() == 1);
  CHECK(best.models[0].volume ==
        doctest::Approx(s.sets[0].models[1].volume));
}

TEST_CASE("constraint violating models keep exactly zero posterior mass") {
  OneBoxScene s = one_box_scene(true);
  s.cfg.rollouts = 200;
  PosteriorTable sampled = infer(s.sets, s.obs, {}, s.cfg);
  CHECK(sampled.prob.at(0)[4] == 0.0);
  CHECK(sampled.prob.at(0)[s.true_index] > 0.5);

  PosteriorTable exact = exhaustive_posterior(s.sets, s.obs, {}, s.cfg);
  CHECK(exact.prob.at(0)[4] == 0.0);
  CHECK(exact.rollout_count == 4);
}

TEST_CASE("the size prior shifts mass toward smaller models") {
  PushScene s = push_scene();
  s.cfg.rollouts = 200;
  s.cfg.simulate_actions = false;  // at rest the data cannot disambiguate

  PosteriorTable uniform = infer(s.sets, s.obs, {}, s.cfg);
  InferenceConfig sized = s.cfg;
  sized.prior = {PriorKind::Size, 1.0};
  PosteriorTable small_biased = infer(s.sets, s.obs, {}, sized);

  // The flat prior leaves only draw-count noise around an even split.
  CHECK(std::abs(uniform.prob.at(0)[0] - 0.5) <= 0.08);
  CHECK(small_biased.prob.at(0)[0] > 0.6);
  CHECK(small_biased.prob.at(0)[0] > uniform.prob.at(0)[0]);
}

TEST_CASE("with no surviving weight the posterior falls back to the prior") {
  OneBoxScene s = one_box_scene(false);
  Facet top = s.sets[0].models[0].observed[0];
  HypothesisSet doomed;
  doomed.object_id = 0;
  doomed.models.push_back(slab_model(0, top, 0.065));
  doomed.models.push_back(slab_model(0, top, 0.08));
  std::vector<HypothesisSet> sets{doomed};

  InferenceConfig cfg = s.cfg;
  cfg.rollouts = 50;
  PosteriorTable p = infer(sets, s.obs, {}, cfg);
  CHECK(p.prob.at(0)[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.prob.at(0)[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.ess.at(0) == 0.0);

  CHECK_THROWS_AS(exhaustive_posterior(sets, s.obs, {}, cfg), NoValidModels);
}

TEST_CASE("joint spaces beyond the enumeration cap are rejected") {
  OneBoxScene s = one_box_scene(false);
  HypothesisSet wide;
  wide.object_id = 0;
  for (int i = 0; i < 25; ++i) wide.models.push_back(s.sets[0].models[0]);
  std::vector<HypothesisSet> sets;
  for (int k = 0; k < 3; ++k) {
    sets.push_back(wide);
    sets.back().object_id = k;
  }
  CHECK_THROWS_AS(exhaustive_posterior(sets, s.obs, {}, s.cfg), TooLarge);
}

}
