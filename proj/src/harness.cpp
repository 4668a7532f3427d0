#include "ipr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ipr/constraints.hpp"
#include "ipr/convex_hull.hpp"
#include "ipr/io.hpp"

namespace ipr {
namespace {

constexpr uint64_t kSceneTag = 0x7363656eULL;
constexpr uint64_t kCaptureTag = 0x63617074ULL;
constexpr uint64_t kModelsTag = 0x6d6f646cULL;
constexpr uint64_t kBenchSeedTag = 0x62656e63ULL;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kStableDisplacement = 0.002;

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void add(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void add(const ConvexMesh& m) {
    for (const auto& v : m.vertices) add(v);
  }
  bool empty() const { return !(lo.x() <= hi.x()); }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

CameraModel look_at(const Vec3& eye, const Vec3& target) {
  CameraModel cam;
  Vec3 z = (target - eye).normalized();
  Vec3 ref = std::abs(z.z()) > 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
  Vec3 x = z.cross(ref).normalized();
  Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  cam.pose = Pose{Quat(r), eye};
  return cam;
}

ConvexMesh sample_shape(ShapeFamily f, Rng& rng) {
  switch (f) {
    case ShapeFamily::Box:
      return make_box(rng.uniform(0.035, 0.075), rng.uniform(0.035, 0.075),
                      rng.uniform(0.035, 0.075));
    case ShapeFamily::Wedge:
      return make_wedge(rng.uniform(0.04, 0.08), rng.uniform(0.04, 0.08),
                        rng.uniform(0.03, 0.06));
    case ShapeFamily::Cylinder:
      return make_prism(rng.uniform(0.018, 0.032), rng.uniform(0.035, 0.075));
    case ShapeFamily::Book:
      return make_box(rng.uniform(0.06, 0.1), rng.uniform(0.06, 0.1),
                      rng.uniform(0.012, 0.022));
  }
  return make_box(0.05, 0.05, 0.05);
}

/// World-frame hull of a body in its current pose.
ConvexMesh body_world_mesh(const RigidBody& b, const ConvexMesh& source) {
  Pose world{b.pose.rotation,
             b.pose.translation - b.pose.rotation * b.shape->com};
  return transform_mesh(source, world);
}

World truth_world(const SyntheticScene& scene, double density, double friction) {
  World w;
  w.support_z = scene.support_z;
  for (size_t i = 0; i < scene.shapes.size(); ++i)
    w.bodies.push_back(make_dynamic_body(int(i), scene.shapes[i], density, friction));
  return w;
}

Vec3 object_color(int id) {
  // Golden-ratio hue walk keeps any two ids far apart in hue.
  double h = std::fmod(0.61803398875 * double(id + 1), 1.0) * 6.0;
  double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  if (h < 1) {
    r = 1; g = x;
  } else if (h < 2) {
    r = x; g = 1;
  } else if (h < 3) {
    g = 1; b = x;
  } else if (h < 4) {
    g = x; b = 1;
  } else if (h < 5) {
    r = x; b = 1;
  } else {
    r = 1; b = x;
  }
  return Vec3(0.15 + 0.7 * r, 0.15 + 0.7 * g, 0.15 + 0.7 * b);
}

/// Noise, cloud points, and the carved grid for one rendered frame. The rng
/// is drawn once per hit pixel in row-major order, so a frame's noise is a
/// pure function of the stream position on entry.
void finish_frame(PredictedObservation& frame, int frame_index,
                  const VoxelGrid& grid_template, const CaptureParams& p,
                  Rng& rng, Observation& out, bool collect_cloud) {
  const CameraModel& cam = frame.camera;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      size_t i = frame.index(x, y);
      if (frame.scene_depth[i] >= cam.far_plane) continue;
      double dn = p.noise_sigma * rng.normal();
      Vec3 cn(rng.normal(), rng.normal(), rng.normal());
      double z = frame.scene_depth[i] + dn;
      z = std::clamp(z, 1e-4, cam.far_plane - 1e-9);
      frame.scene_depth[i] = z;
      if (frame.mask[i] >= 0) frame.depth[i] = z;
      if (!collect_cloud) continue;
      Vec3 pc((x + 0.5 - cam.cx) / cam.fx * z, (y + 0.5 - cam.cy) / cam.fy * z, z);
      ColoredPoint pt;
      pt.position = cam.pose.apply(pc);
      Vec3 base = frame.mask[i] >= 0 ? object_color(frame.mask[i]) : Vec3(0.5, 0.5, 0.5);
      pt.color = (base + p.color_noise * cn).cwiseMax(0.0).cwiseMin(1.0);
      out.cloud.push_back(pt);
      if (frame.mask[i] >= 0) out.object_points[frame.mask[i]].push_back(pt);
    }

  // Carve: free along each ray, surface at its endpoint, unknown behind.
  // Surface cells are stamped after all rays so a grazing neighbor ray
  // cannot re-open them as free.
  VisibleSpace vs;
  vs.frame_index = frame_index;
  vs.grid = grid_template;
  std::vector<std::array<int, 3>> hits;
  const Vec3 eye = cam.pose.translation;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      size_t i = frame.index(x, y);
      double z = frame.scene_depth[i];
      bool hit = z < cam.far_plane;
      Vec3 pc((x + 0.5 - cam.cx) / cam.fx * z, (y + 0.5 - cam.cy) / cam.fy * z, z);
      Vec3 end = cam.pose.apply(pc);
      std::array<int, 3> hit_cell{-1, -1, -1};
      if (hit && vs.grid.contains_point(end)) hit_cell = vs.grid.cell_of(end);
      walk_segment(vs.grid, eye, end, [&](int cx, int cy, int cz) {
        if (cx != hit_cell[0] || cy != hit_cell[1] || cz != hit_cell[2])
          vs.grid.at(cx, cy, cz) = kFree;
        return true;
      });
      if (hit_cell[0] >= 0) hits.push_back(hit_cell);
    }
  for (const auto& c : hits) vs.grid.at(c[0], c[1], c[2]) = kSurface;
  out.frames.push_back(std::move(frame));
  out.visible.push_back(std::move(vs));
}

Observation capture_impl(const SyntheticScene& scene, const CaptureParams& p,
                         Rng& rng, bool with_actions) {
  Observation out;
  VoxelGrid grid_template = scene_grid_frame(scene, p);
  World w = truth_world(scene, p.density, p.friction);
  PredictedObservation frame0 = render_depth(w, scene.camera);
  finish_frame(frame0, 0, grid_template, p, rng, out, true);
  if (!with_actions || scene.actions.empty()) return out;

  ReplayResult rr = replay_actions(w, scene.actions);
  for (size_t t = 0; t < rr.after_action.size(); ++t) {
    for (size_t i = 0; i < w.bodies.size(); ++i)
      w.bodies[i].pose = rr.after_action[t][i];
    PredictedObservation f = render_depth(w, scene.camera);
    finish_frame(f, int(t) + 1, grid_template, p, rng, out, false);
  }
  return out;
}

size_t occupied_count(const VoxelGrid& g) { return g.count(kSurface); }

bool same_frame(const VoxelGrid& a, const VoxelGrid& b) {
  return a.dims == b.dims && a.resolution == b.resolution &&
         (a.origin - b.origin).norm() < 1e-9;
}

InferenceConfig variant_config(Variant v, const BenchmarkConfig& cfg,
                               const SyntheticScene& scene, int scene_index) {
  InferenceConfig icfg = cfg.inference;
  icfg.support_z = scene.support_z;
  icfg.density = cfg.capture.density;
  icfg.friction = cfg.capture.friction;
  icfg.jobs = 1;  // parallelism lives at the scene level
  uint64_t s = cfg.inference.seed;
  Rng seed_rng = Rng::stream(s, {kBenchSeedTag, uint64_t(scene_index)});
  icfg.seed = seed_rng.next_u64();
  switch (v) {
    case Variant::CollisionChecker:
      icfg.rollouts = 0;
      icfg.simulate_actions = false;
      icfg.prior.kind = PriorKind::Uniform;
      break;
    case Variant::IprUniform:
      icfg.simulate_actions = false;
      icfg.prior.kind = PriorKind::Uniform;
      break;
    case Variant::IprSize:
      icfg.simulate_actions = false;
      icfg.prior.kind = PriorKind::Size;
      break;
    case Variant::IprActionUniform:
      icfg.simulate_actions = true;
      icfg.prior.kind = PriorKind::Uniform;
      break;
    case Variant::IprActionSize:
      icfg.simulate_actions = true;
      icfg.prior.kind = PriorKind::Size;
      break;
  }
  return icfg;
}

struct SceneEval {
  std::vector<EvalRow> rows;
  std::vector<std::string> failures;
};

SceneEval eval_scene(int si, const SyntheticScene& scene,
                     const std::vector<Variant>& variants,
                     const BenchmarkConfig& cfg) {
  SceneEval out;
  try {
    bool any_actions = false;
    for (Variant v : variants)
      any_actions |= v == Variant::IprActionUniform || v == Variant::IprActionSize;
    any_actions &= !scene.actions.empty();

    Rng cap_rng = Rng::stream(cfg.inference.seed, {kCaptureTag, uint64_t(si)});
    Observation obs = capture_impl(scene, cfg.capture, cap_rng, any_actions);

    std::vector<PartialObject> partials =
        partials_from_capture(obs, cfg.segmentation, scene.support_z);
    if (partials.empty()) throw InvalidPartial("no visible objects");

    Rng hyp_rng = Rng::stream(cfg.inference.seed, {kModelsTag, uint64_t(si)});
    std::vector<HypothesisSet> sets;
    for (const auto& partial : partials)
      sets.push_back(sample_model_set(partial, obs.visible[0], cfg.models_per_object,
                                      hyp_rng, cfg.hypothesis));
    sets = prune_hypotheses(sets, obs.visible[0], scene.support_z);

    SceneObservations sobs{obs.visible, obs.frames};
    double res = cfg.capture.resolution;
    for (Variant v : variants) {
      double t0 = now_s();
      InferenceConfig icfg = variant_config(v, cfg, scene, si);
      PosteriorTable post = infer(sets, sobs, scene.actions, icfg);
      JointSceneModel map = select_map_models(post, sets, scene.support_z);
      double rt = now_s() - t0;

      std::vector<bool> covered(scene.shapes.size(), false);
      std::vector<const ConvexMesh*> pred;
      for (const auto& m : map.models) {
        pred.push_back(&m.hull);
        EvalRow row{variant_name(v), si, m.object_id, 0, 0, 0, 0, rt};
        if (m.object_id >= 0 && m.object_id < int(scene.shapes.size())) {
          covered[size_t(m.object_id)] = true;
          VoxelMetrics vm = mesh_metrics(m.hull, scene.shapes[size_t(m.object_id)], res);
          row.iou = vm.iou;
          row.precision = vm.precision;
          row.recall = vm.recall;
          row.f1 = vm.f1;
        }
        out.rows.push_back(row);
      }
      for (size_t oi = 0; oi < scene.shapes.size(); ++oi) {
        if (covered[oi]) continue;
        // Fully occluded object: nothing predicted, vacuous precision.
        out.rows.push_back({variant_name(v), si, int(oi), 0.0, 1.0, 0.0, 0.0, rt});
      }

      Aabb joint;
      for (const auto* m : pred) joint.add(*m);
      for (const auto& s : scene.shapes) joint.add(s);
      VoxelGrid frame = canonical_frame(joint.lo, joint.hi, res);
      std::vector<const ConvexMesh*> truth;
      for (const auto& s : scene.shapes) truth.push_back(&s);
      VoxelMetrics sm = iou_metrics(occupancy_union(pred, frame),
                                    occupancy_union(truth, frame));
      out.rows.push_back({variant_name(v), si, -1, sm.iou, sm.precision, sm.recall,
                          sm.f1, rt});
    }
  } catch (const std::exception& e) {
    out.rows.clear();
    out.failures.push_back("scene " + std::to_string(si) + ": " + e.what());
  }
  return out;
}

}  // namespace

const char* shape_name(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::Box: return "box";
    case ShapeFamily::Wedge: return "wedge";
    case ShapeFamily::Cylinder: return "cylinder";
    case ShapeFamily::Book: return "book";
  }
  return "box";
}

std::optional<ShapeFamily> shape_from_name(std::string_view name) {
  if (name == "box") return ShapeFamily::Box;
  if (name == "wedge") return ShapeFamily::Wedge;
  if (name == "cylinder") return ShapeFamily::Cylinder;
  if (name == "book") return ShapeFamily::Book;
  return std::nullopt;
}

ConvexMesh make_box(double sx, double sy, double sz) {
  std::vector<Vec3> pts;
  for (double x : {-0.5 * sx, 0.5 * sx})
    for (double y : {-0.5 * sy, 0.5 * sy})
      for (double z : {0.0, sz}) pts.push_back(Vec3(x, y, z));
  return convex_hull(pts);
}

ConvexMesh make_wedge(double sx, double sy, double sz) {
  std::vector<Vec3> pts;
  for (double x : {-0.5 * sx, 0.5 * sx})
    for (double y : {-0.5 * sy, 0.5 * sy}) pts.push_back(Vec3(x, y, 0.0));
  for (double y : {-0.5 * sy, 0.5 * sy}) pts.push_back(Vec3(-0.5 * sx, y, sz));
  return convex_hull(pts);
}

ConvexMesh make_prism(double radius, double height, int sides) {
  if (sides < 3) throw DegenerateInput("prism needs at least 3 sides");
  std::vector<Vec3> pts;
  for (int k = 0; k < sides; ++k) {
    double a = kTwoPi * double(k) / double(sides);
    for (double z : {0.0, height})
      pts.push_back(Vec3(radius * std::cos(a), radius * std::sin(a), z));
  }
  return convex_hull(pts);
}

ConvexMesh transform_mesh(const ConvexMesh& mesh, const Pose& pose) {
  ConvexMesh out = mesh;
  for (auto& v : out.vertices) v = pose.apply(v);
  for (auto& n : out.face_normals) n = pose.rotation * n;
  return out;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  if (spec.count < 1 || spec.count > 10)
    throw DegenerateInput("object count must be in [1, 10]");
  if (spec.families.empty()) throw DegenerateInput("no shape families");

  const double tight = std::clamp(spec.tightness, 0.0, 1.0);
  const double half = 0.16 - 0.12 * tight;
  std::string last_reason = "never settled";

  for (int attempt = 0; attempt < 20; ++attempt) {
    Rng rng = Rng::stream(spec.seed, {kSceneTag, uint64_t(attempt)});
    std::vector<ConvexMesh> placed;
    World w;
    for (int i = 0; i < spec.count; ++i) {
      ShapeFamily fam = spec.families[rng.uniform_int(spec.families.size())];
      ConvexMesh local = sample_shape(fam, rng);
      Pose drop;
      drop.rotation = Quat(Eigen::AngleAxisd(rng.uniform(0.0, kTwoPi), Vec3::UnitZ()));
      drop.translation = Vec3(rng.uniform(-half, half), rng.uniform(-half, half),
                              0.002 + 0.09 * double(i));
      placed.push_back(transform_mesh(local, drop));
      w.bodies.push_back(make_dynamic_body(i, placed.back(), 500.0, 0.6));
    }

    try {
      SettleOptions opt;
      opt.t_max = 6.0;
      opt.record_trace = false;
      settle(w, opt);
      opt.t_max = 2.0;
      SimTrace check = settle(w, opt);
      double worst = 0.0;
      for (double d : check.displacement) worst = std::max(worst, d);
      if (worst >= kStableDisplacement) {
        last_reason = "kept moving after settling";
        continue;
      }
    } catch (const Diverged&) {
      last_reason = "simulation diverged";
      continue;
    }

    bool in_bounds = true;
    for (const auto& b : w.bodies)
      in_bounds &= b.pose.translation.head<2>().norm() < 0.45 &&
                   b.pose.translation.z() > -0.01 && b.pose.translation.z() < 0.5;
    if (!in_bounds) {
      last_reason = "a body slid out of the workspace";
      continue;
    }

    SyntheticScene scene;
    scene.seed = spec.seed;
    scene.support_z = w.support_z;
    Aabb box;
    for (size_t i = 0; i < w.bodies.size(); ++i) {
      scene.shapes.push_back(body_world_mesh(w.bodies[i], placed[i]));
      box.add(scene.shapes.back());
    }

    Vec3 target(box.center().x(), box.center().y(), scene.support_z + 0.03);
    double extent = std::max(box.hi.x() - box.lo.x(), box.hi.y() - box.lo.y());
    double dist = std::max(0.38, 1.3 * extent + 0.2);
    Vec3 view_dir = Vec3(0.0, -0.74, 0.68).normalized();
    scene.camera = look_at(target + view_dir * dist, target);

    for (int k = 0; k < spec.pushes; ++k) {
      int pick = int(rng.uniform_int(uint64_t(spec.count)));
      const Vec3 com = w.bodies[size_t(pick)].pose.translation;
      PushAction act;
      act.duration = 6.4;
      bool ok = false;
      for (int tries = 0; tries < 10 && !ok; ++tries) {
        double theta = rng.uniform(0.0, kTwoPi);
        act.direction = Vec3(std::cos(theta), std::sin(theta), 0.0);
        double height = std::clamp(com.z(), scene.support_z + 0.015,
                                   scene.support_z + 0.05);
        act.start_point = Vec3(com.x(), com.y(), height) - 0.28 * act.direction;
        ok = true;
        for (const auto& s : scene.shapes) ok &= !s.contains(act.start_point, 0.02);
      }
      if (ok) scene.actions.push_back(act);
    }

    if (!scene.actions.empty()) {
      try {
        World wr = truth_world(scene, 500.0, 0.6);
        replay_actions(wr, scene.actions);
      } catch (const Diverged&) {
        last_reason = "push replay diverged";
        continue;
      }
    }
    return scene;
  }
  throw UnstableScene("no stable scene in 20 attempts: " + last_reason);
}

VoxelGrid scene_grid_frame(const SyntheticScene& scene, const CaptureParams& p) {
  Aabb box;
  for (const auto& s : scene.shapes) box.add(s);
  if (box.empty()) {
    box.add(Vec3(-0.1, -0.1, scene.support_z));
    box.add(Vec3(0.1, 0.1, scene.support_z + 0.1));
  }
  double m = p.margin + (scene.actions.empty() ? 0.0 : 0.15);
  Vec3 lo(box.lo.x() - m, box.lo.y() - m,
          std::min(box.lo.z(), scene.support_z) - 0.004);
  Vec3 hi(box.hi.x() + m, box.hi.y() + m, box.hi.z() + 0.03);
  VoxelGrid g = canonical_frame(lo, hi, p.resolution);
  std::fill(g.cells.begin(), g.cells.end(), kUnknown);
  return g;
}

Observation capture(const SyntheticScene& scene, const CaptureParams& p, Rng& rng) {
  return capture_impl(scene, p, rng, false);
}

Observation capture_sequence(const SyntheticScene& scene, const CaptureParams& p,
                             Rng& rng) {
  return capture_impl(scene, p, rng, true);
}

std::vector<Pose> replay_ground_truth(const SyntheticScene& scene, double density,
                                      double friction) {
  World w = truth_world(scene, density, friction);
  if (scene.actions.empty()) {
    SettleOptions opt;
    opt.record_trace = false;
    settle(w, opt);
  } else {
    replay_actions(w, scene.actions);
  }
  return w.poses();
}

std::vector<PartialObject> partials_from_capture(const Observation& obs,
                                                 const SegmentationParams& params,
                                                 double support_z) {
  std::vector<PartialObject> out;
  if (obs.frames.empty()) return out;
  const Vec3 eye = obs.frames[0].camera.pose.translation;
  const double crop_z = support_z + params.plane_tolerance;
  for (const auto& [id, pts] : obs.object_points) {
    std::vector<ColoredPoint> kept;
    for (const auto& p : pts)
      if (p.position.z() >= crop_z) kept.push_back(p);
    if (kept.size() < 8) continue;
    auto svs = extract_supervoxels(kept, params.spatial_bandwidth,
                                   params.color_bandwidth, eye);
    if (svs.empty()) continue;
    out.push_back(decompose_facets(svs, id, 0, params.normal_bandwidth_deg));
  }
  return out;
}

VoxelMetrics iou_metrics(const VoxelGrid& pred, const VoxelGrid& truth) {
  if (!same_frame(pred, truth))
    throw ResolutionMismatch("metric grids must share one frame");
  size_t inter = 0;
  for (size_t i = 0; i < pred.cells.size(); ++i)
    inter += pred.cells[i] == kSurface && truth.cells[i] == kSurface;
  size_t a = occupied_count(pred);
  size_t b = occupied_count(truth);
  size_t uni = a + b - inter;
  VoxelMetrics m;
  m.iou = uni > 0 ? double(inter) / double(uni) : 1.0;
  m.precision = a > 0 ? double(inter) / double(a) : 1.0;
  m.recall = b > 0 ? double(inter) / double(b) : 1.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

VoxelGrid occupancy_union(const std::vector<const ConvexMesh*>& meshes,
                          const VoxelGrid& frame) {
  VoxelGrid out = frame;
  std::fill(out.cells.begin(), out.cells.end(), kFree);
  for (const ConvexMesh* m : meshes) {
    if (!m || m->vertices.empty()) continue;
    VoxelGrid g = voxelize(*m, frame.resolution, frame);
    for (size_t i = 0; i < out.cells.size(); ++i)
      if (g.cells[i] == kSurface) out.cells[i] = kSurface;
  }
  return out;
}

VoxelMetrics mesh_metrics(const ConvexMesh& pred, const ConvexMesh& truth,
                          double resolution) {
  Aabb joint;
  joint.add(pred);
  joint.add(truth);
  VoxelGrid frame = canonical_frame(joint.lo, joint.hi, resolution);
  return iou_metrics(voxelize(pred, resolution, frame),
                     voxelize(truth, resolution, frame));
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::CollisionChecker: return "CollisionChecker";
    case Variant::IprUniform: return "IPR+uniform";
    case Variant::IprSize: return "IPR+size";
    case Variant::IprActionUniform: return "IPR+action+uniform";
    case Variant::IprActionSize: return "IPR+action+size";
  }
  return "CollisionChecker";
}

std::optional<Variant> variant_from_name(std::string_view name) {
  for (Variant v : {Variant::CollisionChecker, Variant::IprUniform, Variant::IprSize,
                    Variant::IprActionUniform, Variant::IprActionSize})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

EvalReport run_benchmark(const std::vector<SyntheticScene>& scenes,
                         const std::vector<Variant>& variants,
                         const BenchmarkConfig& cfg) {
  if (scenes.empty()) throw DegenerateInput("benchmark needs at least one scene");
  std::vector<SceneEval> evals(scenes.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t si = next.fetch_add(1);
      if (si >= scenes.size()) return;
      evals[si] = eval_scene(int(si), scenes[si], variants, cfg);
    }
  };
  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  for (auto& e : evals) {
    report.rows.insert(report.rows.end(), e.rows.begin(), e.rows.end());
    report.failures.insert(report.failures.end(), e.failures.begin(),
                           e.failures.end());
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const EvalRow& a, const EvalRow& b) {
                     return std::tie(a.variant, a.scene, a.object) <
                            std::tie(b.variant, b.scene, b.object);
                   });
  return report;
}

void save_eval_csv(std::ostream& os, const EvalReport& report) {
  os.precision(17);
  os << "variant,scene,object,iou,precision,recall,f1,runtime_s\n";
  for (const auto& r : report.rows)
    os << r.variant << ',' << r.scene << ',' << r.object << ',' << r.iou << ','
       << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.runtime_s
       << '\n';
}

EvalReport load_eval_csv(std::istream& is) {
  EvalReport report;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty report");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    EvalRow r;
    std::string field;
    if (!std::getline(ss, r.variant, ',')) throw IoError("bad report row");
    auto next_d = [&](double& v) {
      if (!std::getline(ss, field, ',')) throw IoError("bad report row");
      v = std::stod(field);
    };
    double scene = 0, object = 0;
    next_d(scene);
    next_d(object);
    r.scene = int(scene);
    r.object = int(object);
    next_d(r.iou);
    next_d(r.precision);
    next_d(r.recall);
    next_d(r.f1);
    next_d(r.runtime_s);
    report.rows.push_back(r);
  }
  return report;
}

void save_scene(const std::string& dir, const std::string& name,
                const SyntheticScene& scene) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  nlohmann::json j;
  j["support_z"] = scene.support_z;
  j["seed"] = scene.seed;
  const CameraModel& c = scene.camera;
  j["camera"] = {
      {"width", c.width},   {"height", c.height}, {"fx", c.fx},
      {"fy", c.fy},         {"cx", c.cx},         {"cy", c.cy},
      {"far_plane", c.far_plane},
      {"rotation", {c.pose.rotation.w(), c.pose.rotation.x(), c.pose.rotation.y(),
                    c.pose.rotation.z()}},
      {"translation", {c.pose.translation.x(), c.pose.translation.y(),
                       c.pose.translation.z()}},
  };
  j["actions"] = nlohmann::json::array();
  for (const auto& a : scene.actions)
    j["actions"].push_back({
        {"start", {a.start_point.x(), a.start_point.y(), a.start_point.z()}},
        {"direction", {a.direction.x(), a.direction.y(), a.direction.z()}},
        {"speed", a.speed},
        {"duration", a.duration},
        {"effector_radius", a.effector_radius},
    });
  j["shapes"] = nlohmann::json::array();
  for (size_t i = 0; i < scene.shapes.size(); ++i) {
    char base[64];
    std::snprintf(base, sizeof base, "%s_shape_%03zu.obj", name.c_str(), i);
    save_obj_file((fs::path(dir) / base).string(), scene.shapes[i]);
    j["shapes"].push_back(std::string(base));
  }
  // Poses are baked into the world-frame meshes; identity kept for readers.
  j["poses"] = nlohmann::json::array();
  for (size_t i = 0; i < scene.shapes.size(); ++i)
    j["poses"].push_back({{"rotation", {1.0, 0.0, 0.0, 0.0}},
                          {"translation", {0.0, 0.0, 0.0}}});
  write_text_file((fs::path(dir) / (name + ".json")).string(), j.dump(2) + "\n");
}

SyntheticScene load_scene(const std::string& json_path) {
  namespace fs = std::filesystem;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scene parse: ") + e.what());
  }
  SyntheticScene scene;
  try {
    scene.support_z = j.at("support_z").get<double>();
    scene.seed = j.at("seed").get<uint64_t>();
    const auto& c = j.at("camera");
    scene.camera.width = c.at("width").get<int>();
    scene.camera.height = c.at("height").get<int>();
    scene.camera.fx = c.at("fx").get<double>();
    scene.camera.fy = c.at("fy").get<double>();
    scene.camera.cx = c.at("cx").get<double>();
    scene.camera.cy = c.at("cy").get<double>();
    scene.camera.far_plane = c.at("far_plane").get<double>();
    const auto& q = c.at("rotation");
    scene.camera.pose.rotation =
        Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
             q.at(3).get<double>());
    const auto& t = c.at("translation");
    scene.camera.pose.translation =
        Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    for (const auto& a : j.value("actions", nlohmann::json::array())) {
      PushAction act;
      const auto& s = a.at("start");
      act.start_point = Vec3(s.at(0).get<double>(), s.at(1).get<double>(),
                             s.at(2).get<double>());
      const auto& d = a.at("direction");
      act.direction = Vec3(d.at(0).get<double>(), d.at(1).get<double>(),
                           d.at(2).get<double>());
      act.speed = a.at("speed").get<double>();
      act.duration = a.at("duration").get<double>();
      act.effector_radius = a.at("effector_radius").get<double>();
      scene.actions.push_back(act);
    }
    fs::path parent = fs::path(json_path).parent_path();
    for (const auto& s : j.at("shapes"))
      scene.shapes.push_back(
          load_obj_file((parent / s.get<std::string>()).string()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scene fields: ") + e.what());
  }
  return scene;
}

}  // namespace ipr
