#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipr/hypothesis.hpp"
#include "ipr/inference.hpp"
#include "ipr/render.hpp"
#include "ipr/rng.hpp"
#include "ipr/segmentation.hpp"
#include "ipr/sim.hpp"
#include "ipr/types.hpp"
#include "ipr/voxel.hpp"

namespace ipr {

enum class ShapeFamily : uint8_t { Box, Wedge, Cylinder, Book };

const char* shape_name(ShapeFamily f);
std::optional<ShapeFamily> shape_from_name(std::string_view name);

/// Local-frame primitives: base face on z = 0, centered in x and y, so a
/// yaw-plus-translation drop pose keeps the resting face level.
ConvexMesh make_box(double sx, double sy, double sz);
/// Box with the top edge at x = +sx/2 collapsed: a ramp rising toward -x.
ConvexMesh make_wedge(double sx, double sy, double sz);
/// Regular n-gon prism, axis vertical.
ConvexMesh make_prism(double radius, double height, int sides = 12);

/// Vertices and face normals mapped through the pose; volume is unchanged.
ConvexMesh transform_mesh(const ConvexMesh& mesh, const Pose& pose);

struct SceneSpec {
  int count = 3;  // in [1, 10]
  std::vector<ShapeFamily> families = {ShapeFamily::Box, ShapeFamily::Wedge,
                                       ShapeFamily::Cylinder, ShapeFamily::Book};
  double tightness = 0.5;  // 0 spread out, 1 packed
  int pushes = 0;
  uint64_t seed = 0;
};

/// Ground truth at rest. Shapes are world-frame meshes with the settle pose
/// baked in; index in the vector doubles as the object id everywhere
/// downstream (segmentation labels, render masks, report rows).
struct SyntheticScene {
  std::vector<ConvexMesh> shapes;
  double support_z = 0.0;
  CameraModel camera;
  std::vector<PushAction> actions;
  uint64_t seed = 0;
};

/// Samples shapes and drop poses, settles them, and verifies the result
/// stays put under a second settle. Retries with fresh draws up to 20 times,
/// then throws UnstableScene. Same spec gives an identical scene.
SyntheticScene generate_scene(const SceneSpec& spec);

struct CaptureParams {
  double noise_sigma = 0.002;  // depth noise, meters
  double color_noise = 0.01;   // rgb jitter around each object's flat color
  double resolution = 0.005;   // carve grid cell size
  double margin = 0.05;        // grid padding beyond the scene bounds
  double density = 500.0;      // body parameters for action replay
  double friction = 0.5;
};

/// Carve-grid template for a scene: all-unknown cells covering the shapes,
/// the support top, and room for push travel. capture() fills a copy.
VoxelGrid scene_grid_frame(const SyntheticScene& scene, const CaptureParams& p);

/// Everything one virtual sensor pass produces. frames[0] is the static
/// view; one more frame follows each push when captured as a sequence.
struct Observation {
  std::vector<PredictedObservation> frames;  // depth with noise applied
  std::vector<VisibleSpace> visible;         // ray-carved, one per frame
  std::vector<ColoredPoint> cloud;           // frame-0 points, support included
  std::map<int, std::vector<ColoredPoint>> object_points;  // frame 0, by id
};

/// Static capture: renders frame 0, back-projects the cloud, carves free
/// space. Cells a ray crosses before its first hit are free, the hit cell is
/// surface (surface wins over free when rays disagree), cells behind stay
/// unknown.
Observation capture(const SyntheticScene& scene, const CaptureParams& p, Rng& rng);

/// capture() plus a replay of the recorded pushes on the ground-truth
/// bodies, capturing one more frame after each action.
Observation capture_sequence(const SyntheticScene& scene, const CaptureParams& p,
                             Rng& rng);

/// Rebuilds the ground-truth world with the given material parameters,
/// replays the scene's pushes, and returns the final body poses.
std::vector<Pose> replay_ground_truth(const SyntheticScene& scene, double density,
                                      double friction);

/// One observed facet group per ground-truth object, built from the capture's
/// instance masks. Points within plane_tolerance of the support are dropped
/// first, the same crop plane removal applies to a real cloud. Objects with
/// fewer than 8 remaining points are skipped.
std::vector<PartialObject> partials_from_capture(const Observation& obs,
                                                 const SegmentationParams& params,
                                                 double support_z = 0.0);

/// Occupancy overlap between two grids in the same frame. A cell counts as
/// occupied when its label is kSurface. Empty denominators score 1 (a claim
/// about nothing holds vacuously); iou of two empty grids is 1, of one empty
/// grid 0.
struct VoxelMetrics {
  double iou = 0.0;
  double precision = 0.0;  // |A and B| / |A|, A = predicted
  double recall = 0.0;     // |A and B| / |B|, B = truth
  double f1 = 0.0;         // 0 whenever precision + recall is 0
};

VoxelMetrics iou_metrics(const VoxelGrid& pred, const VoxelGrid& truth);

/// Marks every cell whose center lies inside any of the meshes. The frame
/// argument fixes origin and dims so unions and comparisons share a lattice.
VoxelGrid occupancy_union(const std::vector<const ConvexMesh*>& meshes,
                          const VoxelGrid& frame);

/// Voxelizes both meshes into one canonical frame around their joint bounds.
VoxelMetrics mesh_metrics(const ConvexMesh& pred, const ConvexMesh& truth,
                          double resolution);

enum class Variant : uint8_t {
  CollisionChecker,   // pruned sets, uniform posterior, smallest-volume pick
  IprUniform,
  IprSize,
  IprActionUniform,
  IprActionSize,
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);

struct BenchmarkConfig {
  HypothesisParams hypothesis;
  int models_per_object = 8;
  InferenceConfig inference;  // seed here drives capture, sampling, rollouts
  CaptureParams capture;
  // Supervoxels must stay smaller than the faces of desk-scale objects at
  // this sensor resolution, or facet normals blur across edges.
  SegmentationParams segmentation{.spatial_bandwidth = 0.008};
  int jobs = 1;  // scenes in flight; results identical for every value
};

struct EvalRow {
  std::string variant;
  int scene = 0;
  int object = -1;  // -1 marks the whole-scene row
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double runtime_s = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;          // sorted by variant, scene, object
  std::vector<std::string> failures;  // one entry per scene that threw
};

/// Shared captures and hypothesis sets per scene, then one posterior + MAP
/// pick per variant. Per-object rows compare each MAP model against its
/// ground-truth mesh; the object -1 row compares the unions. A scene that
/// throws lands in failures and the others still run.
EvalReport run_benchmark(const std::vector<SyntheticScene>& scenes,
                         const std::vector<Variant>& variants,
                         const BenchmarkConfig& cfg);

void save_eval_csv(std::ostream& os, const EvalReport& report);
EvalReport load_eval_csv(std::istream& is);

/// Writes <dir>/<name>.json plus one OBJ per shape next to it.
void save_scene(const std::string& dir, const std::string& name,
                const SyntheticScene& scene);
/// Reads a scene json; OBJ references resolve relative to the json's parent.
SyntheticScene load_scene(const std::string& json_path);

}  // namespace ipr
