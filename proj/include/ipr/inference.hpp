#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ipr/constraints.hpp"
#include "ipr/hypothesis.hpp"
#include "ipr/render.hpp"
#include "ipr/rng.hpp"
#include "ipr/sim.hpp"

namespace ipr {

enum class PriorKind : uint8_t { Uniform, Size };

/// Prior over one object's candidate models. Size discounts volume: the
/// smallest model keeps weight 1 and the largest decays to exp(-beta), with
/// the rest interpolated on normalized volume. Rows are normalized per set.
struct PriorSpec {
  PriorKind kind = PriorKind::Uniform;
  double beta = 1.0;
};

std::vector<double> model_priors(const HypothesisSet& set,
                                 const PriorSpec& prior);

struct InferenceConfig {
  int rollouts = 500;              // sampling budget
  double timeout_s = 600.0;        // wall clock cutoff for the sampling loop
  double alpha_likelihood = 10.0;  // depth mismatch weight when scoring
  double alpha_explore = 50.0;     // settle displacement weight when staging
  uint64_t seed = 0;
  // When false only the untouched first frame is scored, even if recorded
  // pushes exist; the physics then judges static stability alone.
  bool simulate_actions = true;
  PriorSpec prior;
  double density = 500.0;  // shared by every body
  double friction = 0.5;
  double support_z = 0.0;
  // Worker threads. Results are identical for every value: each rollout is a
  // pure function of (seed, rollout index) and contributions are folded in
  // index order.
  int jobs = 1;
};

/// Observed evidence. Frame 0 is the untouched scene; frame k >= 1 was
/// captured after push k finished and the scene settled.
struct SceneObservations {
  std::vector<VisibleSpace> visible;
  std::vector<PredictedObservation> frames;
};

/// Progress of one sampling pass over object placements.
struct RolloutState {
  std::vector<bool> placed;  // by position in the hypothesis set list
  std::vector<int> model;    // chosen model index, meaningful where placed
  int stage = 1;             // 1-based; placed count equals stage - 1
};

/// Stage-local placement distribution. Rows cover unplaced objects only and
/// each sums to 1; a model whose staged scene violates constraints gets 0.
/// selected_object is the row with the largest pre-normalization mass, ties
/// resolved toward the later position in the set list.
struct ExplorationTable {
  std::map<int, std::vector<double>> prob;  // object_id -> row over models
  std::map<int, double> mass;               // pre-normalization row sums
  int selected_object = -1;
};

/// Cache of staged-scene evaluations, keyed by the complete per-object model
/// choice. The same partial assignments recur across rollouts, so constraint
/// checks and settle displacements are computed once.
struct StagedSceneMemo {
  struct Entry {
    bool valid = false;               // passed joint constraints and settled
    std::vector<double> displacement;  // per object, COM travel while settling
  };
  std::map<std::vector<int>, Entry> entries;
};

/// Builds the placement distribution for every unplaced object: already
/// placed objects keep their chosen models, the candidate object takes each
/// of its models in turn, everyone else stands in with their smallest model.
/// A staged scene that passes constraints is settled under gravity and the
/// candidate's displacement d maps to exp(-alpha_explore * d); one that fails
/// contributes 0.
ExplorationTable compute_exploration_probs(
    const std::vector<HypothesisSet>& sets, const RolloutState& state,
    const std::vector<VisibleSpace>& visible, const InferenceConfig& cfg,
    StagedSceneMemo* memo = nullptr);

/// One sampled joint scene plus the probability each object's model was
/// drawn with. A row whose mass is zero falls back to the object's smallest
/// model with q = 1.
struct RolloutResult {
  JointSceneModel joint;
  std::map<int, double> q;  // object_id -> draw probability at its stage
};

RolloutResult rollout(const std::vector<HypothesisSet>& sets,
                      const std::vector<VisibleSpace>& visible,
                      const InferenceConfig& cfg, Rng& rng,
                      StagedSceneMemo* memo = nullptr);

/// Per-object likelihood factors for one joint scene: build the bodies,
/// settle, optionally replay the recorded pushes, render after every step,
/// and compare depth against the matching observed frame. The product of the
/// factors is the joint likelihood. nullopt when the simulation diverges.
std::optional<std::map<int, double>> joint_likelihood_factors(
    const JointSceneModel& x, const SceneObservations& obs,
    const std::vector<PushAction>& actions, const InferenceConfig& cfg);

/// What one rollout adds to the posterior estimate:
/// object_id -> (model index, importance weight). Weight is
/// likelihood factor * prior / draw probability, or 0 when the joint scene
/// violates constraints or the simulation diverges.
struct RolloutContribution {
  std::map<int, std::pair<int, double>> weight;
};

RolloutContribution score_rollout(const std::vector<HypothesisSet>& sets,
                                  const JointSceneModel& x,
                                  const std::map<int, double>& q,
                                  const SceneObservations& obs,
                                  const std::vector<PushAction>& actions,
                                  const InferenceConfig& cfg);

/// Final per-object distributions over each object's model list.
struct PosteriorTable {
  std::map<int, std::vector<double>> prob;  // rows sum to 1
  std::map<int, double> ess;  // effective sample size of the weights
  int rollout_count = 0;
};

/// Running importance-weighted sums. add() uses compensated summation, so a
/// fixed fold order reproduces results to the last bit no matter how the
/// expensive scoring work was scheduled.
class PosteriorAccumulator {
 public:
  explicit PosteriorAccumulator(const std::vector<HypothesisSet>& sets);

  void add(const RolloutContribution& c);

  /// Normalizes each row. A row that never received weight falls back to the
  /// object's prior, the only information left when every sample scored 0.
  PosteriorTable finalize(const std::vector<HypothesisSet>& sets,
                          const PriorSpec& prior) const;

  double weight(int object_id, int j) const;  // raw accumulated sum
  int rollouts() const { return count_; }

 private:
  struct Row {
    std::vector<double> sum, comp;
    double w_sum = 0, w_comp = 0;    // per-rollout weights
    double w2_sum = 0, w2_comp = 0;  // their squares, for the sample size
  };
  std::map<int, Row> rows_;
  int count_ = 0;
};

/// Scores one rollout and folds it into the accumulator.
void score_and_update(const std::vector<HypothesisSet>& sets,
                      const JointSceneModel& x, const std::map<int, double>& q,
                      const SceneObservations& obs,
                      const std::vector<PushAction>& actions,
                      const InferenceConfig& cfg, PosteriorAccumulator& acc);

/// Estimates the per-object posterior over candidate models by repeated
/// rollout and importance-weighted scoring. Deterministic given seed and
/// budget; the cutoff only matters when the wall clock runs out first.
PosteriorTable infer(const std::vector<HypothesisSet>& sets,
                     const SceneObservations& obs,
                     const std::vector<PushAction>& actions,
                     const InferenceConfig& cfg);

/// Exact reference: enumerates every joint assignment, drops those violating
/// constraints, scores each survivor once with the same likelihood, and
/// marginalizes prior * likelihood per object. Throws TooLarge above 10000
/// combinations and NoValidModels when no assignment survives. ess is left
/// empty and rollout_count holds the number of scored assignments.
PosteriorTable exhaustive_posterior(const std::vector<HypothesisSet>& sets,
                                    const SceneObservations& obs,
                                    const std::vector<PushAction>& actions,
                                    const InferenceConfig& cfg);

/// Most probable model per object, near-ties resolved toward the smaller
/// volume. Returns the resolved joint scene with identity initial poses.
JointSceneModel select_map_models(const PosteriorTable& p,
                                  const std::vector<HypothesisSet>& sets,
                                  double support_z = 0.0);

}  // namespace ipr
