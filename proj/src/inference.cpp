#include "ipr/inference.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace ipr {
namespace {

// Keeps the volume scaling finite when every model has the same volume.
constexpr double kPriorEps = 1e-9;
// Posterior rows are compared for the best model within this slack; anything
// closer counts as a tie and the smaller volume wins.
constexpr double kTieEps = 1e-12;
// Settling stops once a staged body moved this far; exp(-alpha_explore * d)
// is below 2e-11 there, so the tail of the trajectory cannot matter.
constexpr double kExploreDisplacementCap = 0.5;
// Stream tag separating rollout draws from other users of the same seed.
constexpr uint64_t kRolloutTag = 0x726f6c6cULL;

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void kahan_add(double& sum, double& comp, double v) {
  double y = v - comp;
  double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

std::vector<int> minimum_indices(const std::vector<HypothesisSet>& sets) {
  std::vector<int> idx(sets.size(), 0);
  for (size_t k = 0; k < sets.size(); ++k)
    for (size_t j = 1; j < sets[k].models.size(); ++j)
      if (sets[k].models[j].volume < sets[k].models[idx[k]].volume)
        idx[k] = int(j);
  return idx;
}

JointSceneModel resolve(const std::vector<HypothesisSet>& sets,
                        const std::vector<int>& assign, double support_z) {
  JointSceneModel x;
  x.support_z = support_z;
  for (size_t k = 0; k < sets.size(); ++k) {
    x.chosen[sets[k].object_id] = assign[k];
    x.models.push_back(sets[k].models[assign[k]]);
    x.initial_poses[sets[k].object_id] = Pose{};
  }
  return x;
}

World build_world(const JointSceneModel& x, const InferenceConfig& cfg) {
  World w;
  w.support_z = x.support_z;
  for (const auto& m : x.models)
    w.bodies.push_back(
        make_dynamic_body(m.object_id, m.hull, cfg.density, cfg.friction));
  return w;
}

const StagedSceneMemo::Entry& staged_evaluation(
    std::vector<int> assign, const std::vector<HypothesisSet>& sets,
    const std::vector<VisibleSpace>& visible, const InferenceConfig& cfg,
    StagedSceneMemo& memo) {
  auto it = memo.entries.find(assign);
  if (it != memo.entries.end()) return it->second;
  StagedSceneMemo::Entry e;
  JointSceneModel x = resolve(sets, assign, cfg.support_z);
  e.valid = check_constraints(x, visible);
  if (e.valid) {
    World w = build_world(x, cfg);
    SettleOptions opt;
    opt.record_trace = false;
    opt.displacement_cap = kExploreDisplacementCap;
    try {
      e.displacement = settle(w, opt).displacement;
    } catch (const Diverged&) {
      e.valid = false;
      e.displacement.clear();
    }
  }
  return memo.entries.emplace(std::move(assign), std::move(e)).first->second;
}

double factor_or_one(const std::map<int, double>& factors, int object_id) {
  auto it = factors.find(object_id);
  return it == factors.end() ? 1.0 : it->second;
}

// Constraint verdict and likelihood factors for one complete assignment.
// Rollouts revisit the same assignments constantly, so infer caches these
// per worker; only q and the prior vary across rollouts that land on the
// same joint scene.
struct ScoreMemo {
  struct Entry {
    bool valid = false;
    std::optional<std::map<int, double>> factors;
  };
  std::map<std::vector<int>, Entry> entries;
};

const ScoreMemo::Entry& scored_evaluation(std::vector<int> assign,
                                          const std::vector<HypothesisSet>& sets,
                                          const SceneObservations& obs,
                                          const std::vector<PushAction>& actions,
                                          const InferenceConfig& cfg,
                                          ScoreMemo& memo) {
  auto it = memo.entries.find(assign);
  if (it != memo.entries.end()) return it->second;
  ScoreMemo::Entry e;
  JointSceneModel x = resolve(sets, assign, cfg.support_z);
  e.valid = check_constraints(x, obs.visible);
  if (e.valid) e.factors = joint_likelihood_factors(x, obs, actions, cfg);
  return memo.entries.emplace(std::move(assign), std::move(e)).first->second;
}

RolloutContribution weighted_contribution(
    const std::vector<HypothesisSet>& sets, const std::vector<int>& assign,
    const ScoreMemo::Entry& e, const std::map<int, double>& q,
    const std::vector<std::vector<double>>& priors) {
  RolloutContribution c;
  for (size_t k = 0; k < sets.size(); ++k)
    c.weight[sets[k].object_id] = {assign[k], 0.0};
  if (!e.valid || !e.factors) return c;
  for (size_t k = 0; k < sets.size(); ++k) {
    const int id = sets[k].object_id;
    const double qi = q.count(id) ? q.at(id) : 1.0;
    c.weight[id] = {assign[k], factor_or_one(*e.factors, id) *
                                   priors[k][assign[k]] / qi};
  }
  return c;
}

std::vector<int> assignment_of(const std::vector<HypothesisSet>& sets,
                               const JointSceneModel& x) {
  std::vector<int> assign(sets.size(), 0);
  for (size_t k = 0; k < sets.size(); ++k)
    assign[k] = x.chosen.at(sets[k].object_id);
  return assign;
}

int draw_index(const std::vector<double>& row, Rng& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    last_positive = int(j);
    cum += row[j];
    if (u < cum) return int(j);
  }
  return last_positive;  // rounding pushed the row sum just under u
}

}  // namespace

std::vector<double> model_priors(const HypothesisSet& set,
                                 const PriorSpec& prior) {
  const size_t m = set.models.size();
  std::vector<double> p(m, 0.0);
  if (m == 0) return p;
  if (prior.kind == PriorKind::Uniform) {
    std::fill(p.begin(), p.end(), 1.0 / double(m));
    return p;
  }
  double vol_min = set.models[0].volume, vol_max = set.models[0].volume;
  for (const auto& mod : set.models) {
    vol_min = std::min(vol_min, mod.volume);
    vol_max = std::max(vol_max, mod.volume);
  }
  const double span = vol_max - vol_min + kPriorEps;
  double total = 0.0;
  for (size_t j = 0; j < m; ++j) {
    p[j] = std::exp(-prior.beta * (set.models[j].volume - vol_min) / span);
    total += p[j];
  }
  for (auto& v : p) v /= total;
  return p;
}

ExplorationTable compute_exploration_probs(
    const std::vector<HypothesisSet>& sets, const RolloutState& state,
    const std::vector<VisibleSpace>& visible, const InferenceConfig& cfg,
    StagedSceneMemo* memo) {
  StagedSceneMemo local;
  StagedSceneMemo& mem = memo ? *memo : local;
  const std::vector<int> min_idx = minimum_indices(sets);

  std::vector<int> assign(sets.size());
  for (size_t k = 0; k < sets.size(); ++k)
    assign[k] = state.placed[k] ? state.model[k] : min_idx[k];

  ExplorationTable table;
  double max_mass = 0.0;
  for (size_t i = 0; i < sets.size(); ++i) {
    if (state.placed[i]) continue;
    std::vector<double> row(sets[i].models.size(), 0.0);
    for (size_t j = 0; j < row.size(); ++j) {
      std::vector<int> staged = assign;
      staged[i] = int(j);
      const auto& e = staged_evaluation(std::move(staged), sets, visible, cfg, mem);
      if (e.valid)
        row[j] = std::exp(-cfg.alpha_explore * e.displacement[i]);
    }
    double mass = 0.0;
    for (double v : row) mass += v;
    // Later rows win ties, including the all-zero case where every unplaced
    // object matches mass 0 and the last one gets the fallback placement.
    if (mass >= max_mass) {
      max_mass = mass;
      table.selected_object = sets[i].object_id;
    }
    if (mass > 0.0)
      for (auto& v : row) v /= mass;
    table.mass[sets[i].object_id] = mass;
    table.prob[sets[i].object_id] = std::move(row);
  }
  return table;
}

RolloutResult rollout(const std::vector<HypothesisSet>& sets,
                      const std::vector<VisibleSpace>& visible,
                      const InferenceConfig& cfg, Rng& rng,
                      StagedSceneMemo* memo) {
  const int n = int(sets.size());
  if (n == 0) throw InvalidPartial("rollout needs at least one object");
  const std::vector<int> min_idx = minimum_indices(sets);

  RolloutState st;
  st.placed.assign(n, false);
  st.model.assign(n, -1);

  RolloutResult r;
  for (st.stage = 1; st.stage <= n; ++st.stage) {
    ExplorationTable t =
        compute_exploration_probs(sets, st, visible, cfg, memo);
    int pos = -1;
    for (int k = 0; k < n; ++k)
      if (sets[k].object_id == t.selected_object) pos = k;
    const auto& row = t.prob.at(t.selected_object);
    int j;
    double q;
    if (t.mass.at(t.selected_object) > 0.0) {
      j = draw_index(row, rng);
      q = row[j];
    } else {
      // Nothing fits for this object at this stage. The smallest model is
      // the least committal stand-in and the draw carries no weight surprise.
      j = min_idx[pos];
      q = 1.0;
    }
    st.placed[pos] = true;
    st.model[pos] = j;
    r.q[t.selected_object] = q;
  }
  r.joint = resolve(sets, st.model, cfg.support_z);
  return r;
}

std::optional<std::map<int, double>> joint_likelihood_factors(
    const JointSceneModel& x, const SceneObservations& obs,
    const std::vector<PushAction>& actions, const InferenceConfig& cfg) {
  if (obs.frames.empty()) return std::map<int, double>{};
  World w = build_world(x, cfg);
  SettleOptions opt;
  opt.record_trace = false;
  std::vector<std::map<int, double>> dists;
  try {
    settle(w, opt);
    dists.push_back(
        observation_distance(obs.frames[0], render_depth(w, obs.frames[0].camera)));
    if (cfg.simulate_actions && !actions.empty() && obs.frames.size() > 1) {
      ReplayResult rr = replay_actions(w, actions, opt);
      const size_t frames = std::min(actions.size(), obs.frames.size() - 1);
      for (size_t t = 0; t < frames; ++t) {
        for (size_t b = 0; b < w.bodies.size(); ++b)
          w.bodies[b].pose = rr.after_action[t][b];
        dists.push_back(observation_distance(obs.frames[t + 1],
                                             render_depth(w, obs.frames[t + 1].camera)));
      }
    }
  } catch (const Diverged&) {
    return std::nullopt;
  }
  return object_likelihood_factors(dists, cfg.alpha_likelihood);
}

RolloutContribution score_rollout(const std::vector<HypothesisSet>& sets,
                                  const JointSceneModel& x,
                                  const std::map<int, double>& q,
                                  const SceneObservations& obs,
                                  const std::vector<PushAction>& actions,
                                  const InferenceConfig& cfg) {
  // Fallback placements can leave the final scene invalid; such samples keep
  // weight 0 for every object, so pruned shapes never gain posterior mass.
  const std::vector<int> assign = assignment_of(sets, x);
  ScoreMemo memo;
  const auto& e = scored_evaluation(assign, sets, obs, actions, cfg, memo);
  std::vector<std::vector<double>> priors;
  for (const auto& s : sets) priors.push_back(model_priors(s, cfg.prior));
  return weighted_contribution(sets, assign, e, q, priors);
}

PosteriorAccumulator::PosteriorAccumulator(
    const std::vector<HypothesisSet>& sets) {
  for (const auto& set : sets) {
    Row r;
    r.sum.assign(set.models.size(), 0.0);
    r.comp.assign(set.models.size(), 0.0);
    rows_.emplace(set.object_id, std::move(r));
  }
}

void PosteriorAccumulator::add(const RolloutContribution& c) {
  for (const auto& [id, jw] : c.weight) {
    Row& r = rows_.at(id);
    kahan_add(r.sum[jw.first], r.comp[jw.first], jw.second);
    kahan_add(r.w_sum, r.w_comp, jw.second);
    kahan_add(r.w2_sum, r.w2_comp, jw.second * jw.second);
  }
  ++count_;
}

PosteriorTable PosteriorAccumulator::finalize(
    const std::vector<HypothesisSet>& sets, const PriorSpec& prior) const {
  PosteriorTable p;
  p.rollout_count = count_;
  for (const auto& set : sets) {
    const Row& r = rows_.at(set.object_id);
    double mass = 0.0;
    for (double v : r.sum) mass += v;
    std::vector<double> row;
    if (mass > 0.0) {
      row = r.sum;
      for (auto& v : row) v /= mass;
    } else {
      row = model_priors(set, prior);
    }
    p.prob[set.object_id] = std::move(row);
    p.ess[set.object_id] =
        r.w2_sum > 0.0 ? r.w_sum * r.w_sum / r.w2_sum : 0.0;
  }
  return p;
}

double PosteriorAccumulator::weight(int object_id, int j) const {
  return rows_.at(object_id).sum.at(j);
}

void score_and_update(const std::vector<HypothesisSet>& sets,
                      const JointSceneModel& x, const std::map<int, double>& q,
                      const SceneObservations& obs,
                      const std::vector<PushAction>& actions,
                      const InferenceConfig& cfg, PosteriorAccumulator& acc) {
  acc.add(score_rollout(sets, x, q, obs, actions, cfg));
}

PosteriorTable infer(const std::vector<HypothesisSet>& sets,
                     const SceneObservations& obs,
                     const std::vector<PushAction>& actions,
                     const InferenceConfig& cfg) {
  if (sets.empty()) throw InvalidPartial("infer needs at least one object");
  for (const auto& s : sets)
    if (s.models.empty())
      throw NoValidModels("object " + std::to_string(s.object_id) +
                          " has no candidate models");
  if (obs.visible.empty())
    throw InvalidPartial("infer needs at least one visible-space frame");

  const int total = std::max(cfg.rollouts, 0);
  const double deadline = now_s() + cfg.timeout_s;
  std::vector<std::optional<RolloutContribution>> slots(total);

  std::vector<std::vector<double>> priors;
  for (const auto& s : sets) priors.push_back(model_priors(s, cfg.prior));

  auto worker = [&](std::atomic<int>& next) {
    StagedSceneMemo staged;
    ScoreMemo scored;
    for (int r = next.fetch_add(1); r < total; r = next.fetch_add(1)) {
      if (now_s() > deadline) break;
      Rng rng = Rng::stream(cfg.seed, {kRolloutTag, uint64_t(r)});
      RolloutResult ro = rollout(sets, obs.visible, cfg, rng, &staged);
      const std::vector<int> assign = assignment_of(sets, ro.joint);
      const auto& e =
          scored_evaluation(assign, sets, obs, actions, cfg, scored);
      slots[r] = weighted_contribution(sets, assign, e, ro.q, priors);
    }
  };

  std::atomic<int> next{0};
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker(next);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back([&] { worker(next); });
    for (auto& t : pool) t.join();
  }

  PosteriorAccumulator acc(sets);
  for (int r = 0; r < total; ++r)
    if (slots[r]) acc.add(*slots[r]);
  return acc.finalize(sets, cfg.prior);
}

PosteriorTable exhaustive_posterior(const std::vector<HypothesisSet>& sets,
                                    const SceneObservations& obs,
                                    const std::vector<PushAction>& actions,
                                    const InferenceConfig& cfg) {
  if (sets.empty())
    throw InvalidPartial("exhaustive_posterior needs at least one object");
  if (obs.visible.empty())
    throw InvalidPartial("exhaustive_posterior needs a visible-space frame");
  double combos = 1.0;
  for (const auto& s : sets) combos *= double(s.models.size());
  if (combos > 10000.0)
    throw TooLarge("joint model space has " + std::to_string(size_t(combos)) +
                   " combinations");
  if (combos < 1.0)
    throw NoValidModels("an object has no candidate models");

  std::vector<std::vector<double>> priors;
  for (const auto& s : sets) priors.push_back(model_priors(s, cfg.prior));

  std::map<int, std::vector<double>> raw;
  for (const auto& s : sets)
    raw[s.object_id].assign(s.models.size(), 0.0);

  std::vector<int> assign(sets.size(), 0);
  int scored = 0;
  bool done = false;
  while (!done) {
    JointSceneModel x = resolve(sets, assign, cfg.support_z);
    if (check_constraints(x, obs.visible)) {
      auto factors = joint_likelihood_factors(x, obs, actions, cfg);
      if (factors) {
        double score = 1.0;
        for (size_t k = 0; k < sets.size(); ++k)
          score *= priors[k][assign[k]] *
                   factor_or_one(*factors, sets[k].object_id);
        for (size_t k = 0; k < sets.size(); ++k)
          raw[sets[k].object_id][assign[k]] += score;
        ++scored;
      }
    }
    done = true;
    for (size_t k = 0; k < sets.size(); ++k) {
      if (++assign[k] < int(sets[k].models.size())) {
        done = false;
        break;
      }
      assign[k] = 0;
    }
  }
  if (scored == 0)
    throw NoValidModels("every joint assignment violates constraints");

  PosteriorTable p;
  p.rollout_count = scored;
  for (const auto& s : sets) {
    auto& row = raw[s.object_id];
    double mass = 0.0;
    for (double v : row) mass += v;
    if (mass > 0.0)
      for (auto& v : row) v /= mass;
    else
      row = model_priors(s, cfg.prior);
    p.prob[s.object_id] = std::move(row);
  }
  return p;
}

JointSceneModel select_map_models(const PosteriorTable& p,
                                  const std::vector<HypothesisSet>& sets,
                                  double support_z) {
  std::vector<int> assign(sets.size(), 0);
  for (size_t k = 0; k < sets.size(); ++k) {
    const auto& row = p.prob.at(sets[k].object_id);
    int best = 0;
    for (size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best] + kTieEps) {
        best = int(j);
      } else if (row[j] > row[best] - kTieEps &&
                 sets[k].models[j].volume < sets[k].models[best].volume) {
        best = int(j);
      }
    }
    assign[k] = best;
  }
  return resolve(sets, assign, support_z);
}

}  // namespace ipr
