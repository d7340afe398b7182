#include "xicm/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>

#include "xicm/errors.hpp"

namespace xicm {

std::string to_string(SelectionMode mode) { return mode == SelectionMode::kDynamics ? "dynamics" : "random"; }

SelectionMode parse_selection_mode(std::string_view name) {
  if (name == "dynamics") return SelectionMode::kDynamics;
  if (name == "random") return SelectionMode::kRandom;
  throw ConfigError("unknown selection mode '" + std::string(name) + "' (expected dynamics or random)");
}

std::string oracle_response(const TaskSpec& task, const SceneState& scene, const SimParams& params,
                            int gripper_open_value) {
  std::string out;
  for (const auto& pose : task.oracle_key_poses(scene, params)) {
    QuantizedPose q = quantize_pose(pose, params.workspace);
    if (gripper_open_value == 0) q.gripper = 1 - q.gripper;
    if (!out.empty()) out += '\n';
    out += textualize_action(q);
  }
  return out;
}

Pipeline::Pipeline(Dataset dataset, DynamicsPredictor predictor, FeatureTable pool, SimParams params,
                   double velocity_epsilon)
    : dataset_(std::move(dataset)), predictor_(std::move(predictor)), pool_(std::move(pool)), params_(params) {
  if (dataset_.demos.empty()) throw Error("pipeline needs at least one demonstration");
  params_.workspace = dataset_.workspace;
  params_.grasp_radius = dataset_.extras.grasp_radius;
  params_.region_tolerance = dataset_.extras.region_tolerance;
  pool_.check();

  // Align the pool with dataset order; imported tables may be ordered differently.
  std::map<std::string_view, std::size_t> by_id;
  for (std::size_t i = 0; i < pool_.features.size(); ++i) by_id.emplace(pool_.features[i].demo_id, i);
  std::vector<DynamicsFeature> aligned;
  aligned.reserve(dataset_.demos.size());
  for (const auto& d : dataset_.demos) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw Error("feature table has no entry for demonstration '" + d.id + "'");
    aligned.push_back(pool_.features[it->second]);
  }
  pool_.features = std::move(aligned);

  keyframes_.reserve(dataset_.demos.size());
  for (const auto& d : dataset_.demos) keyframes_.push_back(extract_keyframes(d, velocity_epsilon));
}

DynamicsFeature Pipeline::query_feature(const Observation& first, std::string_view language) const {
  DynamicsFeature f = dynamics_feature("query", first, language, predictor_, pool_.mode);
  if (f.vis.size() != pool_.vis_dim || f.lang.size() != pool_.lang_dim)
    throw DimensionError("query feature " + std::to_string(f.vis.size()) + "+" + std::to_string(f.lang.size()) +
                         " does not match pool " + std::to_string(pool_.vis_dim) + "+" +
                         std::to_string(pool_.lang_dim));
  return f;
}

SelectionResult Pipeline::select(const DynamicsFeature& query, const EpisodeOptions& opts,
                                 std::uint64_t episode_seed) const {
  if (opts.selection == SelectionMode::kDynamics) return select_top_k(query, pool_.features, opts.k);

  const std::size_t n = pool_.features.size();
  if (opts.k < 1 || opts.k > n)
    throw RangeError("K must lie in [1, " + std::to_string(n) + "], got " + std::to_string(opts.k));
  Rng rng(derive_seed(episode_seed, "random-selection", 0));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < opts.k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(opts.k);
  std::vector<std::pair<double, std::size_t>> scored;
  for (auto i : idx) scored.emplace_back(cosine_similarity(query, pool_.features[i]), i);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  SelectionResult r;
  for (const auto& [s, i] : scored) {
    r.indices.push_back(i);
    r.scores.push_back(s);
  }
  return r;
}

PromptBundle Pipeline::build(const SelectionResult& selection, std::string_view language,
                             const std::vector<ObjectRecord>& objects) const {
  std::vector<SelectedDemo> selected;
  for (std::size_t j = 0; j < selection.indices.size(); ++j) {
    const auto i = selection.indices[j];
    selected.push_back({&dataset_.demos[i], keyframes_[i], selection.scores[j]});
  }
  return build_prompt(selected, language, objects, dataset_.workspace, dataset_.extras.gripper_open_value);
}

EpisodeTrace Pipeline::run_episode(const TaskSpec& task, std::uint64_t episode_seed, const LlmGateway& gateway,
                                   const EpisodeOptions& opts, const EpisodeResponder& responder) const {
  EpisodeTrace tr;
  tr.scene = task.sample_scene(episode_seed, params_);
  Observation first;
  first.rgb = render_scene(tr.scene, params_);
  first.joint_velocities.assign(7, 0.0);

  tr.query_feature = query_feature(first, task.language);
  tr.selection = select(tr.query_feature, opts, episode_seed);
  tr.prompt = build(tr.selection, task.language, tr.scene.object_records());

  const int polarity = dataset_.extras.gripper_open_value;
  const SceneState initial = tr.scene;
  ScriptedResponder scripted = [&](const PromptBundle& p) {
    return responder ? responder(task, initial, p) : oracle_response(task, initial, params_, polarity);
  };
  try {
    tr.completion = gateway.complete(tr.prompt, scripted);
  } catch (const GatewayError& e) {
    std::throw_with_nested(GatewayError(std::string(e.kind()) + " in task '" + task.name + "' episode seed " +
                                        std::to_string(episode_seed) + ": " + e.what()));
  }

  tr.result.task = task.name;
  tr.result.episode_seed = episode_seed;
  try {
    tr.prediction = parse_prediction(tr.completion->response_text, dataset_.workspace.grid_resolution);
  } catch (const NoActionsFound&) {
    tr.result.failure_reason = FailureReason::kParseFailure;
    return tr;
  }
  RolloutResult r = execute_actions(task, tr.scene, tr.prediction->actions, params_, polarity);
  r.episode_seed = episode_seed;
  tr.result = r;
  return tr;
}

}  // namespace xicm
