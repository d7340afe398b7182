#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xicm/dynamics.hpp"
#include "xicm/keyframes.hpp"
#include "xicm/llm_gateway.hpp"
#include "xicm/prompt.hpp"
#include "xicm/toy_sim.hpp"

namespace xicm {

enum class SelectionMode { kDynamics, kRandom };
std::string to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view name);

/// Builds the scripted reply for one episode. The default replays the task's
/// oracle key poses for the sampled scene.
using EpisodeResponder =
    std::function<std::string(const TaskSpec& task, const SceneState& scene, const PromptBundle& prompt)>;

/// Textualized oracle key-actions of the task in this scene.
std::string oracle_response(const TaskSpec& task, const SceneState& scene, const SimParams& params,
                            int gripper_open_value = 1);

struct EpisodeOptions {
  std::size_t k = 18;
  SelectionMode selection = SelectionMode::kDynamics;
};

/// Everything one episode produced, for inspection and the CLI.
struct EpisodeTrace {
  SceneState scene;
  DynamicsFeature query_feature;
  SelectionResult selection;
  PromptBundle prompt;
  std::optional<CompletionRecord> completion;
  std::optional<ActionPrediction> prediction;
  RolloutResult result;
};

/// Seen demonstrations with their key-actions and pooled features, ready to
/// answer queries. Immutable after construction and safe to share between
/// threads.
class Pipeline {
 public:
  Pipeline(Dataset dataset, DynamicsPredictor predictor, FeatureTable pool, SimParams params = {},
           double velocity_epsilon = kDefaultVelocityEpsilon);

  const Dataset& dataset() const { return dataset_; }
  const DynamicsPredictor& predictor() const { return predictor_; }
  const FeatureTable& pool() const { return pool_; }
  const SimParams& params() const { return params_; }
  const std::vector<KeyActionSequence>& keyframes() const { return keyframes_; }
  FeatureMode mode() const { return pool_.mode; }

  /// Query feature from the first observation and the instruction.
  DynamicsFeature query_feature(const Observation& first, std::string_view language) const;

  /// Top-K by similarity, or K uniformly random demonstrations (scored the
  /// same way so the prompt order stays similarity-descending).
  SelectionResult select(const DynamicsFeature& query, const EpisodeOptions& opts, std::uint64_t episode_seed) const;

  PromptBundle build(const SelectionResult& selection, std::string_view language,
                     const std::vector<ObjectRecord>& objects) const;

  /// Scene sampling through execution for one seeded episode. Gateway errors
  /// propagate as GatewayError carrying the task and seed.
  EpisodeTrace run_episode(const TaskSpec& task, std::uint64_t episode_seed, const LlmGateway& gateway,
                           const EpisodeOptions& opts, const EpisodeResponder& responder = {}) const;

 private:
  Dataset dataset_;
  DynamicsPredictor predictor_;
  FeatureTable pool_;
  SimParams params_;
  std::vector<KeyActionSequence> keyframes_;
};

}  // namespace xicm
