#pragma once

#include "xicm/dynamics.hpp"
#include "xicm/pipeline.hpp"
#include "xicm/toy_sim.hpp"

namespace xicm::testing {

/// Core seen tasks with a few demonstrations each and a briefly trained
/// predictor. Built once per process.
inline const Pipeline& small_pipeline() {
  static const Pipeline p = [] {
    auto ds = generate_seen_dataset(resolve_task_names("seen"), 4, 7);
    PredictorConfig cfg;
    cfg.epochs = 40;
    auto predictor = train_dynamics_predictor(ds, cfg);
    auto pool = embed_dataset(ds, predictor, FeatureMode::kVisOutLang);
    return Pipeline(std::move(ds), std::move(predictor), std::move(pool));
  }();
  return p;
}

}  // namespace xicm::testing
