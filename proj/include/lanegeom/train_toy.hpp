#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lanegeom/assign.hpp"
#include "lanegeom/evaluate.hpp"
#include "lanegeom/losses.hpp"
#include "lanegeom/refine.hpp"
#include "lanegeom/synthio.hpp"

namespace lanegeom {

struct TrainConfig {
  double step_size = 0.05;
  double momentum = 0.9;
  int iterations = 1000;
  int batch_scenes = 10;
  std::uint64_t seed = 42;
  LossWeights loss_weights;
  bool train_fidelity_head = true;
  int hidden_channels = 8;
};

// Linear-plus-sigmoid fidelity estimator over the channel-pooled feature.
struct FidelityHead {
  std::vector<double> weights;
  double bias = 0.0;
};

struct TrainState {
  AglrParams params;
  FidelityHead head;
  AglrParams velocity;
  FidelityHead head_velocity;
};

TrainState init_train_state(int feature_channels, const TrainConfig& cfg);

struct StepResult {
  double total = 0.0;
  LossTerms terms;
};

// One momentum gradient-descent step on the batch; returns the pre-update
// loss. Gradients flow through the refinement block via the regression and
// overlap terms and through the fidelity head via the fidelity term.
StepResult train_step(TrainState& state, const std::vector<Scene>& batch, const TrainConfig& cfg,
                      const SampleGrid& grid, const WidthModel& w, const AssignConfig& assign_cfg);

// Deterministic training loop cycling minibatches over `scenes`.
std::vector<StepResult> run_training(TrainState& state, const std::vector<Scene>& scenes,
                                     const TrainConfig& cfg, const SampleGrid& grid,
                                     const WidthModel& w, const AssignConfig& assign_cfg);

// Mean (1 - unsigned overlap) between refined positives and their matched
// ground truths; the training-progress metric.
double mean_iou_gap(const TrainState& state, const std::vector<Scene>& scenes,
                    const SampleGrid& grid, const WidthModel& w, const AssignConfig& assign_cfg,
                    bool apply_refinement);

struct AblationToggles {
  bool lcc = false;   // score by fused reliability instead of raw confidence
  bool aglr = false;  // apply gated refinement offsets
};

// Runs the full pipeline on each scene under one toggle combination and
// scores it against the scene ground truths.
EvalReport run_ablation_case(const std::vector<Scene>& scenes, const TrainState& state,
                             const AblationToggles& toggles, const SampleGrid& grid,
                             const WidthModel& w, const PostprocessConfig& post_cfg,
                             const CriConfig& cri_cfg, const ModulationConfig& mod_cfg,
                             const EvalConfig& eval_cfg);

// All four toggle combinations, keyed baseline / lcc / aglr / lcc_aglr.
std::map<std::string, EvalReport> ablation_run(const std::vector<Scene>& scenes,
                                               const TrainState& state, const SampleGrid& grid,
                                               const WidthModel& w,
                                               const PostprocessConfig& post_cfg,
                                               const CriConfig& cri_cfg,
                                               const ModulationConfig& mod_cfg,
                                               const EvalConfig& eval_cfg);

}  // namespace lanegeom
