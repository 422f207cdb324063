#include "lanegeom/train_toy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lanegeom/postprocess.hpp"

namespace lanegeom {

namespace {

std::vector<double> pooled_feature(const FeatureMap& f) {
  std::vector<double> pooled(static_cast<std::size_t>(f.channels), 0.0);
  for (int c = 0; c < f.channels; ++c) {
    double sum = 0.0;
    for (int s = 0; s < f.samples; ++s) sum += f.at(c, s);
    pooled[static_cast<std::size_t>(c)] = sum / static_cast<double>(f.samples);
  }
  return pooled;
}

void axpy(double alpha, const Conv1dParams& g, Conv1dParams& acc) {
  for (std::size_t i = 0; i < acc.weights.size(); ++i) acc.weights[i] += alpha * g.weights[i];
  for (std::size_t i = 0; i < acc.bias.size(); ++i) acc.bias[i] += alpha * g.bias[i];
}

void axpy(double alpha, const AglrParams& g, AglrParams& acc) {
  axpy(alpha, g.conv1, acc.conv1);
  axpy(alpha, g.conv2, acc.conv2);
  axpy(alpha, g.residual, acc.residual);
  axpy(alpha, g.offset_head, acc.offset_head);
  axpy(alpha, g.gate_head, acc.gate_head);
}

void scale(double alpha, AglrParams& p) {
  for (Conv1dParams* conv : {&p.conv1, &p.conv2, &p.residual, &p.offset_head, &p.gate_head}) {
    for (double& w : conv->weights) w *= alpha;
    for (double& b : conv->bias) b *= alpha;
  }
}

struct SceneAssignment {
  IouMatrixResult ious;
  AssignmentResult assignment;
};

SceneAssignment assign_scene(const Scene& scene, const SampleGrid& grid, const WidthModel& w,
                             const AssignConfig& cfg) {
  SceneAssignment out;
  out.ious = iou_matrix(scene.priors, scene.gts, w, grid);
  std::vector<double> cls(scene.priors.size());
  for (std::size_t j = 0; j < scene.priors.size(); ++j) cls[j] = scene.priors[j].cls_confidence;
  const Matrix cost = cost_matrix(out.ious.values, cls, cfg);
  out.assignment = dynamic_assign(cost, out.ious.values, cfg);
  return out;
}

}  // namespace

TrainState init_train_state(int feature_channels, const TrainConfig& cfg) {
  TrainState state;
  state.params = random_aglr_params(feature_channels, cfg.hidden_channels, cfg.seed, 0.05, -2.0);
  state.velocity = make_aglr_params(feature_channels, cfg.hidden_channels, 0.0);
  state.velocity.gate_head.bias[0] = 0.0;
  state.head.weights.assign(static_cast<std::size_t>(feature_channels), 0.0);
  state.head.bias = 0.0;
  state.head_velocity.weights.assign(static_cast<std::size_t>(feature_channels), 0.0);
  state.head_velocity.bias = 0.0;
  return state;
}

StepResult train_step(TrainState& state, const std::vector<Scene>& batch, const TrainConfig& cfg,
                      const SampleGrid& grid, const WidthModel& w,
                      const AssignConfig& assign_cfg) {
  if (batch.empty()) {
    throw std::invalid_argument("train_step: empty batch");
  }
  const int n_rows = grid.n_points;
  const int channels = state.params.conv1.in_channels;

  std::vector<SceneAssignment> assignments;
  assignments.reserve(batch.size());
  int scenes_with_positives = 0;
  for (const Scene& scene : batch) {
    assignments.push_back(assign_scene(scene, grid, w, assign_cfg));
    if (!assignments.back().assignment.positives.empty()) ++scenes_with_positives;
  }

  AglrParams grad = make_aglr_params(channels, cfg.hidden_channels, 0.0);
  grad.gate_head.bias[0] = 0.0;
  std::vector<double> head_grad(static_cast<std::size_t>(channels), 0.0);
  double head_bias_grad = 0.0;

  StepResult result;
  const double scene_norm = 1.0 / static_cast<double>(batch.size());
  const double pos_scene_norm =
      scenes_with_positives > 0 ? 1.0 / static_cast<double>(scenes_with_positives) : 0.0;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Scene& scene = batch[s];
    const AssignmentResult& assign = assignments[s].assignment;

    double scene_reg = 0.0, scene_iou = 0.0;
    if (!assign.positives.empty()) {
      const double inv_m = 1.0 / static_cast<double>(assign.positives.size());
      for (int j : assign.positives) {
        const LanePrior& prior = scene.priors[static_cast<std::size_t>(j)];
        const Lane& gt = scene.gts[static_cast<std::size_t>(
            assign.matched_gt[static_cast<std::size_t>(j)])];

        AglrOutput out = aglr_forward(scene.features[static_cast<std::size_t>(j)], state.params,
                                      n_rows);
        std::vector<double> refined = prior.xs;
        for (int r = 0; r < n_rows; ++r) refined[static_cast<std::size_t>(r)] += out.resampled[static_cast<std::size_t>(r)];

        const LaneSpan pred_span{std::span<const double>(refined), prior_first_row(prior, grid),
                                 prior_row_count(prior, grid)};
        const LaneSpan gt_span = span_of(gt);

        std::vector<double> grad_refined(static_cast<std::size_t>(n_rows), 0.0);

        // Regression on the rows both lanes cover.
        const int lo = std::max(pred_span.first, gt_span.first);
        const int hi = std::min(pred_span.first + pred_span.count, gt_span.first + gt_span.count);
        if (hi - lo >= 1) {
          std::vector<double> pred_shared, gt_shared;
          for (int r = lo; r < hi; ++r) {
            pred_shared.push_back(refined[static_cast<std::size_t>(r)]);
            gt_shared.push_back(gt.xs[static_cast<std::size_t>(r)]);
          }
          scene_reg += smooth_l1(pred_shared, gt_shared) * inv_m;
          const std::vector<double> g = smooth_l1_grad(pred_shared, gt_shared);
          const double coeff = cfg.loss_weights.reg * pos_scene_norm * inv_m;
          for (int r = lo; r < hi; ++r) {
            grad_refined[static_cast<std::size_t>(r)] += coeff * g[static_cast<std::size_t>(r - lo)];
          }
        }

        const IouLossResult iou = iou_loss(pred_span, gt_span, w, grid);
        scene_iou += iou.loss * inv_m;
        const double iou_coeff = cfg.loss_weights.iou * pos_scene_norm * inv_m;
        for (int r = 0; r < n_rows; ++r) {
          grad_refined[static_cast<std::size_t>(r)] += iou_coeff * iou.grad[static_cast<std::size_t>(r)];
        }

        const AglrGradients grads = aglr_backward(out, grad_refined);
        axpy(1.0, grads.params, grad);
      }
    }
    result.terms.reg += scene_reg * pos_scene_norm;
    result.terms.iou += scene_iou * pos_scene_norm;

    // Classification term: fixed synthetic confidences, value only.
    double scene_cls = 0.0;
    for (std::size_t j = 0; j < scene.priors.size(); ++j) {
      scene_cls += bce(scene.priors[j].cls_confidence,
                       static_cast<double>(assign.labels[j]));
    }
    result.terms.cls += scene_cls / static_cast<double>(scene.priors.size()) * scene_norm;

    // Fidelity term.
    std::vector<double> q_hat(scene.priors.size());
    std::vector<std::vector<double>> pooled(scene.priors.size());
    for (std::size_t j = 0; j < scene.priors.size(); ++j) {
      if (cfg.train_fidelity_head) {
        pooled[j] = pooled_feature(scene.features[j]);
        q_hat[j] = linear_head(pooled[j], state.head.weights, state.head.bias,
                               Activation::sigmoid);
      } else {
        q_hat[j] = scene.priors[j].fidelity;
      }
    }
    result.terms.fid += fidelity_loss(q_hat, assign.soft_labels, assign.positives,
                                      assign.negatives) *
                        scene_norm;
    if (cfg.train_fidelity_head) {
      const std::vector<double> g = fidelity_loss_grad(q_hat, assign.soft_labels,
                                                       assign.positives, assign.negatives);
      const double coeff = cfg.loss_weights.fid * scene_norm;
      for (std::size_t j = 0; j < scene.priors.size(); ++j) {
        if (g[j] == 0.0) continue;
        const double dz = coeff * g[j] * q_hat[j] * (1.0 - q_hat[j]);
        for (int c = 0; c < channels; ++c) {
          head_grad[static_cast<std::size_t>(c)] += dz * pooled[j][static_cast<std::size_t>(c)];
        }
        head_bias_grad += dz;
      }
    }
  }

  result.total = total_loss(result.terms, cfg.loss_weights);
  if (!std::isfinite(result.total)) {
    throw std::runtime_error("train_step: non-finite loss");
  }

  // Momentum update.
  scale(cfg.momentum, state.velocity);
  axpy(1.0, grad, state.velocity);
  axpy(-cfg.step_size, state.velocity, state.params);
  if (cfg.train_fidelity_head) {
    for (std::size_t c = 0; c < head_grad.size(); ++c) {
      state.head_velocity.weights[c] =
          cfg.momentum * state.head_velocity.weights[c] + head_grad[c];
      state.head.weights[c] -= cfg.step_size * state.head_velocity.weights[c];
    }
    state.head_velocity.bias = cfg.momentum * state.head_velocity.bias + head_bias_grad;
    state.head.bias -= cfg.step_size * state.head_velocity.bias;
  }
  return result;
}

std::vector<StepResult> run_training(TrainState& state, const std::vector<Scene>& scenes,
                                     const TrainConfig& cfg, const SampleGrid& grid,
                                     const WidthModel& w, const AssignConfig& assign_cfg) {
  if (scenes.empty() || cfg.iterations < 1) {
    throw std::invalid_argument("run_training: need scenes and at least one iteration");
  }
  const int batch_size = std::clamp(cfg.batch_scenes, 1, static_cast<int>(scenes.size()));
  std::vector<StepResult> log;
  log.reserve(static_cast<std::size_t>(cfg.iterations));
  std::size_t cursor = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Scene> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
      batch.push_back(scenes[cursor]);
      cursor = (cursor + 1) % scenes.size();
    }
    log.push_back(train_step(state, batch, cfg, grid, w, assign_cfg));
  }
  return log;
}

double mean_iou_gap(const TrainState& state, const std::vector<Scene>& scenes,
                    const SampleGrid& grid, const WidthModel& w, const AssignConfig& assign_cfg,
                    bool apply_refinement) {
  double gap = 0.0;
  long count = 0;
  for (const Scene& scene : scenes) {
    const SceneAssignment sa = assign_scene(scene, grid, w, assign_cfg);
    for (int j : sa.assignment.positives) {
      const LanePrior& prior = scene.priors[static_cast<std::size_t>(j)];
      const Lane& gt =
          scene.gts[static_cast<std::size_t>(sa.assignment.matched_gt[static_cast<std::size_t>(j)])];
      std::vector<double> xs = prior.xs;
      if (apply_refinement) {
        const AglrOutput out =
            aglr_forward(scene.features[static_cast<std::size_t>(j)], state.params, grid.n_points);
        for (int r = 0; r < grid.n_points; ++r) {
          xs[static_cast<std::size_t>(r)] += out.resampled[static_cast<std::size_t>(r)];
        }
      }
      const LaneSpan pred{std::span<const double>(xs), prior_first_row(prior, grid),
                          prior_row_count(prior, grid)};
      gap += 1.0 - std::clamp(lane_iou(pred, span_of(gt), w, IouMode::unsigned_clamped, grid),
                              0.0, 1.0);
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("mean_iou_gap: no positive candidates in the scene set");
  }
  return gap / static_cast<double>(count);
}

EvalReport run_ablation_case(const std::vector<Scene>& scenes, const TrainState& state,
                             const AblationToggles& toggles, const SampleGrid& grid,
                             const WidthModel& w, const PostprocessConfig& post_cfg,
                             const CriConfig& cri_cfg, const ModulationConfig& mod_cfg,
                             const EvalConfig& eval_cfg) {
  PostprocessConfig cfg = post_cfg;
  cfg.score_mode = toggles.lcc ? ScoreMode::cri : ScoreMode::cls_only;
  // Without the calibration branch there is no fidelity estimate to drive the
  // focal modulation, so offsets are applied unmodulated.
  ModulationConfig mod = toggles.lcc ? mod_cfg : ModulationConfig{0.0};

  std::vector<std::vector<Polyline>> preds(scenes.size());
  std::vector<std::vector<Polyline>> gts(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene& scene = scenes[s];
    std::vector<std::vector<double>> offsets;
    if (toggles.aglr) {
      offsets.reserve(scene.priors.size());
      for (std::size_t j = 0; j < scene.priors.size(); ++j) {
        offsets.push_back(
            aglr_forward(scene.features[j], state.params, grid.n_points).resampled);
      }
    }
    const std::vector<Detection> detections =
        run_pipeline(scene.priors, offsets, grid, w, cfg, cri_cfg, mod);
    for (const Detection& d : detections) preds[s].push_back(d.points);
    for (const Lane& gt : scene.gts) {
      Polyline line;
      for (int r = gt.first_row; r < gt.first_row + gt.valid_rows; ++r) {
        line.push_back(Point2{gt.xs[static_cast<std::size_t>(r)], grid.rows[static_cast<std::size_t>(r)]});
      }
      gts[s].push_back(std::move(line));
    }
  }
  return f1_report(preds, gts, eval_cfg);
}

std::map<std::string, EvalReport> ablation_run(const std::vector<Scene>& scenes,
                                               const TrainState& state, const SampleGrid& grid,
                                               const WidthModel& w,
                                               const PostprocessConfig& post_cfg,
                                               const CriConfig& cri_cfg,
                                               const ModulationConfig& mod_cfg,
                                               const EvalConfig& eval_cfg) {
  std::map<std::string, EvalReport> out;
  out["baseline"] = run_ablation_case(scenes, state, {false, false}, grid, w, post_cfg, cri_cfg,
                                      mod_cfg, eval_cfg);
  out["lcc"] = run_ablation_case(scenes, state, {true, false}, grid, w, post_cfg, cri_cfg,
                                 mod_cfg, eval_cfg);
  out["aglr"] = run_ablation_case(scenes, state, {false, true}, grid, w, post_cfg, cri_cfg,
                                  mod_cfg, eval_cfg);
  out["lcc_aglr"] = run_ablation_case(scenes, state, {true, true}, grid, w, post_cfg, cri_cfg,
                                      mod_cfg, eval_cfg);
  return out;
}

}  // namespace lanegeom
