#pragma once

#include <vector>

#include "lanegeom/calibrate.hpp"
#include "lanegeom/geometry.hpp"
#include "lanegeom/overlap.hpp"
#include "lanegeom/refine.hpp"

namespace lanegeom {

enum class ScoreMode { cls_only, cri };

struct PostprocessConfig {
  double score_threshold = 0.4;  // applied to the active score
  double nms_iou_threshold = 0.5;
  int top_k = 4;
  ScoreMode score_mode = ScoreMode::cri;
};

// Scored candidate surviving the threshold filter; `index` is the position in
// the original prior list and breaks score ties.
struct Candidate {
  LanePrior prior;
  double score = 0.0;
  int index = 0;
};

// Threshold filtering on the active score; output sorted by score descending,
// stable on ties by prior index.
std::vector<Candidate> filter_candidates(const std::vector<LanePrior>& priors,
                                         const PostprocessConfig& cfg, const CriConfig& cri_cfg);

// Greedy suppression: keep the best remaining candidate, drop everything
// overlapping it at or above the IoU threshold, then truncate to top_k.
std::vector<Candidate> nms(const std::vector<Candidate>& sorted_candidates, const WidthModel& w,
                           const PostprocessConfig& cfg, const SampleGrid& grid);

struct Detection {
  Polyline points;
  double score = 0.0;
  double cls_confidence = 0.0;
  double fidelity = 0.0;
};

struct StageTimings {
  double filter_s = 0.0;
  double modulate_s = 0.0;
  double nms_s = 0.0;
  double decode_s = 0.0;
};

// Full inference pass: filter -> modulate pending refinement offsets ->
// apply them -> NMS -> decode. `sr_offsets` holds the per-prior refinement
// offsets (length N each); pass an empty vector for none.
std::vector<Detection> run_pipeline(const std::vector<LanePrior>& priors,
                                    const std::vector<std::vector<double>>& sr_offsets,
                                    const SampleGrid& grid, const WidthModel& w,
                                    const PostprocessConfig& cfg, const CriConfig& cri_cfg,
                                    const ModulationConfig& mod_cfg,
                                    StageTimings* timings = nullptr);

}  // namespace lanegeom
