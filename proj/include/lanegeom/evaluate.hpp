#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "lanegeom/geometry.hpp"
#include "lanegeom/overlap.hpp"

namespace lanegeom {

struct EvalConfig {
  double mask_width = 30.0;
  std::vector<double> iou_thresholds = {0.50, 0.75, 0.90};
  int height = 320;
  int width = 800;
  bool strict_greater = true;  // true positive requires IoU strictly above the threshold
};

struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0/1

  bool at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
  long popcount() const;
};

// Per-row pixel runs [lo, hi); equivalent pixel set to the dense mask but
// cheap to intersect. Rows with no coverage hold an empty list.
struct RowSpanMask {
  int height = 0;
  int width = 0;
  std::vector<std::vector<std::pair<int, int>>> rows;

  long popcount() const;
  Mask to_mask() const;
};

// Thick-polyline stroke: every pixel whose center lies within width/2 of a
// segment (round caps and joins), clipped to the target resolution.
Mask rasterize(const Polyline& polyline, double width_px, int height, int width);
RowSpanMask rasterize_spans(const Polyline& polyline, double width_px, int height, int width);

double mask_iou(const Mask& a, const Mask& b);
double span_iou(const RowSpanMask& a, const RowSpanMask& b);

struct HungarianResult {
  std::vector<std::pair<int, int>> pairs;  // (row, column), sorted by row
  double total_cost = 0.0;
};

// Minimum-cost one-to-one matching of min(n, m) pairs. Cost-neutral swaps are
// canonicalized so earlier rows prefer lower column indices.
HungarianResult hungarian(const Matrix& cost);

struct ThresholdCounts {
  double threshold = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<ThresholdCounts> per_threshold;
  long frames = 0;
  double wall_seconds = 0.0;
  double fps = 0.0;
};

// Mask-based detection metric: per frame, rasterize predictions and ground
// truths, match by maximizing total mask IoU, then count TP/FP/FN per
// threshold. Frames may be sharded across `workers` threads; counts are
// identical for any worker count.
EvalReport f1_report(const std::vector<std::vector<Polyline>>& preds,
                     const std::vector<std::vector<Polyline>>& gts, const EvalConfig& cfg,
                     int workers = 1);

struct FpsResult {
  double fps = 0.0;
  double wall_seconds = 0.0;
  int frames = 0;
  int repeats = 0;
};

// Throughput of `process_frame` over `n_frames` frames, averaged over
// repeated timed runs after a warm-up pass.
FpsResult measure_fps(const std::function<void(int)>& process_frame, int n_frames,
                      int warmup_frames = 8, int repeats = 3);

}  // namespace lanegeom
