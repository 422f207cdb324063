#include "lanegeom/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanegeom {

namespace {

// Central-difference slope dx/dy at row `i` of the valid block, one-sided at
// the block ends. A single-row block has slope 0.
double row_slope(const LaneSpan& lane, int i, double stride) {
  const int last = lane.first + lane.count - 1;
  const int lo = std::max(lane.first, i - 1);
  const int hi = std::min(last, i + 1);
  if (hi == lo) return 0.0;
  return (lane.xs[static_cast<std::size_t>(hi)] - lane.xs[static_cast<std::size_t>(lo)]) /
         (static_cast<double>(hi - lo) * stride);
}

bool contains(const LaneSpan& lane, int row) {
  return row >= lane.first && row < lane.first + lane.count;
}

}  // namespace

std::vector<double> row_half_widths(const LaneSpan& lane, const WidthModel& w,
                                    const SampleGrid& grid) {
  std::vector<double> out(static_cast<std::size_t>(std::max(lane.count, 0)), w.half_width);
  if (!w.tilt_compensated) return out;
  const double stride = grid.stride();
  for (int i = 0; i < lane.count; ++i) {
    const double k = row_slope(lane, lane.first + i, stride);
    out[static_cast<std::size_t>(i)] = w.half_width * std::sqrt(1.0 + k * k);
  }
  return out;
}

double lane_iou(const LaneSpan& a, const LaneSpan& b, const WidthModel& w, IouMode mode,
                const SampleGrid& grid) {
  if (w.half_width <= 0.0) {
    throw std::invalid_argument("lane_iou: half-width must be positive");
  }
  if (a.count <= 0 && b.count <= 0) {
    throw std::invalid_argument("lane_iou: neither lane has valid rows");
  }

  const std::vector<double> ea = row_half_widths(a, w, grid);
  const std::vector<double> eb = row_half_widths(b, w, grid);

  const int lo = std::min(a.count > 0 ? a.first : b.first, b.count > 0 ? b.first : a.first);
  const int hi = std::max(a.count > 0 ? a.first + a.count : b.first + b.count,
                          b.count > 0 ? b.first + b.count : a.first + a.count);

  double inter = 0.0;
  double uni = 0.0;
  for (int r = lo; r < hi; ++r) {
    const bool in_a = contains(a, r);
    const bool in_b = contains(b, r);
    if (in_a && in_b) {
      const double wa = ea[static_cast<std::size_t>(r - a.first)];
      const double wb = eb[static_cast<std::size_t>(r - b.first)];
      const double xa = a.xs[static_cast<std::size_t>(r)];
      const double xb = b.xs[static_cast<std::size_t>(r)];
      const double ov = std::min(xa + wa, xb + wb) - std::max(xa - wa, xb - wb);
      if (mode == IouMode::signed_overlap) {
        inter += ov;
        uni += std::max(xa + wa, xb + wb) - std::min(xa - wa, xb - wb);
      } else {
        const double ovc = std::max(ov, 0.0);
        inter += ovc;
        uni += 2.0 * wa + 2.0 * wb - ovc;
      }
    } else if (in_a) {
      uni += 2.0 * ea[static_cast<std::size_t>(r - a.first)];
    } else if (in_b) {
      uni += 2.0 * eb[static_cast<std::size_t>(r - b.first)];
    }
  }
  return inter / uni;
}

IouMatrixResult iou_matrix(const std::vector<LanePrior>& priors, const std::vector<Lane>& gts,
                           const WidthModel& w, const SampleGrid& grid) {
  IouMatrixResult result;
  result.values.assign(priors.size(), std::vector<double>(gts.size(), 0.0));
  for (std::size_t j = 0; j < priors.size(); ++j) {
    const LaneSpan pj = span_of(priors[j], grid);
    for (std::size_t k = 0; k < gts.size(); ++k) {
      const LaneSpan gk = span_of(gts[k]);
      if (pj.count <= 0 && gk.count <= 0) {
        ++result.degenerate_pairs;
        continue;
      }
      const double iou = lane_iou(pj, gk, w, IouMode::unsigned_clamped, grid);
      result.values[j][k] = std::clamp(iou, 0.0, 1.0);
    }
  }
  return result;
}

}  // namespace lanegeom
