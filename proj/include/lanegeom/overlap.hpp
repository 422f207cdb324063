#pragma once

#include <vector>

#include "lanegeom/geometry.hpp"

namespace lanegeom {

using Matrix = std::vector<std::vector<double>>;

// Half-width of the lateral interval a lane occupies on each row. With tilt
// compensation the half-width scales by sqrt(1 + k^2), k the local slope
// dx/dy, so the interval matches the row slice of a constant-thickness
// stroke. With it off this degenerates to plain LineIoU.
struct WidthModel {
  double half_width = 15.0;
  bool tilt_compensated = true;
};

// unsigned_clamped: per-row intersection clamped at 0, union is the interval
//   set union; values in [0, 1]. Used for metrics, soft labels, and NMS.
// signed_overlap: per-row intersection may go negative (overlap deficit) and
//   the union is the interval hull; values in (-1, 1]. Used in the IoU loss.
enum class IouMode { unsigned_clamped, signed_overlap };

double lane_iou(const LaneSpan& a, const LaneSpan& b, const WidthModel& w, IouMode mode,
                const SampleGrid& grid);

// Per-row half-widths over a span's valid block (index 0 = span.first).
std::vector<double> row_half_widths(const LaneSpan& lane, const WidthModel& w,
                                    const SampleGrid& grid);

struct IouMatrixResult {
  Matrix values;             // J x K, unsigned lane_iou
  int degenerate_pairs = 0;  // entries mapped to 0 because neither lane had valid rows
};

IouMatrixResult iou_matrix(const std::vector<LanePrior>& priors, const std::vector<Lane>& gts,
                           const WidthModel& w, const SampleGrid& grid);

}  // namespace lanegeom
