#pragma once

#include <span>
#include <vector>

namespace lanegeom {

// Uniform vertical sampling grid: n_points scanlines, rows[i] = height/(n-1)*i,
// so rows[0] = 0 (top) and rows[n-1] = height (bottom).
struct SampleGrid {
  double height = 0.0;
  double width = 0.0;
  int n_points = 0;
  std::vector<double> rows;

  double stride() const { return height / static_cast<double>(n_points - 1); }
};

SampleGrid build_grid(double height, double width, int n_points);

// Ground-truth lane: one lateral coordinate per grid row inside a single
// contiguous valid block [first_row, first_row + valid_rows).
struct Lane {
  std::vector<double> xs;
  int first_row = 0;
  int valid_rows = 0;
  double start_x = 0.0;
  double start_y = 0.0;
  double angle = 0.0;  // radians
};

// Candidate lane. The valid block starts at the row nearest start_y and
// spans length rows (length may be fractional; it is truncated on decode).
struct LanePrior {
  std::vector<double> xs;
  double start_x = 0.0;
  double start_y = 0.0;
  double angle = 0.0;       // radians
  double length = 0.0;      // valid row count
  double cls_confidence = 0.0;
  double fidelity = 0.0;
  int stage = 0;
};

// Non-owning view of a sampled lane: laterals on the shared grid plus the
// contiguous valid block [first, first + count).
struct LaneSpan {
  std::span<const double> xs;
  int first = 0;
  int count = 0;
};

LaneSpan span_of(const Lane& lane);
LaneSpan span_of(const LanePrior& prior, const SampleGrid& grid);

int prior_first_row(const LanePrior& prior, const SampleGrid& grid);
int prior_row_count(const LanePrior& prior, const SampleGrid& grid);

// Start/angle/coordinate update; confidences carry over unchanged.
LanePrior apply_prior_update(const LanePrior& prior, double dx, double dy, double dangle,
                             const std::vector<double>& dxs);

// Final coordinate update: xs + dxs + gated_dxs element-wise.
LanePrior apply_point_update(const LanePrior& prior, const std::vector<double>& dxs,
                             const std::vector<double>& gated_dxs);

// 1D linear interpolation of `values` onto `target` uniformly spaced samples;
// endpoints are preserved exactly.
std::vector<double> resample_linear(const std::vector<double>& values, int target);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};
using Polyline = std::vector<Point2>;

// Valid rows of the prior as image points, ordered by increasing y.
Polyline decode_polyline(const LanePrior& prior, const SampleGrid& grid);

}  // namespace lanegeom
