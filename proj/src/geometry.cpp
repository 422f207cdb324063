#include "lanegeom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lanegeom {

SampleGrid build_grid(double height, double width, int n_points) {
  if (height <= 0.0 || width <= 0.0) {
    throw std::invalid_argument("build_grid: image dimensions must be positive");
  }
  if (n_points < 2) {
    throw std::invalid_argument("build_grid: need at least 2 sample points");
  }
  SampleGrid grid;
  grid.height = height;
  grid.width = width;
  grid.n_points = n_points;
  grid.rows.resize(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    grid.rows[static_cast<std::size_t>(i)] = height / static_cast<double>(n_points - 1) * i;
  }
  return grid;
}

LaneSpan span_of(const Lane& lane) {
  return LaneSpan{std::span<const double>(lane.xs), lane.first_row, lane.valid_rows};
}

int prior_first_row(const LanePrior& prior, const SampleGrid& grid) {
  const int row = static_cast<int>(std::lround(prior.start_y / grid.stride()));
  return std::clamp(row, 0, grid.n_points - 1);
}

int prior_row_count(const LanePrior& prior, const SampleGrid& grid) {
  const int first = prior_first_row(prior, grid);
  const int count = static_cast<int>(std::floor(std::max(prior.length, 0.0)));
  return std::clamp(count, 0, grid.n_points - first);
}

LaneSpan span_of(const LanePrior& prior, const SampleGrid& grid) {
  return LaneSpan{std::span<const double>(prior.xs), prior_first_row(prior, grid),
                  prior_row_count(prior, grid)};
}

LanePrior apply_prior_update(const LanePrior& prior, double dx, double dy, double dangle,
                             const std::vector<double>& dxs) {
  if (dxs.size() != prior.xs.size()) {
    throw std::invalid_argument("apply_prior_update: offset length " + std::to_string(dxs.size()) +
                                " does not match lane length " + std::to_string(prior.xs.size()));
  }
  LanePrior out = prior;
  out.start_x += dx;
  out.start_y += dy;
  out.angle += dangle;
  for (std::size_t i = 0; i < out.xs.size(); ++i) {
    out.xs[i] += dxs[i];
  }
  return out;
}

LanePrior apply_point_update(const LanePrior& prior, const std::vector<double>& dxs,
                             const std::vector<double>& gated_dxs) {
  if (dxs.size() != prior.xs.size() || gated_dxs.size() != prior.xs.size()) {
    throw std::invalid_argument("apply_point_update: offset lengths do not match lane length");
  }
  LanePrior out = prior;
  for (std::size_t i = 0; i < out.xs.size(); ++i) {
    out.xs[i] += dxs[i] + gated_dxs[i];
  }
  return out;
}

std::vector<double> resample_linear(const std::vector<double>& values, int target) {
  const int m = static_cast<int>(values.size());
  if (m < 2 || target < 2) {
    throw std::invalid_argument("resample_linear: need at least 2 samples on both sides");
  }
  std::vector<double> out(static_cast<std::size_t>(target));
  for (int j = 0; j < target; ++j) {
    const double pos = static_cast<double>(j) * (m - 1) / static_cast<double>(target - 1);
    int lo = static_cast<int>(std::floor(pos));
    if (lo >= m - 1) lo = m - 2;
    const double t = pos - lo;
    out[static_cast<std::size_t>(j)] =
        (1.0 - t) * values[static_cast<std::size_t>(lo)] + t * values[static_cast<std::size_t>(lo) + 1];
  }
  return out;
}

Polyline decode_polyline(const LanePrior& prior, const SampleGrid& grid) {
  const int first = prior_first_row(prior, grid);
  const int count = prior_row_count(prior, grid);
  if (count < 2) {
    throw std::invalid_argument("decode_polyline: lane has fewer than 2 valid rows");
  }
  Polyline points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = first; i < first + count; ++i) {
    points.push_back(Point2{prior.xs[static_cast<std::size_t>(i)], grid.rows[static_cast<std::size_t>(i)]});
  }
  return points;
}

}  // namespace lanegeom
