#pragma once

// Independent reference implementations used only to verify the library.
// They deliberately avoid the production code paths they check.

#include <utility>
#include <vector>

#include "lanegeom/evaluate.hpp"
#include "lanegeom/geometry.hpp"
#include "lanegeom/overlap.hpp"
#include "lanegeom/refine.hpp"
#include "lanegeom/synthio.hpp"

namespace oracles {

// Per-pixel distance test over the full image.
lanegeom::Mask naive_rasterize(const lanegeom::Polyline& polyline, double width_px, int height,
                               int width);

// Minimum total cost over all one-to-one matchings of min(n, m) pairs,
// found by brute-force permutation search (sizes up to 7x7).
double exhaustive_min_assignment(const lanegeom::Matrix& cost);

// Greedy suppression re-derived from scratch on a precomputed pairwise
// overlap matrix; returns kept original indices in keep order.
std::vector<int> naive_nms(const std::vector<double>& scores,
                           const std::vector<lanegeom::LanePrior>& priors,
                           const lanegeom::WidthModel& w, double iou_threshold, int top_k,
                           double score_threshold, const lanegeom::SampleGrid& grid);

// Dense loop-based forward pass of the gated refinement block, written with
// explicitly padded buffers.
struct NaiveAglrResult {
  std::vector<double> offsets;
  std::vector<double> gates;
  std::vector<double> gated;
  std::vector<double> resampled;
};
NaiveAglrResult naive_aglr_forward(const lanegeom::FeatureMap& feature,
                                   const lanegeom::AglrParams& params, int n_out);

// In-frame curved lane candidates for overlap/rasterization comparisons.
lanegeom::LanePrior random_curved_prior(lanegeom::Rng& rng, const lanegeom::SampleGrid& grid,
                                        double margin, double max_slope = 0.35,
                                        double max_curvature = 6e-4);

}  // namespace oracles
