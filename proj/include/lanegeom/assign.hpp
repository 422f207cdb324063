#pragma once

#include <vector>

#include "lanegeom/overlap.hpp"

namespace lanegeom {

struct AssignConfig {
  double lambda = 1.0;  // classification-cost weight
  int top_t = 4;        // candidate pool per ground truth for dynamic-k
  int k_max = 4;
};

struct AssignmentResult {
  std::vector<int> positives;       // sorted prior indices
  std::vector<int> negatives;       // sorted prior indices
  std::vector<int> matched_gt;      // per prior; -1 for negatives
  std::vector<int> labels;          // 1 for positives, 0 otherwise
  std::vector<double> soft_labels;  // matched unsigned IoU for positives, 0 otherwise
};

// c[j][k] = -iou[j][k] + lambda * (-log(max(p_j, 1e-7)))
Matrix cost_matrix(const Matrix& ious, const std::vector<double>& cls_conf,
                   const AssignConfig& cfg);

// Per ground truth, selects an adaptive number of lowest-cost priors as
// positives: k = clamp(round(sum of its top_t IoUs), 1, k_max). A prior
// claimed by several ground truths goes to the one with the lowest cost
// (ties to the lower index). Everything else is negative.
AssignmentResult dynamic_assign(const Matrix& cost, const Matrix& ious, const AssignConfig& cfg);

}  // namespace lanegeom
