#include "lanegeom/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lanegeom {

namespace {
constexpr double kConfidenceFloor = 1e-7;
}

Matrix cost_matrix(const Matrix& ious, const std::vector<double>& cls_conf,
                   const AssignConfig& cfg) {
  const std::size_t j_count = ious.size();
  if (cls_conf.size() != j_count) {
    throw std::invalid_argument("cost_matrix: confidence count does not match prior count");
  }
  const std::size_t k_count = j_count > 0 ? ious[0].size() : 0;
  Matrix cost(j_count, std::vector<double>(k_count, 0.0));
  for (std::size_t j = 0; j < j_count; ++j) {
    if (ious[j].size() != k_count) {
      throw std::invalid_argument("cost_matrix: ragged IoU matrix");
    }
    const double cls_cost = -std::log(std::max(cls_conf[j], kConfidenceFloor));
    for (std::size_t k = 0; k < k_count; ++k) {
      cost[j][k] = -ious[j][k] + cfg.lambda * cls_cost;
    }
  }
  return cost;
}

AssignmentResult dynamic_assign(const Matrix& cost, const Matrix& ious, const AssignConfig& cfg) {
  const int j_count = static_cast<int>(cost.size());
  const int k_count = j_count > 0 ? static_cast<int>(cost[0].size()) : 0;
  if (static_cast<int>(ious.size()) != j_count) {
    throw std::invalid_argument("dynamic_assign: cost/IoU shape mismatch");
  }

  AssignmentResult result;
  result.matched_gt.assign(static_cast<std::size_t>(j_count), -1);
  result.labels.assign(static_cast<std::size_t>(j_count), 0);
  result.soft_labels.assign(static_cast<std::size_t>(j_count), 0.0);

  // claims[j] = best (cost, gt) pair claiming prior j so far.
  std::vector<std::pair<double, int>> claims(
      static_cast<std::size_t>(j_count),
      {std::numeric_limits<double>::infinity(), -1});

  std::vector<int> order(static_cast<std::size_t>(j_count));
  for (int k = 0; k < k_count; ++k) {
    std::vector<double> column_ious(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) column_ious[static_cast<std::size_t>(j)] = ious[j][k];
    std::sort(column_ious.begin(), column_ious.end(), std::greater<>());
    const int pool = std::min(cfg.top_t, j_count);
    double iou_sum = 0.0;
    for (int t = 0; t < pool; ++t) iou_sum += column_ious[static_cast<std::size_t>(t)];
    const int dynamic_k =
        std::clamp(static_cast<int>(std::lround(iou_sum)), 1, std::min(cfg.k_max, j_count));

    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (cost[a][k] != cost[b][k]) return cost[a][k] < cost[b][k];
      return a < b;
    });
    for (int t = 0; t < dynamic_k; ++t) {
      const int j = order[static_cast<std::size_t>(t)];
      const std::pair<double, int> claim{cost[j][k], k};
      if (claim < claims[static_cast<std::size_t>(j)]) {
        claims[static_cast<std::size_t>(j)] = claim;
      }
    }
  }

  for (int j = 0; j < j_count; ++j) {
    const int k = claims[static_cast<std::size_t>(j)].second;
    if (k >= 0) {
      result.positives.push_back(j);
      result.matched_gt[static_cast<std::size_t>(j)] = k;
      result.labels[static_cast<std::size_t>(j)] = 1;
      result.soft_labels[static_cast<std::size_t>(j)] = std::clamp(ious[j][k], 0.0, 1.0);
    } else {
      result.negatives.push_back(j);
    }
  }
  return result;
}

}  // namespace lanegeom
