#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lanegeom/overlap.hpp"

namespace lanegeom {

struct LossWeights {
  double reg = 1.0;
  double iou = 1.0;
  double cls = 1.0;
  double fid = 0.7;
  double seg = 1.0;
};

struct LossTerms {
  double reg = 0.0;
  double iou = 0.0;
  double cls = 0.0;
  double fid = 0.0;
  double seg = 0.0;
};

// Mean elementwise Huber penalty: 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
double smooth_l1(std::span<const double> pred, std::span<const double> target);
std::vector<double> smooth_l1_grad(std::span<const double> pred, std::span<const double> target);

// 1 - signed lane overlap, with the analytic gradient with respect to the
// predicted lateral coordinates (zero outside the prediction's valid block).
// Interval breakpoints use the right-hand subgradient.
struct IouLossResult {
  double loss = 0.0;
  std::vector<double> grad;  // length = pred.xs length
};
IouLossResult iou_loss(const LaneSpan& pred, const LaneSpan& gt, const WidthModel& w,
                       const SampleGrid& grid);

// Binary cross-entropy with the prediction clipped to [1e-7, 1 - 1e-7].
double bce(double pred, double target);
double bce_grad(double pred, double target);

// Mean BCE over positives plus mean BCE over negatives (two separately
// averaged terms, summed). An empty set contributes 0.
double fidelity_loss(const std::vector<double>& predicted, const std::vector<double>& target,
                     const std::vector<int>& positives, const std::vector<int>& negatives);
std::vector<double> fidelity_loss_grad(const std::vector<double>& predicted,
                                       const std::vector<double>& target,
                                       const std::vector<int>& positives,
                                       const std::vector<int>& negatives);

// Mean per-pixel cross-entropy over rows of `logits` (pixels x classes).
double seg_ce(const Matrix& logits, const std::vector<int>& labels);
Matrix seg_ce_grad(const Matrix& logits, const std::vector<int>& labels);

double total_loss(const LossTerms& terms, const LossWeights& weights);

// Max relative error between the analytic gradient and central finite
// differences of `f` at `point`, with a 1e-8 absolute floor in the
// denominator. The caller keeps `point` away from breakpoints.
double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& analytic_grad, std::vector<double> point,
                         double eps);

}  // namespace lanegeom
