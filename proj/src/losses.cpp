#include "lanegeom/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanegeom {

namespace {
constexpr double kProbEps = 1e-7;
}

double smooth_l1(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("smooth_l1: need equal, nonzero lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  return sum / static_cast<double>(pred.size());
}

std::vector<double> smooth_l1_grad(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("smooth_l1_grad: need equal, nonzero lengths");
  }
  std::vector<double> grad(pred.size());
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    grad[i] = (std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0)) * inv_n;
  }
  return grad;
}

namespace {

struct RowNeighbors {
  int lo = 0;
  int hi = 0;
};

RowNeighbors slope_neighbors(const LaneSpan& lane, int row) {
  const int last = lane.first + lane.count - 1;
  return {std::max(lane.first, row - 1), std::min(last, row + 1)};
}

}  // namespace

IouLossResult iou_loss(const LaneSpan& pred, const LaneSpan& gt, const WidthModel& w,
                       const SampleGrid& grid) {
  IouLossResult result;
  result.grad.assign(pred.xs.size(), 0.0);

  const std::vector<double> ea = row_half_widths(pred, w, grid);
  const std::vector<double> eb = row_half_widths(gt, w, grid);
  const double stride = grid.stride();

  // Adds g * d(e_r)/d(x_j) into the accumulator for the rows the local slope
  // at `row` depends on.
  auto distribute_width_partial = [&](int row, double g, std::vector<double>& acc) {
    if (!w.tilt_compensated || g == 0.0) return;
    const auto [m, p] = slope_neighbors(pred, row);
    if (p == m) return;
    const double dy = static_cast<double>(p - m) * stride;
    const double k = (pred.xs[static_cast<std::size_t>(p)] - pred.xs[static_cast<std::size_t>(m)]) / dy;
    const double de_dk = w.half_width * k / std::sqrt(1.0 + k * k);
    acc[static_cast<std::size_t>(p)] += g * de_dk / dy;
    acc[static_cast<std::size_t>(m)] -= g * de_dk / dy;
  };

  const bool pred_valid = pred.count > 0;
  const bool gt_valid = gt.count > 0;
  if (!pred_valid && !gt_valid) {
    throw std::invalid_argument("iou_loss: neither lane has valid rows");
  }
  const int lo = std::min(pred_valid ? pred.first : gt.first, gt_valid ? gt.first : pred.first);
  const int hi = std::max(pred_valid ? pred.first + pred.count : gt.first + gt.count,
                          gt_valid ? gt.first + gt.count : pred.first + pred.count);

  double inter = 0.0;
  double uni = 0.0;
  std::vector<double> d_inter(pred.xs.size(), 0.0);
  std::vector<double> d_uni(pred.xs.size(), 0.0);

  for (int r = lo; r < hi; ++r) {
    const bool in_pred = r >= pred.first && r < pred.first + pred.count;
    const bool in_gt = r >= gt.first && r < gt.first + gt.count;
    if (in_pred && in_gt) {
      const double wa = ea[static_cast<std::size_t>(r - pred.first)];
      const double wb = eb[static_cast<std::size_t>(r - gt.first)];
      const double xa = pred.xs[static_cast<std::size_t>(r)];
      const double xb = gt.xs[static_cast<std::size_t>(r)];
      const double ahi = xa + wa, alo = xa - wa;
      const double bhi = xb + wb, blo = xb - wb;

      inter += std::min(ahi, bhi) - std::max(alo, blo);
      uni += std::max(ahi, bhi) - std::min(alo, blo);

      // Right-hand subgradients through the min/max selections.
      const double do_dahi = ahi < bhi ? 1.0 : 0.0;
      const double do_dalo = -(alo >= blo ? 1.0 : 0.0);
      const double du_dahi = ahi >= bhi ? 1.0 : 0.0;
      const double du_dalo = -(alo < blo ? 1.0 : 0.0);

      d_inter[static_cast<std::size_t>(r)] += do_dahi + do_dalo;
      d_uni[static_cast<std::size_t>(r)] += du_dahi + du_dalo;
      distribute_width_partial(r, do_dahi - do_dalo, d_inter);
      distribute_width_partial(r, du_dahi - du_dalo, d_uni);
    } else if (in_pred) {
      uni += 2.0 * ea[static_cast<std::size_t>(r - pred.first)];
      distribute_width_partial(r, 2.0, d_uni);
    } else if (in_gt) {
      uni += 2.0 * eb[static_cast<std::size_t>(r - gt.first)];
    }
  }

  result.loss = 1.0 - inter / uni;
  for (std::size_t i = 0; i < result.grad.size(); ++i) {
    result.grad[i] = -(d_inter[i] * uni - inter * d_uni[i]) / (uni * uni);
  }
  return result;
}

double bce(double pred, double target) {
  const double p = std::clamp(pred, kProbEps, 1.0 - kProbEps);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

double bce_grad(double pred, double target) {
  if (pred <= kProbEps || pred >= 1.0 - kProbEps) return 0.0;  // clipped region
  return -target / pred + (1.0 - target) / (1.0 - pred);
}

double fidelity_loss(const std::vector<double>& predicted, const std::vector<double>& target,
                     const std::vector<int>& positives, const std::vector<int>& negatives) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("fidelity_loss: prediction/target lengths differ");
  }
  auto set_mean = [&](const std::vector<int>& set) {
    if (set.empty()) return 0.0;
    double sum = 0.0;
    for (int j : set) {
      sum += bce(predicted.at(static_cast<std::size_t>(j)), target.at(static_cast<std::size_t>(j)));
    }
    return sum / static_cast<double>(set.size());
  };
  return set_mean(positives) + set_mean(negatives);
}

std::vector<double> fidelity_loss_grad(const std::vector<double>& predicted,
                                       const std::vector<double>& target,
                                       const std::vector<int>& positives,
                                       const std::vector<int>& negatives) {
  if (predicted.size() != target.size()) {
    throw std::invalid_argument("fidelity_loss_grad: prediction/target lengths differ");
  }
  std::vector<double> grad(predicted.size(), 0.0);
  auto add_set = [&](const std::vector<int>& set) {
    if (set.empty()) return;
    const double inv = 1.0 / static_cast<double>(set.size());
    for (int j : set) {
      grad.at(static_cast<std::size_t>(j)) +=
          inv * bce_grad(predicted[static_cast<std::size_t>(j)], target[static_cast<std::size_t>(j)]);
    }
  };
  add_set(positives);
  add_set(negatives);
  return grad;
}

double seg_ce(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("seg_ce: need one label per pixel");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < logits.size(); ++p) {
    const auto& z = logits[p];
    const int label = labels[p];
    if (label < 0 || label >= static_cast<int>(z.size())) {
      throw std::invalid_argument("seg_ce: label out of range");
    }
    const double m = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - m);
    sum += m + std::log(lse) - z[static_cast<std::size_t>(label)];
  }
  return sum / static_cast<double>(logits.size());
}

Matrix seg_ce_grad(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("seg_ce_grad: need one label per pixel");
  }
  Matrix grad(logits.size());
  const double inv_p = 1.0 / static_cast<double>(logits.size());
  for (std::size_t p = 0; p < logits.size(); ++p) {
    const auto& z = logits[p];
    const double m = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - m);
    grad[p].resize(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double soft = std::exp(z[c] - m) / denom;
      grad[p][c] = (soft - (static_cast<int>(c) == labels[p] ? 1.0 : 0.0)) * inv_p;
    }
  }
  return grad;
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
  return weights.reg * terms.reg + weights.iou * terms.iou + weights.cls * terms.cls +
         weights.fid * terms.fid + weights.seg * terms.seg;
}

double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& analytic_grad, std::vector<double> point,
                         double eps) {
  if (eps <= 0.0) {
    throw std::invalid_argument("finite_diff_check: eps must be positive");
  }
  if (analytic_grad.size() != point.size()) {
    throw std::invalid_argument("finite_diff_check: gradient/point lengths differ");
  }
  double max_rel = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double f_plus = f(point);
    point[i] = saved - eps;
    const double f_minus = f(point);
    point[i] = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw std::runtime_error("finite_diff_check: non-finite function evaluation");
    }
    const double fd = (f_plus - f_minus) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(analytic_grad[i]), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - analytic_grad[i]) / denom);
  }
  return max_rel;
}

}  // namespace lanegeom
