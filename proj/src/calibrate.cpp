#include "lanegeom/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lanegeom {

double softmax2(double logit_background, double logit_lane) {
  if (!std::isfinite(logit_background) || !std::isfinite(logit_lane)) {
    throw std::invalid_argument("softmax2: logits must be finite");
  }
  const double m = std::max(logit_background, logit_lane);
  const double e0 = std::exp(logit_background - m);
  const double e1 = std::exp(logit_lane - m);
  return e1 / (e0 + e1);
}

double cri(double cls_confidence, double fidelity, const CriConfig& cfg) {
  if (cls_confidence < 0.0 || cls_confidence > 1.0 || fidelity < 0.0 || fidelity > 1.0) {
    throw std::invalid_argument("cri: confidence and fidelity must lie in [0, 1]");
  }
  return cls_confidence * (cfg.beta0 + cfg.beta1 * fidelity);
}

double ideal_score(int label, double quality) {
  return static_cast<double>(label) * quality;
}

std::optional<double> pearson_correlation(const std::vector<double>& xs,
                                          const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson_correlation: series lengths differ");
  }
  const std::size_t n = xs.size();
  if (n < 2) {
    throw std::invalid_argument("pearson_correlation: need at least 2 samples");
  }
  // Two-pass form for stability on large populations.
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

RankingQuality ranking_quality(const std::vector<double>& scores, const std::vector<double>& ideal,
                               int k) {
  if (scores.size() != ideal.size()) {
    throw std::invalid_argument("ranking_quality: series lengths differ");
  }
  if (scores.size() < 2) {
    throw std::invalid_argument("ranking_quality: need at least 2 candidates");
  }
  RankingQuality out;
  out.pearson = pearson_correlation(scores, ideal);

  const int n = static_cast<int>(scores.size());
  const int kk = std::clamp(k, 1, n);
  std::vector<int> by_score(scores.size());
  std::iota(by_score.begin(), by_score.end(), 0);
  std::stable_sort(by_score.begin(), by_score.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  std::vector<double> ideal_sorted = ideal;
  std::sort(ideal_sorted.begin(), ideal_sorted.end(), std::greater<>());

  double oracle = 0.0, achieved = 0.0;
  for (int i = 0; i < kk; ++i) {
    oracle += ideal_sorted[static_cast<std::size_t>(i)];
    achieved += ideal[static_cast<std::size_t>(by_score[static_cast<std::size_t>(i)])];
  }
  out.regret_at_k = (oracle - achieved) / static_cast<double>(kk);
  return out;
}

}  // namespace lanegeom
