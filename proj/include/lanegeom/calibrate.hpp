#pragma once

#include <optional>
#include <vector>

namespace lanegeom {

// Coefficients fusing classification confidence with geometric fidelity:
// score = p * (beta0 + beta1 * q).
struct CriConfig {
  double beta0 = 0.4;
  double beta1 = 0.6;
};

// Two-way softmax; returns the probability of the second (lane) logit.
double softmax2(double logit_background, double logit_lane);

double cri(double cls_confidence, double fidelity, const CriConfig& cfg);

// Ideal detection score: presence label times geometric quality.
double ideal_score(int label, double quality);

struct ScoredCandidate {
  double cls_confidence = 0.0;
  double fidelity = 0.0;
  double cri = 0.0;
  double ideal = 0.0;
};

// Sample Pearson correlation; empty when either series is constant.
std::optional<double> pearson_correlation(const std::vector<double>& xs,
                                          const std::vector<double>& ys);

struct RankingQuality {
  std::optional<double> pearson;  // empty when the series are degenerate
  double regret_at_k = 0.0;       // per-slot ideal-score loss of ranking by `scores`
};

RankingQuality ranking_quality(const std::vector<double>& scores, const std::vector<double>& ideal,
                               int k);

}  // namespace lanegeom
