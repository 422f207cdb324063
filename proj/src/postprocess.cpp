#include "lanegeom/postprocess.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace lanegeom {

namespace {

double candidate_score(const LanePrior& prior, const PostprocessConfig& cfg,
                       const CriConfig& cri_cfg) {
  return cfg.score_mode == ScoreMode::cls_only
             ? prior.cls_confidence
             : cri(prior.cls_confidence, prior.fidelity, cri_cfg);
}

class StageTimer {
 public:
  explicit StageTimer(double* slot) : slot_(slot), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    if (slot_ != nullptr) {
      *slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
  }

 private:
  double* slot_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<Candidate> filter_candidates(const std::vector<LanePrior>& priors,
                                         const PostprocessConfig& cfg, const CriConfig& cri_cfg) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const double score = candidate_score(priors[i], cfg, cri_cfg);
    if (score >= cfg.score_threshold) {
      out.push_back(Candidate{priors[i], score, static_cast<int>(i)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  return out;
}

std::vector<Candidate> nms(const std::vector<Candidate>& sorted_candidates, const WidthModel& w,
                           const PostprocessConfig& cfg, const SampleGrid& grid) {
  std::vector<Candidate> kept;
  std::vector<char> suppressed(sorted_candidates.size(), 0);
  for (std::size_t i = 0; i < sorted_candidates.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(sorted_candidates[i]);
    if (static_cast<int>(kept.size()) >= cfg.top_k) break;
    const LaneSpan span_i = span_of(sorted_candidates[i].prior, grid);
    for (std::size_t j = i + 1; j < sorted_candidates.size(); ++j) {
      if (suppressed[j]) continue;
      const LaneSpan span_j = span_of(sorted_candidates[j].prior, grid);
      if (span_i.count <= 0 && span_j.count <= 0) {
        suppressed[j] = 1;  // two empty lanes are indistinguishable
        continue;
      }
      const double overlap = lane_iou(span_i, span_j, w, IouMode::unsigned_clamped, grid);
      if (overlap >= cfg.nms_iou_threshold) suppressed[j] = 1;
    }
  }
  return kept;
}

std::vector<Detection> run_pipeline(const std::vector<LanePrior>& priors,
                                    const std::vector<std::vector<double>>& sr_offsets,
                                    const SampleGrid& grid, const WidthModel& w,
                                    const PostprocessConfig& cfg, const CriConfig& cri_cfg,
                                    const ModulationConfig& mod_cfg, StageTimings* timings) {
  if (!sr_offsets.empty() && sr_offsets.size() != priors.size()) {
    throw std::invalid_argument("run_pipeline: refinement offsets do not match prior count");
  }

  std::vector<Candidate> candidates;
  {
    StageTimer timer(timings != nullptr ? &timings->filter_s : nullptr);
    candidates = filter_candidates(priors, cfg, cri_cfg);
  }

  {
    StageTimer timer(timings != nullptr ? &timings->modulate_s : nullptr);
    if (!sr_offsets.empty()) {
      const std::vector<double> zeros(grid.n_points, 0.0);
      for (Candidate& c : candidates) {
        const std::vector<double>& raw = sr_offsets[static_cast<std::size_t>(c.index)];
        if (raw.empty()) continue;
        const std::vector<double> gated = modulate(raw, c.prior.fidelity, mod_cfg);
        c.prior = apply_point_update(c.prior, zeros, gated);
      }
    }
  }

  std::vector<Candidate> kept;
  {
    StageTimer timer(timings != nullptr ? &timings->nms_s : nullptr);
    kept = nms(candidates, w, cfg, grid);
  }

  std::vector<Detection> detections;
  {
    StageTimer timer(timings != nullptr ? &timings->decode_s : nullptr);
    detections.reserve(kept.size());
    for (const Candidate& c : kept) {
      Detection d;
      d.points = decode_polyline(c.prior, grid);
      d.score = c.score;
      d.cls_confidence = c.prior.cls_confidence;
      d.fidelity = c.prior.fidelity;
      detections.push_back(std::move(d));
    }
  }
  return detections;
}

}  // namespace lanegeom
