#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lanegeom/geometry.hpp"
#include "lanegeom/postprocess.hpp"
#include "lanegeom/refine.hpp"

namespace lanegeom {

// Deterministic random stream. Transforms are hand-rolled on top of the
// bit-exact mt19937_64 engine so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal(double stddev);
  int uniform_int(int lo, int hi);  // inclusive

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t scene_seed(std::uint64_t master_seed, std::uint64_t scene_index);

enum class CurvatureFamily { straight, arc, cubic, s_curve };

struct SceneSpec {
  int n_lanes = 4;
  CurvatureFamily family = CurvatureFamily::arc;
  double curvature = 8e-4;  // 1/px, magnitude bound for the family parameter
  double spacing = 90.0;    // px between adjacent lanes (keep > 2e)
  std::uint64_t seed = 42;
  int priors_per_gt = 10;
  int background_priors = 6;
  int feature_channels = 8;
  int feature_samples = 36;
};

struct NoiseModel {
  double sigma_geo = 6.0;      // px, structured lateral jitter of priors
  double sigma_p = 0.8;        // logit-space classification noise
  double sigma_q = 0.5;        // logit-space fidelity-estimate noise
  double rho = 0.5;            // how much the confidence signal ignores geometry
  double feature_noise = 0.5;  // additive feature noise
};

struct Scene {
  std::vector<Lane> gts;
  std::vector<LanePrior> priors;
  std::vector<FeatureMap> features;  // per prior, channels x samples
  std::vector<double> q_true;        // per prior: best unsigned overlap vs any ground truth
  std::vector<int> source_gt;        // spawning ground-truth index, -1 for background
};

Scene generate_scene(const SceneSpec& spec, const NoiseModel& noise, const SampleGrid& grid);

// Fixed per-channel projection used when encoding residual geometry into
// anchor features; identical across scenes so one refiner serves all.
double feature_projection(int channel);

// CULane lines text: one lane per line, alternating "x y" floats,
// bottom-to-top. Lanes are resampled onto the grid; lanes with fewer than
// two usable points are skipped with a diagnostic.
std::vector<Lane> read_culane_lines(const std::string& text, const SampleGrid& grid,
                                    std::vector<std::string>* diagnostics = nullptr);

std::string write_lines(const std::vector<Polyline>& lanes);

enum class PredictionFormat { culane_lines, json };

std::string write_predictions(const std::vector<Detection>& detections, PredictionFormat format);
std::vector<Detection> read_predictions_json(const std::string& text);

}  // namespace lanegeom
