#include "lanegeom/synthio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lanegeom/errors.hpp"
#include "lanegeom/overlap.hpp"

namespace lanegeom {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal(double stddev) {
  if (stddev == 0.0) {
    // Still consume one draw so noise toggles do not shift later streams.
    uniform();
    return 0.0;
  }
  if (have_spare_) {
    have_spare_ = false;
    return spare_ * stddev;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2) * stddev;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const int span = hi - lo + 1;
  return lo + static_cast<int>(uniform() * span) % span;
}

std::uint64_t scene_seed(std::uint64_t master_seed, std::uint64_t scene_index) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (scene_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double feature_projection(int channel) {
  const double phi = 0.6180339887498949;
  const double frac = std::fmod(phi * static_cast<double>(channel + 1), 1.0);
  const double magnitude = 0.6 + 0.8 * frac;
  return (channel % 2 == 0) ? magnitude : -magnitude;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

struct LaneShape {
  double center_x = 0.0;
  double slope = 0.0;  // dx/dy
  double c2 = 0.0;
  double c3 = 0.0;
  double wave_amp = 0.0;
  double wave_len = 1.0;

  double eval(double y, double image_height) const {
    const double u = y - image_height;  // 0 at the bottom of the frame
    double x = center_x + slope * u + c2 * u * u + c3 * u * u * u;
    if (wave_amp != 0.0) x += wave_amp * std::sin(2.0 * M_PI * u / wave_len);
    return x;
  }
};

LaneShape draw_shape(Rng& rng, const SceneSpec& spec, const SampleGrid& grid, double center_x) {
  LaneShape shape;
  shape.center_x = center_x;
  shape.slope = std::tan(rng.uniform(-0.45, 0.45));
  const double kappa = rng.uniform(-spec.curvature, spec.curvature);
  switch (spec.family) {
    case CurvatureFamily::straight:
      break;
    case CurvatureFamily::arc:
      shape.c2 = 0.5 * kappa;
      break;
    case CurvatureFamily::cubic:
      shape.c2 = 0.5 * kappa;
      shape.c3 = 0.5 * kappa / grid.height;
      break;
    case CurvatureFamily::s_curve:
      shape.wave_amp = kappa * grid.height * grid.height / 10.0;
      shape.wave_len = 1.2 * grid.height;
      break;
  }
  return shape;
}

Lane build_lane(const LaneShape& shape, int first_row, int last_row, const SampleGrid& grid) {
  Lane lane;
  lane.xs.resize(static_cast<std::size_t>(grid.n_points));
  for (int r = 0; r < grid.n_points; ++r) {
    const double x = shape.eval(grid.rows[static_cast<std::size_t>(r)], grid.height);
    lane.xs[static_cast<std::size_t>(r)] = std::clamp(x, -grid.width, 2.0 * grid.width);
  }
  lane.first_row = first_row;
  lane.valid_rows = last_row - first_row + 1;
  lane.start_x = lane.xs[static_cast<std::size_t>(first_row)];
  lane.start_y = grid.rows[static_cast<std::size_t>(first_row)];
  lane.angle = std::atan(shape.slope);
  return lane;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, const NoiseModel& noise, const SampleGrid& grid) {
  if (spec.n_lanes < 0 || spec.priors_per_gt < 0 || spec.background_priors < 0) {
    throw std::invalid_argument("generate_scene: counts must be nonnegative");
  }
  if (spec.feature_channels < 1 || spec.feature_samples < 2) {
    throw std::invalid_argument("generate_scene: feature grid too small");
  }
  Rng rng(spec.seed);
  Scene scene;

  const int n_rows = grid.n_points;
  const int min_len = std::max(2, n_rows / 3);

  // Ground-truth lanes, left to right.
  for (int i = 0; i < spec.n_lanes; ++i) {
    const double offset = (static_cast<double>(i) - (spec.n_lanes - 1) / 2.0) * spec.spacing;
    const double cx = grid.width / 2.0 + offset + rng.uniform(-0.25, 0.25) * spec.spacing;
    const LaneShape shape = draw_shape(rng, spec, grid, cx);
    const int last = n_rows - 1 - rng.uniform_int(0, n_rows / 10);
    const int first = std::max(0, std::min(rng.uniform_int(0, n_rows / 4), last - min_len + 1));
    scene.gts.push_back(build_lane(shape, first, last, grid));
  }

  // Jittered candidates around each ground truth. The lateral error is a
  // smooth low-order polynomial so the anchor features carry a learnable
  // structure.
  for (int g = 0; g < static_cast<int>(scene.gts.size()); ++g) {
    const Lane& gt = scene.gts[static_cast<std::size_t>(g)];
    for (int p = 0; p < spec.priors_per_gt; ++p) {
      const double a0 = rng.normal(noise.sigma_geo);
      const double a1 = rng.normal(noise.sigma_geo);
      const double a2 = rng.normal(noise.sigma_geo);

      LanePrior prior;
      prior.xs.resize(static_cast<std::size_t>(n_rows));
      const int gt_last = gt.first_row + gt.valid_rows - 1;
      for (int r = 0; r < n_rows; ++r) {
        const double span = std::max(1, gt.valid_rows - 1);
        const double v = 2.0 * (static_cast<double>(r - gt.first_row) / span) - 1.0;
        const double err = a0 + a1 * v + a2 * (2.0 * v * v - 1.0);
        prior.xs[static_cast<std::size_t>(r)] = gt.xs[static_cast<std::size_t>(r)] + err;
      }
      int first = gt.first_row + rng.uniform_int(-2, 2);
      first = std::clamp(first, 0, gt_last - 1);
      int last = gt_last + rng.uniform_int(-2, 0);
      last = std::clamp(last, first + 1, n_rows - 1);
      prior.start_y = grid.rows[static_cast<std::size_t>(first)];
      prior.start_x = prior.xs[static_cast<std::size_t>(first)];
      prior.angle = gt.angle;
      prior.length = static_cast<double>(last - first + 1);
      prior.stage = 2;
      scene.priors.push_back(std::move(prior));
      scene.source_gt.push_back(g);
    }
  }

  // Background candidates not tied to any ground truth.
  for (int b = 0; b < spec.background_priors; ++b) {
    const double cx = rng.uniform(0.05 * grid.width, 0.95 * grid.width);
    const LaneShape shape = draw_shape(rng, spec, grid, cx);
    const int first = rng.uniform_int(0, n_rows / 3);
    const int last = std::clamp(first + rng.uniform_int(min_len, n_rows - 1), first + 1, n_rows - 1);
    const Lane as_lane = build_lane(shape, first, last, grid);

    LanePrior prior;
    prior.xs = as_lane.xs;
    prior.start_x = as_lane.start_x;
    prior.start_y = as_lane.start_y;
    prior.angle = as_lane.angle;
    prior.length = static_cast<double>(as_lane.valid_rows);
    prior.stage = 2;
    scene.priors.push_back(std::move(prior));
    scene.source_gt.push_back(-1);
  }

  // True geometric quality: best unsigned overlap against any ground truth.
  const WidthModel width_for_quality;  // default half-width, tilt on
  scene.q_true.assign(scene.priors.size(), 0.0);
  if (!scene.gts.empty()) {
    const IouMatrixResult ious = iou_matrix(scene.priors, scene.gts, width_for_quality, grid);
    for (std::size_t j = 0; j < scene.priors.size(); ++j) {
      scene.q_true[j] = *std::max_element(ious.values[j].begin(), ious.values[j].end());
    }
  }

  // Confidence, fidelity estimate, and anchor features.
  constexpr double kConfScale = 4.0;
  constexpr double kConfShift = -1.2;
  const int s_len = spec.feature_samples;
  for (std::size_t j = 0; j < scene.priors.size(); ++j) {
    LanePrior& prior = scene.priors[j];
    const double q = scene.q_true[j];

    const double mixed = (1.0 - noise.rho) * q + noise.rho * rng.uniform();
    prior.cls_confidence = sigmoid(kConfScale * mixed + kConfShift + rng.normal(noise.sigma_p));

    const double q_safe = std::clamp(q, 1e-4, 1.0 - 1e-4);
    prior.fidelity = sigmoid(logit(q_safe) + rng.normal(noise.sigma_q));

    // Residual lateral error on the refinement sample grid; zero for
    // background candidates.
    std::vector<double> err_rows(static_cast<std::size_t>(grid.n_points), 0.0);
    const int g = scene.source_gt[j];
    if (g >= 0) {
      const Lane& gt = scene.gts[static_cast<std::size_t>(g)];
      for (int r = 0; r < grid.n_points; ++r) {
        err_rows[static_cast<std::size_t>(r)] =
            gt.xs[static_cast<std::size_t>(r)] - prior.xs[static_cast<std::size_t>(r)];
      }
    }
    const std::vector<double> err_s = resample_linear(err_rows, s_len);

    FeatureMap feature = FeatureMap::zeros(spec.feature_channels, s_len);
    for (int c = 0; c < spec.feature_channels; ++c) {
      const double proj = feature_projection(c);
      for (int s = 0; s < s_len; ++s) {
        feature.at(c, s) = proj * err_s[static_cast<std::size_t>(s)] + rng.normal(noise.feature_noise);
      }
    }
    scene.features.push_back(std::move(feature));
  }
  return scene;
}

std::vector<Lane> read_culane_lines(const std::string& text, const SampleGrid& grid,
                                    std::vector<std::string>* diagnostics) {
  std::vector<Lane> lanes;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::istringstream tokens(line);
    std::vector<double> values;
    std::string token;
    while (tokens >> token) {
      try {
        std::size_t consumed = 0;
        const double v = std::stod(token, &consumed);
        if (consumed != token.size()) throw std::invalid_argument(token);
        values.push_back(v);
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + token + "'");
      }
    }
    if (values.size() % 2 != 0) {
      throw DataError("line " + std::to_string(line_no) + ": odd token count");
    }

    std::vector<Point2> points;
    for (std::size_t i = 0; i + 1 < values.size(); i += 2) {
      points.push_back(Point2{values[i], values[i + 1]});
    }
    if (points.size() < 2) {
      if (diagnostics != nullptr) {
        diagnostics->push_back("line " + std::to_string(line_no) +
                               ": lane with fewer than 2 points skipped");
      }
      continue;
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const Point2& a, const Point2& b) { return a.y < b.y; });

    // Map onto the working grid by linear interpolation in y.
    constexpr double kTol = 1e-3;  // absorbs the 4-decimal file rounding
    const double y_min = points.front().y;
    const double y_max = points.back().y;
    int first = -1, last = -1;
    for (int r = 0; r < grid.n_points; ++r) {
      const double y = grid.rows[static_cast<std::size_t>(r)];
      if (y >= y_min - kTol && y <= y_max + kTol) {
        if (first < 0) first = r;
        last = r;
      }
    }
    if (first < 0 || last - first + 1 < 2) {
      if (diagnostics != nullptr) {
        diagnostics->push_back("line " + std::to_string(line_no) +
                               ": lane spans fewer than 2 grid rows, skipped");
      }
      continue;
    }

    Lane lane;
    lane.xs.assign(static_cast<std::size_t>(grid.n_points), 0.0);
    std::size_t seg = 0;
    for (int r = first; r <= last; ++r) {
      const double y = grid.rows[static_cast<std::size_t>(r)];
      while (seg + 2 < points.size() && points[seg + 1].y < y) ++seg;
      const Point2& a = points[seg];
      const Point2& b = points[seg + 1];
      const double dy = b.y - a.y;
      const double t = dy != 0.0 ? std::clamp((y - a.y) / dy, 0.0, 1.0) : 0.0;
      lane.xs[static_cast<std::size_t>(r)] = a.x + t * (b.x - a.x);
    }
    lane.first_row = first;
    lane.valid_rows = last - first + 1;
    lane.start_x = lane.xs[static_cast<std::size_t>(first)];
    lane.start_y = grid.rows[static_cast<std::size_t>(first)];
    const double dy = grid.stride() * std::max(1, lane.valid_rows - 1);
    lane.angle = std::atan((lane.xs[static_cast<std::size_t>(last)] - lane.start_x) / dy);
    lanes.push_back(std::move(lane));
  }
  return lanes;
}

std::string write_lines(const std::vector<Polyline>& lanes) {
  std::string out;
  char buf[64];
  for (const Polyline& lane : lanes) {
    // Bottom-to-top ordering, per the dataset convention.
    for (std::size_t i = lane.size(); i-- > 0;) {
      std::snprintf(buf, sizeof(buf), "%.4f %.4f", lane[i].x, lane[i].y);
      out += buf;
      if (i != 0) out += ' ';
    }
    out += '\n';
  }
  return out;
}

std::string write_predictions(const std::vector<Detection>& detections, PredictionFormat format) {
  if (format == PredictionFormat::culane_lines) {
    std::vector<Polyline> lanes;
    lanes.reserve(detections.size());
    for (const Detection& d : detections) lanes.push_back(d.points);
    return write_lines(lanes);
  }
  nlohmann::json lanes = nlohmann::json::array();
  for (const Detection& d : detections) {
    nlohmann::json points = nlohmann::json::array();
    for (const Point2& p : d.points) points.push_back({p.x, p.y});
    lanes.push_back({{"points", points},
                     {"score", d.score},
                     {"p", d.cls_confidence},
                     {"q", d.fidelity}});
  }
  return nlohmann::json{{"lanes", lanes}}.dump(2) + "\n";
}

std::vector<Detection> read_predictions_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("predictions: invalid JSON: ") + e.what());
  }
  std::vector<Detection> out;
  try {
    for (const auto& lane : doc.at("lanes")) {
      Detection d;
      for (const auto& p : lane.at("points")) {
        d.points.push_back(Point2{p.at(0).get<double>(), p.at(1).get<double>()});
      }
      d.score = lane.at("score").get<double>();
      d.cls_confidence = lane.at("p").get<double>();
      d.fidelity = lane.at("q").get<double>();
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("predictions: malformed document: ") + e.what());
  }
  return out;
}

}  // namespace lanegeom
