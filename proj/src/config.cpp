#include "lanegeom/config.hpp"

#include <set>

#include <json.hpp>

#include "lanegeom/errors.hpp"

namespace lanegeom {

namespace {

using nlohmann::json;

// Pulls one required key out of a section, tracking which keys were consumed.
class Section {
 public:
  Section(const json& doc, std::string name) : doc_(doc), name_(std::move(name)) {}

  template <typename T>
  T require(const std::string& key) {
    if (!doc_.contains(key)) {
      throw ConfigError("config: missing required key: " + name_ + "." + key);
    }
    consumed_.insert(key);
    try {
      return doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: wrong type for key: " + name_ + "." + key);
    }
  }

  void finish(bool lenient, std::vector<std::string>* warnings) const {
    for (const auto& [key, value] : doc_.items()) {
      if (consumed_.count(key) != 0) continue;
      const std::string message = "config: unknown key: " + name_ + "." + key;
      if (!lenient) throw ConfigError(message);
      if (warnings != nullptr) warnings->push_back(message);
    }
  }

 private:
  const json& doc_;
  std::string name_;
  std::set<std::string> consumed_;
};

CurvatureFamily parse_family(const std::string& value) {
  if (value == "straight") return CurvatureFamily::straight;
  if (value == "arc") return CurvatureFamily::arc;
  if (value == "cubic") return CurvatureFamily::cubic;
  if (value == "s_curve") return CurvatureFamily::s_curve;
  throw ConfigError("config: unknown curvature family: scene.family = " + value);
}

ScoreMode parse_score_mode(const std::string& value) {
  if (value == "cls_only") return ScoreMode::cls_only;
  if (value == "cri") return ScoreMode::cri;
  throw ConfigError("config: unknown score mode: postprocess.score_mode = " + value);
}

void validate(const Config& cfg) {
  if (cfg.width.half_width <= 0.0) {
    throw ConfigError("config: width_model.half_width must be positive");
  }
  if (cfg.assign.lambda < 0.0 || cfg.assign.k_max < 1 || cfg.assign.k_max > cfg.assign.top_t) {
    throw ConfigError("config: assign requires lambda >= 0 and 1 <= k_max <= top_t");
  }
  if (cfg.cri.beta0 < 0.0 || cfg.cri.beta1 < 0.0 || cfg.cri.beta0 + cfg.cri.beta1 <= 0.0) {
    throw ConfigError("config: cri coefficients must be nonnegative with a positive sum");
  }
  if (cfg.modulation.gamma < 0.0) {
    throw ConfigError("config: modulation.gamma must be nonnegative");
  }
  if (cfg.loss_weights.reg < 0.0 || cfg.loss_weights.iou < 0.0 || cfg.loss_weights.cls < 0.0 ||
      cfg.loss_weights.fid < 0.0 || cfg.loss_weights.seg < 0.0) {
    throw ConfigError("config: loss weights must be nonnegative");
  }
  if (cfg.postprocess.top_k < 1 || cfg.postprocess.nms_iou_threshold <= 0.0 ||
      cfg.postprocess.nms_iou_threshold > 1.0) {
    throw ConfigError("config: postprocess requires top_k >= 1 and nms threshold in (0, 1]");
  }
  if (cfg.eval.mask_width < 1.0) {
    throw ConfigError("config: eval.mask_width must be at least 1 pixel");
  }
  for (double t : cfg.eval.iou_thresholds) {
    if (t <= 0.0 || t > 1.0) {
      throw ConfigError("config: eval.iou_thresholds must lie in (0, 1]");
    }
  }
  if (cfg.scene.n_lanes < 0 || cfg.scene.spacing <= 2.0 * cfg.width.half_width) {
    throw ConfigError("config: scene.spacing must exceed twice the lane half-width");
  }
  if (cfg.noise.sigma_geo < 0.0 || cfg.noise.sigma_p < 0.0 || cfg.noise.sigma_q < 0.0 ||
      cfg.noise.feature_noise < 0.0 || cfg.noise.rho < 0.0 || cfg.noise.rho > 1.0) {
    throw ConfigError("config: noise sigmas must be nonnegative and rho in [0, 1]");
  }
  if (cfg.train.step_size <= 0.0 || cfg.train.momentum < 0.0 || cfg.train.momentum >= 1.0 ||
      cfg.train.iterations < 1) {
    throw ConfigError("config: train requires step_size > 0, momentum in [0, 1), iterations >= 1");
  }
}

}  // namespace

Config preset_config(const std::string& name) {
  Config cfg;
  cfg.grid = build_grid(320.0, 800.0, 72);
  cfg.preset = name;
  if (name == "assumed-defaults" || name == "culane") {
    cfg.cri = CriConfig{0.4, 0.6};
    cfg.loss_weights.fid = 0.7;
  } else if (name == "curvelanes") {
    cfg.cri = CriConfig{0.6, 0.4};
    cfg.loss_weights.fid = 1.0;
  } else {
    throw ConfigError("config: unknown preset: " + name);
  }
  return cfg;
}

Config load_config(const std::string& json_text, bool lenient,
                   std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config: document root must be an object");
  }

  const std::string preset =
      doc.contains("preset") ? doc.at("preset").get<std::string>() : "assumed-defaults";
  Config cfg = preset_config(preset);

  const std::set<std::string> known_sections = {
      "preset", "grid",  "width_model", "assign", "cri",   "modulation",
      "loss_weights", "postprocess", "eval",   "scene",  "noise", "train"};
  for (const auto& [key, value] : doc.items()) {
    if (known_sections.count(key) != 0) continue;
    const std::string message = "config: unknown key: " + key;
    if (!lenient) throw ConfigError(message);
    if (warnings != nullptr) warnings->push_back(message);
  }

  if (doc.contains("grid")) {
    Section s(doc.at("grid"), "grid");
    const double height = s.require<double>("height");
    const double width = s.require<double>("width");
    const int points = s.require<int>("points");
    s.finish(lenient, warnings);
    try {
      cfg.grid = build_grid(height, width, points);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: grid: ") + e.what());
    }
  }
  if (doc.contains("width_model")) {
    Section s(doc.at("width_model"), "width_model");
    cfg.width.half_width = s.require<double>("half_width");
    cfg.width.tilt_compensated = s.require<bool>("tilt_compensated");
    s.finish(lenient, warnings);
  }
  if (doc.contains("assign")) {
    Section s(doc.at("assign"), "assign");
    cfg.assign.lambda = s.require<double>("lambda");
    cfg.assign.top_t = s.require<int>("top_t");
    cfg.assign.k_max = s.require<int>("k_max");
    s.finish(lenient, warnings);
  }
  if (doc.contains("cri")) {
    Section s(doc.at("cri"), "cri");
    cfg.cri.beta0 = s.require<double>("beta0");
    cfg.cri.beta1 = s.require<double>("beta1");
    s.finish(lenient, warnings);
  }
  if (doc.contains("modulation")) {
    Section s(doc.at("modulation"), "modulation");
    cfg.modulation.gamma = s.require<double>("gamma");
    s.finish(lenient, warnings);
  }
  if (doc.contains("loss_weights")) {
    Section s(doc.at("loss_weights"), "loss_weights");
    cfg.loss_weights.reg = s.require<double>("reg");
    cfg.loss_weights.iou = s.require<double>("iou");
    cfg.loss_weights.cls = s.require<double>("cls");
    cfg.loss_weights.fid = s.require<double>("fid");
    cfg.loss_weights.seg = s.require<double>("seg");
    s.finish(lenient, warnings);
  }
  if (doc.contains("postprocess")) {
    Section s(doc.at("postprocess"), "postprocess");
    cfg.postprocess.score_threshold = s.require<double>("score_threshold");
    cfg.postprocess.nms_iou_threshold = s.require<double>("nms_iou_threshold");
    cfg.postprocess.top_k = s.require<int>("top_k");
    cfg.postprocess.score_mode = parse_score_mode(s.require<std::string>("score_mode"));
    s.finish(lenient, warnings);
  }
  if (doc.contains("eval")) {
    Section s(doc.at("eval"), "eval");
    cfg.eval.mask_width = s.require<double>("mask_width");
    cfg.eval.iou_thresholds = s.require<std::vector<double>>("iou_thresholds");
    cfg.eval.height = s.require<int>("height");
    cfg.eval.width = s.require<int>("width");
    cfg.eval.strict_greater = s.require<bool>("strict_greater");
    s.finish(lenient, warnings);
  }
  if (doc.contains("scene")) {
    Section s(doc.at("scene"), "scene");
    cfg.scene.n_lanes = s.require<int>("n_lanes");
    cfg.scene.family = parse_family(s.require<std::string>("family"));
    cfg.scene.curvature = s.require<double>("curvature");
    cfg.scene.spacing = s.require<double>("spacing");
    cfg.scene.seed = s.require<std::uint64_t>("seed");
    cfg.scene.priors_per_gt = s.require<int>("priors_per_gt");
    cfg.scene.background_priors = s.require<int>("background_priors");
    cfg.scene.feature_channels = s.require<int>("feature_channels");
    cfg.scene.feature_samples = s.require<int>("feature_samples");
    s.finish(lenient, warnings);
  }
  if (doc.contains("noise")) {
    Section s(doc.at("noise"), "noise");
    cfg.noise.sigma_geo = s.require<double>("sigma_geo");
    cfg.noise.sigma_p = s.require<double>("sigma_p");
    cfg.noise.sigma_q = s.require<double>("sigma_q");
    cfg.noise.rho = s.require<double>("rho");
    cfg.noise.feature_noise = s.require<double>("feature_noise");
    s.finish(lenient, warnings);
  }
  if (doc.contains("train")) {
    Section s(doc.at("train"), "train");
    cfg.train.step_size = s.require<double>("step_size");
    cfg.train.momentum = s.require<double>("momentum");
    cfg.train.iterations = s.require<int>("iterations");
    cfg.train.batch_scenes = s.require<int>("batch_scenes");
    cfg.train.seed = s.require<std::uint64_t>("seed");
    cfg.train.train_fidelity_head = s.require<bool>("train_fidelity_head");
    cfg.train.hidden_channels = s.require<int>("hidden_channels");
    s.finish(lenient, warnings);
  }
  cfg.train.loss_weights = cfg.loss_weights;

  validate(cfg);
  return cfg;
}

}  // namespace lanegeom
