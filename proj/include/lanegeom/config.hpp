#pragma once

#include <string>
#include <vector>

#include "lanegeom/assign.hpp"
#include "lanegeom/calibrate.hpp"
#include "lanegeom/evaluate.hpp"
#include "lanegeom/losses.hpp"
#include "lanegeom/overlap.hpp"
#include "lanegeom/postprocess.hpp"
#include "lanegeom/refine.hpp"
#include "lanegeom/synthio.hpp"
#include "lanegeom/train_toy.hpp"

namespace lanegeom {

struct Config {
  std::string preset = "assumed-defaults";
  SampleGrid grid;
  WidthModel width;
  AssignConfig assign;
  CriConfig cri;
  ModulationConfig modulation;
  LossWeights loss_weights;
  PostprocessConfig postprocess;
  EvalConfig eval;
  SceneSpec scene;
  NoiseModel noise;
  TrainConfig train;
};

// Named profiles: "assumed-defaults", "culane" (beta 0.4/0.6, fidelity loss
// weight 0.7) and "curvelanes" (beta 0.6/0.4, fidelity loss weight 1.0).
Config preset_config(const std::string& name);

// Strict-schema loader. The document may name a preset; any section present
// must be complete (all keys given) and overrides the preset. Unknown keys
// are errors unless `lenient` downgrades them to collected warnings.
Config load_config(const std::string& json_text, bool lenient = false,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace lanegeom
