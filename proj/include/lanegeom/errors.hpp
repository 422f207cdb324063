#pragma once

#include <stdexcept>
#include <string>

namespace lanegeom {

// Bad or inconsistent configuration (schema violations, invalid presets).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (lane files, prediction files, checkpoints).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lanegeom
