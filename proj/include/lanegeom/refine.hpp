#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lanegeom {

// Dense channels-by-samples grid, row-major.
struct FeatureMap {
  int channels = 0;
  int samples = 0;
  std::vector<double> data;

  static FeatureMap zeros(int channels, int samples) {
    return FeatureMap{channels, samples,
                      std::vector<double>(static_cast<std::size_t>(channels) * samples, 0.0)};
  }
  double at(int c, int s) const { return data[static_cast<std::size_t>(c) * samples + s]; }
  double& at(int c, int s) { return data[static_cast<std::size_t>(c) * samples + s]; }
};

// 1D convolution, stride 1, zero padding chosen so output length equals
// input length (taps is 1 or 3).
struct Conv1dParams {
  int in_channels = 0;
  int out_channels = 0;
  int taps = 3;
  std::vector<double> weights;  // [out][in][taps], row-major
  std::vector<double> bias;     // [out]

  double weight(int out, int in, int tap) const {
    return weights[(static_cast<std::size_t>(out) * in_channels + in) * taps + tap];
  }
  double& weight(int out, int in, int tap) {
    return weights[(static_cast<std::size_t>(out) * in_channels + in) * taps + tap];
  }
};

Conv1dParams make_conv1d(int in_channels, int out_channels, int taps);

// Gated point-wise refinement block: a two-convolution residual trunk over
// the anchor feature, with parallel offset and gate heads.
struct AglrParams {
  Conv1dParams conv1;        // C_in -> C_h, 3-tap
  Conv1dParams conv2;        // C_h -> C_h, 3-tap
  Conv1dParams residual;     // C_in -> C_h, 1x1
  Conv1dParams offset_head;  // C_h -> 1, 3-tap
  Conv1dParams gate_head;    // C_h -> 1, 3-tap
};

// Zero-weight parameters with the gate bias set so refinement starts
// near-identity (gates ~ sigmoid(gate_bias)).
AglrParams make_aglr_params(int in_channels, int hidden_channels, double gate_bias = -2.0);

// Small random weights for training/tests; deterministic in `seed`.
AglrParams random_aglr_params(int in_channels, int hidden_channels, std::uint64_t seed,
                              double scale = 0.1, double gate_bias = -2.0);

struct AglrOutput {
  std::vector<double> offsets;    // r, length S
  std::vector<double> gates;      // g in (0,1), length S
  std::vector<double> gated;      // g * r, length S
  std::vector<double> resampled;  // length N

  struct Cache {
    bool present = false;
    FeatureMap input;
    FeatureMap pre1;   // conv1 output before ReLU
    FeatureMap act1;   // after ReLU
    FeatureMap fused;  // conv2(act1) + residual(input)
    std::vector<double> gate_logits;
    AglrParams params;
    int n_out = 0;
  } cache;
};

AglrOutput aglr_forward(const FeatureMap& feature, const AglrParams& params, int n_out);

struct AglrGradients {
  AglrParams params;   // same shapes as the forward parameters
  FeatureMap feature;  // gradient with respect to the input feature
};

// Reverse-mode gradients of the full forward composition, driven by the
// gradient with respect to the resampled output.
AglrGradients aglr_backward(const AglrOutput& output, const std::vector<double>& grad_resampled);

struct ModulationConfig {
  double gamma = 1.0;  // focal exponent
};

// Scales offsets by (1 - fidelity)^gamma so well-aligned candidates receive
// weaker correction.
std::vector<double> modulate(const std::vector<double>& offsets, double fidelity,
                             const ModulationConfig& cfg);

enum class Activation { sigmoid, identity };

double linear_head(std::span<const double> feature, std::span<const double> weights, double bias,
                   Activation activation);

// Flat named-tensor container (name, shape, row-major values).
std::string aglr_params_to_json(const AglrParams& params);
AglrParams aglr_params_from_json(const std::string& text);

}  // namespace lanegeom
