#include "lanegeom/refine.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "lanegeom/errors.hpp"
#include "lanegeom/geometry.hpp"

namespace lanegeom {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

FeatureMap conv1d_forward(const FeatureMap& in, const Conv1dParams& p) {
  const int pad = p.taps / 2;
  FeatureMap out = FeatureMap::zeros(p.out_channels, in.samples);
  for (int o = 0; o < p.out_channels; ++o) {
    for (int s = 0; s < in.samples; ++s) {
      double acc = p.bias[static_cast<std::size_t>(o)];
      for (int c = 0; c < p.in_channels; ++c) {
        for (int t = 0; t < p.taps; ++t) {
          const int src = s + t - pad;
          if (src < 0 || src >= in.samples) continue;
          acc += p.weight(o, c, t) * in.at(c, src);
        }
      }
      out.at(o, s) = acc;
    }
  }
  return out;
}

// Accumulates weight/bias gradients and returns the input gradient.
FeatureMap conv1d_backward(const FeatureMap& in, const Conv1dParams& p, const FeatureMap& grad_out,
                           Conv1dParams& grad_p) {
  const int pad = p.taps / 2;
  FeatureMap grad_in = FeatureMap::zeros(in.channels, in.samples);
  for (int o = 0; o < p.out_channels; ++o) {
    for (int s = 0; s < in.samples; ++s) {
      const double g = grad_out.at(o, s);
      if (g == 0.0) continue;
      grad_p.bias[static_cast<std::size_t>(o)] += g;
      for (int c = 0; c < p.in_channels; ++c) {
        for (int t = 0; t < p.taps; ++t) {
          const int src = s + t - pad;
          if (src < 0 || src >= in.samples) continue;
          grad_p.weight(o, c, t) += g * in.at(c, src);
          grad_in.at(c, src) += g * p.weight(o, c, t);
        }
      }
    }
  }
  return grad_in;
}

void check_shapes(const FeatureMap& feature, const AglrParams& params) {
  if (feature.channels != params.conv1.in_channels ||
      feature.channels != params.residual.in_channels) {
    throw std::invalid_argument("aglr_forward: feature channel count does not match parameters");
  }
  if (params.conv1.out_channels != params.conv2.in_channels ||
      params.conv2.out_channels != params.residual.out_channels ||
      params.offset_head.in_channels != params.conv2.out_channels ||
      params.gate_head.in_channels != params.conv2.out_channels ||
      params.offset_head.out_channels != 1 || params.gate_head.out_channels != 1) {
    throw std::invalid_argument("aglr_forward: inconsistent parameter shapes");
  }
  for (double v : feature.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("aglr_forward: non-finite feature values");
    }
  }
}

}  // namespace

Conv1dParams make_conv1d(int in_channels, int out_channels, int taps) {
  Conv1dParams p;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.taps = taps;
  p.weights.assign(static_cast<std::size_t>(in_channels) * out_channels * taps, 0.0);
  p.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  return p;
}

AglrParams make_aglr_params(int in_channels, int hidden_channels, double gate_bias) {
  AglrParams p;
  p.conv1 = make_conv1d(in_channels, hidden_channels, 3);
  p.conv2 = make_conv1d(hidden_channels, hidden_channels, 3);
  p.residual = make_conv1d(in_channels, hidden_channels, 1);
  p.offset_head = make_conv1d(hidden_channels, 1, 3);
  p.gate_head = make_conv1d(hidden_channels, 1, 3);
  p.gate_head.bias[0] = gate_bias;
  return p;
}

AglrParams random_aglr_params(int in_channels, int hidden_channels, std::uint64_t seed,
                              double scale, double gate_bias) {
  AglrParams p = make_aglr_params(in_channels, hidden_channels, gate_bias);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Conv1dParams* conv :
       {&p.conv1, &p.conv2, &p.residual, &p.offset_head, &p.gate_head}) {
    for (double& w : conv->weights) w = dist(rng);
  }
  return p;
}

AglrOutput aglr_forward(const FeatureMap& feature, const AglrParams& params, int n_out) {
  check_shapes(feature, params);
  if (feature.samples < 2 || n_out < 2) {
    throw std::invalid_argument("aglr_forward: need at least 2 samples on both sides");
  }

  AglrOutput out;
  out.cache.input = feature;
  out.cache.pre1 = conv1d_forward(feature, params.conv1);
  out.cache.act1 = out.cache.pre1;
  for (double& v : out.cache.act1.data) v = std::max(v, 0.0);

  out.cache.fused = conv1d_forward(out.cache.act1, params.conv2);
  const FeatureMap res = conv1d_forward(feature, params.residual);
  for (std::size_t i = 0; i < out.cache.fused.data.size(); ++i) {
    out.cache.fused.data[i] += res.data[i];
  }

  const FeatureMap offsets = conv1d_forward(out.cache.fused, params.offset_head);
  const FeatureMap gate_logits = conv1d_forward(out.cache.fused, params.gate_head);

  const int s_len = feature.samples;
  out.offsets.assign(offsets.data.begin(), offsets.data.begin() + s_len);
  out.cache.gate_logits.assign(gate_logits.data.begin(), gate_logits.data.begin() + s_len);
  out.gates.resize(static_cast<std::size_t>(s_len));
  out.gated.resize(static_cast<std::size_t>(s_len));
  for (int s = 0; s < s_len; ++s) {
    out.gates[static_cast<std::size_t>(s)] = sigmoid(out.cache.gate_logits[static_cast<std::size_t>(s)]);
    out.gated[static_cast<std::size_t>(s)] =
        out.gates[static_cast<std::size_t>(s)] * out.offsets[static_cast<std::size_t>(s)];
  }
  out.resampled = resample_linear(out.gated, n_out);

  out.cache.params = params;
  out.cache.n_out = n_out;
  out.cache.present = true;
  return out;
}

AglrGradients aglr_backward(const AglrOutput& output, const std::vector<double>& grad_resampled) {
  if (!output.cache.present) {
    throw std::invalid_argument("aglr_backward: forward cache missing");
  }
  const AglrParams& params = output.cache.params;
  const int s_len = output.cache.input.samples;
  const int n_out = output.cache.n_out;
  if (static_cast<int>(grad_resampled.size()) != n_out) {
    throw std::invalid_argument("aglr_backward: upstream gradient length mismatch");
  }

  AglrGradients grads;
  grads.params = make_aglr_params(params.conv1.in_channels, params.conv1.out_channels, 0.0);
  grads.params.gate_head.bias[0] = 0.0;

  // Transpose of the linear resampling.
  std::vector<double> grad_gated(static_cast<std::size_t>(s_len), 0.0);
  for (int j = 0; j < n_out; ++j) {
    const double pos = static_cast<double>(j) * (s_len - 1) / static_cast<double>(n_out - 1);
    int lo = static_cast<int>(std::floor(pos));
    if (lo >= s_len - 1) lo = s_len - 2;
    const double t = pos - lo;
    grad_gated[static_cast<std::size_t>(lo)] += (1.0 - t) * grad_resampled[static_cast<std::size_t>(j)];
    grad_gated[static_cast<std::size_t>(lo) + 1] += t * grad_resampled[static_cast<std::size_t>(j)];
  }

  // Gating product and sigmoid.
  FeatureMap grad_offsets = FeatureMap::zeros(1, s_len);
  FeatureMap grad_gate_logits = FeatureMap::zeros(1, s_len);
  for (int s = 0; s < s_len; ++s) {
    const double g = output.gates[static_cast<std::size_t>(s)];
    const double r = output.offsets[static_cast<std::size_t>(s)];
    grad_offsets.at(0, s) = grad_gated[static_cast<std::size_t>(s)] * g;
    grad_gate_logits.at(0, s) = grad_gated[static_cast<std::size_t>(s)] * r * g * (1.0 - g);
  }

  // Heads back into the fused embedding.
  FeatureMap grad_fused =
      conv1d_backward(output.cache.fused, params.offset_head, grad_offsets, grads.params.offset_head);
  const FeatureMap grad_fused_gate =
      conv1d_backward(output.cache.fused, params.gate_head, grad_gate_logits, grads.params.gate_head);
  for (std::size_t i = 0; i < grad_fused.data.size(); ++i) {
    grad_fused.data[i] += grad_fused_gate.data[i];
  }

  // Main path: conv2 then ReLU then conv1.
  FeatureMap grad_act1 =
      conv1d_backward(output.cache.act1, params.conv2, grad_fused, grads.params.conv2);
  for (std::size_t i = 0; i < grad_act1.data.size(); ++i) {
    if (output.cache.pre1.data[i] <= 0.0) grad_act1.data[i] = 0.0;
  }
  grads.feature =
      conv1d_backward(output.cache.input, params.conv1, grad_act1, grads.params.conv1);

  // Residual path.
  const FeatureMap grad_res_in =
      conv1d_backward(output.cache.input, params.residual, grad_fused, grads.params.residual);
  for (std::size_t i = 0; i < grads.feature.data.size(); ++i) {
    grads.feature.data[i] += grad_res_in.data[i];
  }
  return grads;
}

std::vector<double> modulate(const std::vector<double>& offsets, double fidelity,
                             const ModulationConfig& cfg) {
  if (fidelity < 0.0 || fidelity > 1.0 || cfg.gamma < 0.0) {
    throw std::invalid_argument("modulate: fidelity must be in [0,1] and gamma nonnegative");
  }
  const double factor = std::pow(1.0 - fidelity, cfg.gamma);
  std::vector<double> out(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) out[i] = factor * offsets[i];
  return out;
}

double linear_head(std::span<const double> feature, std::span<const double> weights, double bias,
                   Activation activation) {
  if (feature.size() != weights.size()) {
    throw std::invalid_argument("linear_head: feature/weight lengths differ");
  }
  double z = bias;
  for (std::size_t i = 0; i < feature.size(); ++i) z += feature[i] * weights[i];
  return activation == Activation::sigmoid ? sigmoid(z) : z;
}

namespace {

nlohmann::json tensor_json(const std::string& name, std::vector<int> shape,
                           const std::vector<double>& values) {
  return nlohmann::json{{"name", name}, {"shape", shape}, {"values", values}};
}

void load_tensor(const nlohmann::json& entry, const std::string& name, std::vector<int> shape,
                 std::vector<double>& dst) {
  if (entry.at("name").get<std::string>() != name) {
    throw DataError("checkpoint: expected tensor '" + name + "', found '" +
                    entry.at("name").get<std::string>() + "'");
  }
  if (entry.at("shape").get<std::vector<int>>() != shape) {
    throw DataError("checkpoint: tensor '" + name + "' has unexpected shape");
  }
  dst = entry.at("values").get<std::vector<double>>();
  std::size_t expected = 1;
  for (int d : shape) expected *= static_cast<std::size_t>(d);
  if (dst.size() != expected) {
    throw DataError("checkpoint: tensor '" + name + "' value count does not match shape");
  }
}

}  // namespace

std::string aglr_params_to_json(const AglrParams& p) {
  const int ci = p.conv1.in_channels;
  const int ch = p.conv1.out_channels;
  nlohmann::json tensors = nlohmann::json::array();
  tensors.push_back(tensor_json("conv1.weight", {ch, ci, 3}, p.conv1.weights));
  tensors.push_back(tensor_json("conv1.bias", {ch}, p.conv1.bias));
  tensors.push_back(tensor_json("conv2.weight", {ch, ch, 3}, p.conv2.weights));
  tensors.push_back(tensor_json("conv2.bias", {ch}, p.conv2.bias));
  tensors.push_back(tensor_json("residual.weight", {ch, ci, 1}, p.residual.weights));
  tensors.push_back(tensor_json("residual.bias", {ch}, p.residual.bias));
  tensors.push_back(tensor_json("offset_head.weight", {1, ch, 3}, p.offset_head.weights));
  tensors.push_back(tensor_json("offset_head.bias", {1}, p.offset_head.bias));
  tensors.push_back(tensor_json("gate_head.weight", {1, ch, 3}, p.gate_head.weights));
  tensors.push_back(tensor_json("gate_head.bias", {1}, p.gate_head.bias));
  return nlohmann::json{{"tensors", tensors}}.dump(2);
}

AglrParams aglr_params_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != 10) {
      throw DataError("checkpoint: expected 10 tensors");
    }
    const auto shape0 = tensors.at(0).at("shape").get<std::vector<int>>();
    if (shape0.size() != 3) throw DataError("checkpoint: conv1.weight must be rank 3");
    const int ch = shape0[0];
    const int ci = shape0[1];
    AglrParams p = make_aglr_params(ci, ch, 0.0);
    load_tensor(tensors.at(0), "conv1.weight", {ch, ci, 3}, p.conv1.weights);
    load_tensor(tensors.at(1), "conv1.bias", {ch}, p.conv1.bias);
    load_tensor(tensors.at(2), "conv2.weight", {ch, ch, 3}, p.conv2.weights);
    load_tensor(tensors.at(3), "conv2.bias", {ch}, p.conv2.bias);
    load_tensor(tensors.at(4), "residual.weight", {ch, ci, 1}, p.residual.weights);
    load_tensor(tensors.at(5), "residual.bias", {ch}, p.residual.bias);
    load_tensor(tensors.at(6), "offset_head.weight", {1, ch, 3}, p.offset_head.weights);
    load_tensor(tensors.at(7), "offset_head.bias", {1}, p.offset_head.bias);
    load_tensor(tensors.at(8), "gate_head.weight", {1, ch, 3}, p.gate_head.weights);
    load_tensor(tensors.at(9), "gate_head.bias", {1}, p.gate_head.bias);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed tensor container: ") + e.what());
  }
}

}  // namespace lanegeom
