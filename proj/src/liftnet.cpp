#include "liftkg/liftnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liftkg/raw_ops.hpp"
#include "liftkg/rng.hpp"

namespace liftkg {

namespace {

int64_t isqrt_exact(int64_t n) {
  if (n < 0) return -1;
  const int64_t r = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
  for (int64_t c = std::max<int64_t>(0, r - 1); c <= r + 1; ++c) {
    if (c * c == n) return c;
  }
  return -1;
}

}  // namespace

int64_t tc_output_size(int64_t in_size, int kernel, int stride, int padding) {
  if (in_size < 1 || kernel < 1 || stride < 1 || padding < 0) {
    throw std::invalid_argument("tc_output_size: need in_size>=1, kernel>=1, stride>=1, padding>=0");
  }
  const int64_t out = (in_size - 1) * stride - 2 * static_cast<int64_t>(padding) + kernel;
  if (out <= 0) {
    throw std::invalid_argument("tc_output_size: non-positive output " + std::to_string(out) +
                                " for (I=" + std::to_string(in_size) + ", K=" +
                                std::to_string(kernel) + ", s=" + std::to_string(stride) +
                                ", p=" + std::to_string(padding) + ")");
  }
  return out;
}

int64_t LiftNetConfig::input_side() const {
  const int64_t side = isqrt_exact(input_dim);
  if (side < 1) {
    throw std::invalid_argument("liftnet input_dim " + std::to_string(input_dim) +
                                " is not a positive perfect square");
  }
  return side;
}

void LiftNetConfig::validate() const {
  const int64_t side = input_side();
  if (layers.empty()) throw std::invalid_argument("liftnet needs at least one TC layer");
  if (layers.front().in_channels != 1) {
    throw std::invalid_argument("first TC layer must take 1 channel (square reshape of the input)");
  }
  int64_t size = side;
  int channels = 1;
  for (size_t i = 0; i < layers.size(); ++i) {
    const TCLayerSpec& l = layers[i];
    if (l.kernel < 1 || l.stride < 1 || l.padding < 0 || l.in_channels < 1 || l.out_channels < 1) {
      throw std::invalid_argument("malformed TC layer spec at layer " + std::to_string(i));
    }
    if (l.in_channels != channels) {
      throw std::invalid_argument("TC layer " + std::to_string(i) + " expects " +
                                  std::to_string(l.in_channels) + " channels but gets " +
                                  std::to_string(channels));
    }
    size = tc_output_size(size, l.kernel, l.stride, l.padding);
    channels = l.out_channels;
  }
  if (channels * size * size != output_dim) {
    throw std::invalid_argument("liftnet layers produce " + std::to_string(channels) + "x" +
                                std::to_string(size) + "x" + std::to_string(size) + " = " +
                                std::to_string(channels * size * size) + ", expected output_dim " +
                                std::to_string(output_dim));
  }
}

LiftNetConfig default_liftnet_config() {
  LiftNetConfig cfg;
  cfg.input_dim = 16;
  cfg.output_dim = 512;
  cfg.layers = {{1, 4, 3, 1, 0}, {4, 8, 3, 1, 0}};
  return cfg;
}

int64_t param_count_liftnet(const LiftNetConfig& cfg) {
  int64_t total = 0;
  for (const TCLayerSpec& l : cfg.layers) {
    total += static_cast<int64_t>(l.in_channels) * l.out_channels * l.kernel * l.kernel;
  }
  return total;
}

LiftNetParams init_liftnet_params(const LiftNetConfig& cfg, uint64_t seed) {
  cfg.validate();
  LiftNetParams params;
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const TCLayerSpec& l = cfg.layers[i];
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel * l.kernel;
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel * l.kernel;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    auto rng = make_rng(seed, 0x71c0 + i);
    Tensor k({l.in_channels, l.out_channels, l.kernel, l.kernel});
    for (int64_t j = 0; j < k.numel(); ++j) k[j] = draw_uniform(rng, -bound, bound);
    params.kernels.push_back(std::move(k));
  }
  return params;
}

Value lift_forward(Tape& tape, Value input, const LiftNetConfig& cfg,
                   const std::vector<Value>& kernel_values) {
  cfg.validate();
  if (kernel_values.size() != cfg.layers.size()) {
    throw std::invalid_argument("liftnet kernel count mismatch: " +
                                std::to_string(kernel_values.size()) + " tensors for " +
                                std::to_string(cfg.layers.size()) + " layers");
  }
  const Tensor& in = tape.value(input);
  if (in.shape.size() != 2 || in.shape[1] != cfg.input_dim) {
    throw std::invalid_argument("lift_forward expects [batch x " + std::to_string(cfg.input_dim) +
                                "], got " + shape_str(in.shape));
  }
  const int64_t batch = in.shape[0];
  const int64_t side = cfg.input_side();
  Value x = tape.reshape(input, {batch, 1, side, side});
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const TCLayerSpec& l = cfg.layers[i];
    x = tape.transposed_conv2d(x, kernel_values[i], l.stride, l.padding);
    x = tape.tanh(x);
  }
  return tape.reshape(x, {batch, cfg.output_dim});
}

Tensor lift_forward_value(const Tensor& input, const LiftNetConfig& cfg,
                          const LiftNetParams& params) {
  cfg.validate();
  if (input.shape.size() != 2 || input.shape[1] != cfg.input_dim) {
    throw std::invalid_argument("lift_forward expects [batch x " + std::to_string(cfg.input_dim) +
                                "], got " + shape_str(input.shape));
  }
  const int64_t batch = input.shape[0];
  const int64_t side = cfg.input_side();
  Tensor x = input.reshaped({batch, 1, side, side});
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const TCLayerSpec& l = cfg.layers[i];
    x = transposed_conv2d_value(x, params.kernels[i], l.stride, l.padding);
    tanh_inplace(x);
  }
  return x.reshaped({batch, cfg.output_dim});
}

namespace {

// Channel ladder ending at final_channels: ..., c/4, c/2, c (clamped at 1).
std::vector<int> channel_ladder(int num_layers, int64_t final_channels) {
  std::vector<int> out(static_cast<size_t>(num_layers));
  for (int i = 0; i < num_layers; ++i) {
    const int64_t shifted = final_channels >> (num_layers - 1 - i);
    out[static_cast<size_t>(i)] = static_cast<int>(std::max<int64_t>(1, shifted));
  }
  return out;
}

struct PlanCandidate {
  LiftNetConfig cfg;
  int64_t params = 0;
  int total_kernel = 0;
  int stride = 0;
  int padding = 0;
  bool valid = false;
};

// All (kernel, stride, padding) shared across layers; best by fewest
// parameters, then smallest total kernel size, then stride, then padding.
PlanCandidate search_ladder(int64_t input_dim, int64_t output_dim,
                            const std::vector<int>& channels) {
  const int64_t side = isqrt_exact(input_dim);
  PlanCandidate best;
  for (int kernel = 1; kernel <= 7; ++kernel) {
    for (int stride = 1; stride <= 3; ++stride) {
      for (int padding = 0; padding <= 1; ++padding) {
        int64_t size = side;
        bool ok = true;
        for (size_t i = 0; i < channels.size() && ok; ++i) {
          size = (size - 1) * stride - 2 * static_cast<int64_t>(padding) + kernel;
          if (size <= 0) ok = false;
        }
        if (!ok) continue;
        const int64_t final_c = channels.back();
        if (final_c * size * size != output_dim) continue;

        LiftNetConfig cfg;
        cfg.input_dim = input_dim;
        cfg.output_dim = output_dim;
        int in_c = 1;
        int64_t params = 0;
        for (int out_c : channels) {
          cfg.layers.push_back({in_c, out_c, kernel, stride, padding});
          params += static_cast<int64_t>(in_c) * out_c * kernel * kernel;
          in_c = out_c;
        }
        const int total_kernel = kernel * static_cast<int>(channels.size());
        const bool better =
            !best.valid ||
            std::tie(params, total_kernel, stride, padding) <
                std::tie(best.params, best.total_kernel, best.stride, best.padding);
        if (better) {
          best = {std::move(cfg), params, total_kernel, stride, padding, true};
        }
      }
    }
  }
  return best;
}

}  // namespace

LiftNetConfig plan_liftnet(int64_t input_dim, int64_t output_dim, int num_layers) {
  if (num_layers < 1 || num_layers > 4) {
    throw std::invalid_argument("plan_liftnet supports 1..4 layers, got " +
                                std::to_string(num_layers));
  }
  const int64_t side = isqrt_exact(input_dim);
  if (side < 1) {
    throw std::invalid_argument("plan_liftnet: input_dim " + std::to_string(input_dim) +
                                " is not a perfect square");
  }

  // Degenerate request: nothing to lift, return the identity-shape plan.
  if (num_layers == 1 && input_dim == output_dim) {
    LiftNetConfig cfg;
    cfg.input_dim = input_dim;
    cfg.output_dim = output_dim;
    cfg.layers = {{1, 1, 1, 1, 0}};
    cfg.validate();
    return cfg;
  }

  // Conventional doubling schedule first (1 -> 4 -> 8 -> 16 -> 32), then
  // ascending divisors of output_dim whose co-factor is a perfect square.
  std::vector<int64_t> final_channel_options;
  const int64_t scheduled = num_layers == 1 ? 4 : (4LL << (num_layers - 1));
  final_channel_options.push_back(scheduled);
  for (int64_t c = 1; c <= output_dim; ++c) {
    if (c == scheduled || output_dim % c != 0) continue;
    if (isqrt_exact(output_dim / c) < 0) continue;
    final_channel_options.push_back(c);
  }

  for (int64_t final_c : final_channel_options) {
    if (output_dim % final_c != 0 || isqrt_exact(output_dim / final_c) < 0) continue;
    PlanCandidate found = search_ladder(input_dim, output_dim,
                                        channel_ladder(num_layers, final_c));
    if (found.valid) {
      found.cfg.validate();
      return found.cfg;
    }
  }
  throw std::invalid_argument(
      "plan_liftnet: no feasible config for input_dim=" + std::to_string(input_dim) +
      ", output_dim=" + std::to_string(output_dim) + ", layers=" + std::to_string(num_layers) +
      " over kernel 1..7, stride 1..3, padding 0..1 with square-cofactor channel ladders");
}

void FCVariantConfig::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("fc variant needs >= 2 dims");
  for (int64_t d : layer_dims) {
    if (d < 1) throw std::invalid_argument("fc variant dims must be positive");
  }
}

FCVariantConfig plan_fc_variant(int64_t input_dim, int64_t output_dim, int num_layers) {
  if (num_layers < 1) throw std::invalid_argument("fc variant needs >= 1 layer");
  FCVariantConfig cfg;
  const double ratio = static_cast<double>(output_dim) / static_cast<double>(input_dim);
  cfg.layer_dims.push_back(input_dim);
  for (int i = 1; i < num_layers; ++i) {
    const double w = input_dim * std::pow(ratio, static_cast<double>(i) / num_layers);
    cfg.layer_dims.push_back(std::max<int64_t>(1, std::llround(w)));
  }
  cfg.layer_dims.push_back(output_dim);
  cfg.validate();
  return cfg;
}

int64_t param_count_fc_variant(const FCVariantConfig& cfg) {
  int64_t total = 0;
  for (size_t i = 0; i + 1 < cfg.layer_dims.size(); ++i) {
    total += cfg.layer_dims[i] * cfg.layer_dims[i + 1] + cfg.layer_dims[i + 1];
  }
  return total;
}

FCVariantParams init_fc_variant_params(const FCVariantConfig& cfg, uint64_t seed) {
  cfg.validate();
  FCVariantParams params;
  for (size_t i = 0; i + 1 < cfg.layer_dims.size(); ++i) {
    const int64_t in_d = cfg.layer_dims[i], out_d = cfg.layer_dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in_d + out_d));
    auto rng = make_rng(seed, 0xfc00 + i);
    Tensor w({in_d, out_d});
    for (int64_t j = 0; j < w.numel(); ++j) w[j] = draw_uniform(rng, -bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(Shape{out_d});
  }
  return params;
}

Value fc_variant_forward(Tape& tape, Value input, const FCVariantConfig& cfg,
                         const std::vector<Value>& weight_values,
                         const std::vector<Value>& bias_values) {
  cfg.validate();
  const size_t n_layers = cfg.layer_dims.size() - 1;
  if (weight_values.size() != n_layers || bias_values.size() != n_layers) {
    throw std::invalid_argument("fc variant parameter count mismatch");
  }
  Value x = input;
  for (size_t i = 0; i < n_layers; ++i) {
    x = tape.add_row_vector(tape.matmul(x, weight_values[i]), bias_values[i]);
    x = tape.tanh(x);
  }
  return x;
}

Tensor fc_variant_forward_value(const Tensor& input, const FCVariantConfig& cfg,
                                const FCVariantParams& params) {
  Tape tape;
  Value x = tape.constant(input);
  std::vector<Value> ws, bs;
  for (size_t i = 0; i < params.weights.size(); ++i) {
    ws.push_back(tape.leaf("w" + std::to_string(i), params.weights[i]));
    bs.push_back(tape.leaf("b" + std::to_string(i), params.biases[i]));
  }
  return tape.value(fc_variant_forward(tape, x, cfg, ws, bs));
}

}  // namespace liftkg
