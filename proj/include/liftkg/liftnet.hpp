#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liftkg/tape.hpp"
#include "liftkg/tensor.hpp"

namespace liftkg {

struct TCLayerSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  friend bool operator==(const TCLayerSpec& a, const TCLayerSpec& b) {
    return a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
           a.kernel == b.kernel && a.stride == b.stride && a.padding == b.padding;
  }
};

/// Output spatial size of a transposed-conv layer: (I-1)*stride - 2*padding + kernel.
/// Throws if the result is not positive.
int64_t tc_output_size(int64_t in_size, int kernel, int stride, int padding);

/// Stack of TC layers lifting a [batch x input_dim] embedding (reshaped to a
/// single-channel square feature map) to [batch x output_dim].
struct LiftNetConfig {
  int64_t input_dim = 0;   // must be a perfect square
  int64_t output_dim = 0;  // must equal c * m^2 after the last layer
  std::vector<TCLayerSpec> layers;

  /// Throws unless input reshapes square, channels chain, and the chained
  /// output sizes give exactly output_dim.
  void validate() const;
  int64_t input_side() const;

  friend bool operator==(const LiftNetConfig& a, const LiftNetConfig& b) {
    return a.input_dim == b.input_dim && a.output_dim == b.output_dim && a.layers == b.layers;
  }
};

/// The paper-default two-layer net: 16 -> (1x4x4) -> (4x6x6) -> (8x8x8) -> 512.
LiftNetConfig default_liftnet_config();

struct LiftNetParams {
  std::vector<Tensor> kernels;  // [C_in x C_out x K x K] per layer, no biases
};

int64_t param_count_liftnet(const LiftNetConfig& cfg);

/// Glorot-uniform kernels with fan computed over C * K^2; deterministic per seed.
LiftNetParams init_liftnet_params(const LiftNetConfig& cfg, uint64_t seed);

/// Recorded forward pass: reshape -> (TC, tanh)* -> flatten. Tanh follows
/// every layer including the last, so outputs lie in (-1, 1).
Value lift_forward(Tape& tape, Value input, const LiftNetConfig& cfg,
                   const std::vector<Value>& kernel_values);

/// Tape-free forward pass for evaluation over frozen parameters.
Tensor lift_forward_value(const Tensor& input, const LiftNetConfig& cfg,
                          const LiftNetParams& params);

/// Deterministic config search: channel ladder ending at the conventional
/// doubling schedule (1 -> 4 -> 8 -> ...), one (kernel, stride, padding)
/// shared by all layers; candidates ranked by fewest parameters, then
/// smallest total kernel size. Throws if no searched config reaches
/// output_dim.
LiftNetConfig plan_liftnet(int64_t input_dim, int64_t output_dim, int num_layers);

/// Dense-layer variant used for comparisons; biases included.
struct FCVariantConfig {
  std::vector<int64_t> layer_dims;  // first = input dim, last = output dim

  void validate() const;
};

/// Hidden widths on a geometric progression from input_dim to output_dim.
FCVariantConfig plan_fc_variant(int64_t input_dim, int64_t output_dim, int num_layers);

struct FCVariantParams {
  std::vector<Tensor> weights;  // [d_i x d_{i+1}]
  std::vector<Tensor> biases;   // [d_{i+1}]
};

int64_t param_count_fc_variant(const FCVariantConfig& cfg);
FCVariantParams init_fc_variant_params(const FCVariantConfig& cfg, uint64_t seed);

/// Affine chain with tanh after every layer including the last, mirroring
/// the TC variant's activation policy.
Value fc_variant_forward(Tape& tape, Value input, const FCVariantConfig& cfg,
                         const std::vector<Value>& weight_values,
                         const std::vector<Value>& bias_values);

Tensor fc_variant_forward_value(const Tensor& input, const FCVariantConfig& cfg,
                                const FCVariantParams& params);

}  // namespace liftkg
