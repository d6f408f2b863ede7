#pragma once

#include "liftkg/tensor.hpp"

namespace liftkg {

struct ConvDims {
  int64_t batch, c_in, c_out, in_size, k, out_size;
  bool batched;
};

/// Validates shapes and computes O = (I-1)*stride - 2*padding + K.
/// Throws on non-positive output size or malformed shapes.
ConvDims conv_dims(const Shape& input, const Shape& kernels, int stride, int padding);

/// Forward-only transposed convolution, shared by the tape op and the
/// tape-free evaluation path.
Tensor transposed_conv2d_value(const Tensor& input, const Tensor& kernels, int stride,
                               int padding);

void tanh_inplace(Tensor& t);

}  // namespace liftkg
