#include "liftkg/raw_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace liftkg {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace

ConvDims conv_dims(const Shape& input, const Shape& kernels, int stride, int padding) {
  require(kernels.size() == 4, "transposed_conv2d kernels must be [C_in x C_out x K x K], got " +
                                   shape_str(kernels));
  require(kernels[2] == kernels[3],
          "transposed_conv2d kernel must be square, got " + shape_str(kernels));
  require(input.size() == 3 || input.size() == 4,
          "transposed_conv2d input must be rank 3 or 4, got " + shape_str(input));
  ConvDims d{};
  d.batched = input.size() == 4;
  d.batch = d.batched ? input[0] : 1;
  d.c_in = input[d.batched ? 1 : 0];
  d.in_size = input[d.batched ? 2 : 1];
  require(input[d.batched ? 3 : 2] == d.in_size,
          "transposed_conv2d input feature map must be square, got " + shape_str(input));
  require(d.c_in == kernels[0], "transposed_conv2d channel mismatch: input " + shape_str(input) +
                                    " vs kernels " + shape_str(kernels));
  d.c_out = kernels[1];
  d.k = kernels[2];
  require(stride >= 1 && padding >= 0, "transposed_conv2d requires stride >= 1, padding >= 0");
  d.out_size = (d.in_size - 1) * stride - 2 * static_cast<int64_t>(padding) + d.k;
  if (d.out_size <= 0) {
    throw std::invalid_argument(
        "transposed_conv2d output size " + std::to_string(d.out_size) + " not positive (I=" +
        std::to_string(d.in_size) + ", K=" + std::to_string(d.k) + ", stride=" +
        std::to_string(stride) + ", padding=" + std::to_string(padding) + ")");
  }
  return d;
}

Tensor transposed_conv2d_value(const Tensor& input, const Tensor& kernels, int stride,
                               int padding) {
  ConvDims d = conv_dims(input.shape, kernels.shape, stride, padding);
  Tensor out = d.batched ? Tensor({d.batch, d.c_out, d.out_size, d.out_size})
                         : Tensor({d.c_out, d.out_size, d.out_size});
  const int64_t in_map = d.in_size * d.in_size;
  const int64_t out_map = d.out_size * d.out_size;
  const int64_t k2 = d.k * d.k;
  for (int64_t b = 0; b < d.batch; ++b) {
    const double* in_b = input.data.data() + b * d.c_in * in_map;
    double* out_b = out.data.data() + b * d.c_out * out_map;
    for (int64_t ci = 0; ci < d.c_in; ++ci) {
      const double* in_c = in_b + ci * in_map;
      const double* ker_ci = kernels.data.data() + ci * d.c_out * k2;
      for (int64_t iy = 0; iy < d.in_size; ++iy) {
        for (int64_t ix = 0; ix < d.in_size; ++ix) {
          const double v = in_c[iy * d.in_size + ix];
          if (v == 0.0) continue;
          const int64_t y0 = iy * stride - padding;
          const int64_t x0 = ix * stride - padding;
          for (int64_t co = 0; co < d.c_out; ++co) {
            const double* ker = ker_ci + co * k2;
            double* out_c = out_b + co * out_map;
            for (int64_t ky = 0; ky < d.k; ++ky) {
              const int64_t y = y0 + ky;
              if (y < 0 || y >= d.out_size) continue;
              double* out_row = out_c + y * d.out_size;
              const double* ker_row = ker + ky * d.k;
              for (int64_t kx = 0; kx < d.k; ++kx) {
                const int64_t x = x0 + kx;
                if (x < 0 || x >= d.out_size) continue;
                out_row[x] += v * ker_row[kx];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void tanh_inplace(Tensor& t) {
  for (double& v : t.data) v = std::tanh(v);
}

}  // namespace liftkg
