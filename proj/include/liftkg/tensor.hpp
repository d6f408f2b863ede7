#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace liftkg {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Dumb value type: all structure
/// (gradients, graph) lives on the Tape.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}
  Tensor(Shape s, std::vector<double> d);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t rows() const;
  int64_t cols() const;

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  double* row_ptr(int64_t r) { return data.data() + r * cols(); }
  const double* row_ptr(int64_t r) const { return data.data() + r * cols(); }

  /// Same data, new shape; element count must match.
  Tensor reshaped(Shape new_shape) const;

  bool all_finite() const;
};

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace liftkg
