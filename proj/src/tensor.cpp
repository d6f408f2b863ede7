#include "liftkg/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace liftkg {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw std::invalid_argument("shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(data.size()));
  }
}

Tensor Tensor::full(Shape s, double v) {
  Tensor t(std::move(s));
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

int64_t Tensor::rows() const {
  if (shape.size() != 2) throw std::logic_error("rows() on non-2D tensor " + shape_str(shape));
  return shape[0];
}

int64_t Tensor::cols() const {
  if (shape.size() != 2) throw std::logic_error("cols() on non-2D tensor " + shape_str(shape));
  return shape[1];
}

Tensor Tensor::reshaped(Shape new_shape) const {
  if (shape_numel(new_shape) != numel()) {
    throw std::invalid_argument("cannot reshape " + shape_str(shape) + " to " +
                                shape_str(new_shape));
  }
  return Tensor(std::move(new_shape), data);
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace liftkg
