#include "liftkg/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "liftkg/raw_ops.hpp"

namespace liftkg {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

const Tensor* GradStore::find(const std::string& id) const {
  auto it = grads_.find(id);
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor& GradStore::get_or_create(const std::string& id, const Shape& shape) {
  auto it = grads_.find(id);
  if (it == grads_.end()) it = grads_.emplace(id, Tensor(shape)).first;
  return it->second;
}

void GradStore::accumulate(const std::string& id, Tensor grad) {
  auto it = grads_.find(id);
  if (it == grads_.end()) {
    grads_.emplace(id, std::move(grad));
    return;
  }
  Tensor& g = it->second;
  for (int64_t i = 0; i < g.numel(); ++i) g[i] += grad[i];
}

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{static_cast<int32_t>(nodes_.size() - 1)};
}

void Tape::check(Value v) const {
  if (v.node < 0 || static_cast<size_t>(v.node) >= nodes_.size()) {
    throw std::invalid_argument("value does not belong to this tape");
  }
}

Value Tape::leaf(std::string param_id, const Tensor& value) {
  Node n;
  n.op = Op::kLeaf;
  n.external = &value;
  n.leaf_id = std::move(param_id);
  return push(std::move(n));
}

Value Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.out = std::move(value);
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& x = out(a.node);
  const Tensor& y = out(b.node);
  require(same_shape(x, y),
          "add: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  Node n;
  n.op = Op::kAdd;
  n.a = a.node;
  n.b = b.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] + y[i];
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& x = out(a.node);
  const Tensor& y = out(b.node);
  require(same_shape(x, y),
          "sub: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  Node n;
  n.op = Op::kSub;
  n.a = a.node;
  n.b = b.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] - y[i];
  return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& x = out(a.node);
  const Tensor& y = out(b.node);
  require(same_shape(x, y),
          "mul: shape mismatch " + shape_str(x.shape) + " vs " + shape_str(y.shape));
  Node n;
  n.op = Op::kMul;
  n.a = a.node;
  n.b = b.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] * y[i];
  return push(std::move(n));
}

Value Tape::tanh(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kTanh;
  n.a = a.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = std::tanh(x[i]);
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kRelu;
  n.a = a.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] > 0 ? x[i] : 0.0;
  return push(std::move(n));
}

Value Tape::softplus(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kSoftplus;
  n.a = a.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = stable_softplus(x[i]);
  return push(std::move(n));
}

Value Tape::scale(Value a, double factor) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kScale;
  n.a = a.node;
  n.scalar = factor;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] * factor;
  return push(std::move(n));
}

Value Tape::add_scalar(Value a, double c) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.node;
  n.out = Tensor(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) n.out[i] = x[i] + c;
  return push(std::move(n));
}

Value Tape::reshape(Value a, Shape new_shape) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kReshape;
  n.a = a.node;
  n.out = x.reshaped(std::move(new_shape));
  return push(std::move(n));
}

Value Tape::gather_rows(Value table, std::vector<int64_t> ids) {
  check(table);
  const Tensor& t = out(table.node);
  require(t.shape.size() == 2, "gather_rows: table must be 2-D, got " + shape_str(t.shape));
  const int64_t rows = t.shape[0];
  const int64_t dim = t.shape[1];
  for (int64_t id : ids) {
    if (id < 0 || id >= rows) {
      throw std::invalid_argument("gather_rows: id " + std::to_string(id) +
                                  " out of range for table with " + std::to_string(rows) +
                                  " rows");
    }
  }
  Node n;
  n.op = Op::kGatherRows;
  n.a = table.node;
  n.out = Tensor({static_cast<int64_t>(ids.size()), dim});
  for (size_t i = 0; i < ids.size(); ++i) {
    const double* src = t.data.data() + ids[i] * dim;
    std::copy(src, src + dim, n.out.data.data() + static_cast<int64_t>(i) * dim);
  }
  n.ids = std::move(ids);
  return push(std::move(n));
}

Value Tape::slice_cols(Value a, int64_t start, int64_t width) {
  check(a);
  const Tensor& x = out(a.node);
  require(x.shape.size() == 2, "slice_cols: input must be 2-D, got " + shape_str(x.shape));
  require(start >= 0 && width >= 0 && start + width <= x.shape[1],
          "slice_cols: range [" + std::to_string(start) + "," + std::to_string(start + width) +
              ") out of bounds for " + shape_str(x.shape));
  Node n;
  n.op = Op::kSliceCols;
  n.a = a.node;
  n.i0 = start;
  n.i1 = width;
  n.out = Tensor({x.shape[0], width});
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    const double* src = x.data.data() + r * x.shape[1] + start;
    std::copy(src, src + width, n.out.data.data() + r * width);
  }
  return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& x = out(a.node);
  const Tensor& y = out(b.node);
  require(x.shape.size() == 2 && y.shape.size() == 2 && x.shape[0] == y.shape[0],
          "concat_cols: need 2-D inputs with equal rows, got " + shape_str(x.shape) + " and " +
              shape_str(y.shape));
  const int64_t da = x.shape[1], db = y.shape[1];
  Node n;
  n.op = Op::kConcatCols;
  n.a = a.node;
  n.b = b.node;
  n.i0 = da;
  n.i1 = db;
  n.out = Tensor({x.shape[0], da + db});
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    std::copy(x.data.data() + r * da, x.data.data() + (r + 1) * da,
              n.out.data.data() + r * (da + db));
    std::copy(y.data.data() + r * db, y.data.data() + (r + 1) * db,
              n.out.data.data() + r * (da + db) + da);
  }
  return push(std::move(n));
}

Value Tape::row_sum(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  require(x.shape.size() == 2, "row_sum: input must be 2-D, got " + shape_str(x.shape));
  Node n;
  n.op = Op::kRowSum;
  n.a = a.node;
  n.out = Tensor({x.shape[0]});
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    double s = 0.0;
    const double* row = x.data.data() + r * x.shape[1];
    for (int64_t j = 0; j < x.shape[1]; ++j) s += row[j];
    n.out[r] = s;
  }
  return push(std::move(n));
}

Value Tape::mul_rows(Value m, Value s) {
  check(m);
  check(s);
  const Tensor& x = out(m.node);
  const Tensor& w = out(s.node);
  require(x.shape.size() == 2 && w.shape.size() == 1 && w.shape[0] == x.shape[0],
          "mul_rows: need [b,d] and [b], got " + shape_str(x.shape) + " and " +
              shape_str(w.shape));
  Node n;
  n.op = Op::kMulRows;
  n.a = m.node;
  n.b = s.node;
  n.out = Tensor(x.shape);
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    for (int64_t j = 0; j < x.shape[1]; ++j) {
      n.out[r * x.shape[1] + j] = x[r * x.shape[1] + j] * w[r];
    }
  }
  return push(std::move(n));
}

Value Tape::lp_norm(Value a, int p) {
  check(a);
  require(p == 1 || p == 2, "lp_norm: unsupported p=" + std::to_string(p) + " (need 1 or 2)");
  const Tensor& x = out(a.node);
  require(x.shape.size() == 2, "lp_norm: input must be 2-D, got " + shape_str(x.shape));
  Node n;
  n.op = Op::kLpNorm;
  n.a = a.node;
  n.p = p;
  n.out = Tensor({x.shape[0]});
  const int64_t d = x.shape[1];
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    const double* row = x.data.data() + r * d;
    double s = 0.0;
    if (p == 1) {
      for (int64_t j = 0; j < d; ++j) s += std::abs(row[j]);
    } else {
      for (int64_t j = 0; j < d; ++j) s += row[j] * row[j];
      s = std::sqrt(s);
    }
    n.out[r] = s;
  }
  return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
  check(a);
  check(b);
  const Tensor& x = out(a.node);
  const Tensor& y = out(b.node);
  require(x.shape.size() == 2 && y.shape.size() == 2 && x.shape[1] == y.shape[0],
          "matmul: incompatible shapes " + shape_str(x.shape) + " and " + shape_str(y.shape));
  const int64_t m = x.shape[0], k = x.shape[1], nn = y.shape[1];
  Node n;
  n.op = Op::kMatmul;
  n.a = a.node;
  n.b = b.node;
  n.out = Tensor({m, nn});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t kk = 0; kk < k; ++kk) {
      const double v = x[i * k + kk];
      const double* yrow = y.data.data() + kk * nn;
      double* orow = n.out.data.data() + i * nn;
      for (int64_t j = 0; j < nn; ++j) orow[j] += v * yrow[j];
    }
  }
  return push(std::move(n));
}

Value Tape::add_row_vector(Value m, Value v) {
  check(m);
  check(v);
  const Tensor& x = out(m.node);
  const Tensor& w = out(v.node);
  require(x.shape.size() == 2 && w.shape.size() == 1 && w.shape[0] == x.shape[1],
          "add_row_vector: need [b,d] and [d], got " + shape_str(x.shape) + " and " +
              shape_str(w.shape));
  Node n;
  n.op = Op::kAddRowVector;
  n.a = m.node;
  n.b = v.node;
  n.out = Tensor(x.shape);
  for (int64_t r = 0; r < x.shape[0]; ++r) {
    for (int64_t j = 0; j < x.shape[1]; ++j) {
      n.out[r * x.shape[1] + j] = x[r * x.shape[1] + j] + w[j];
    }
  }
  return push(std::move(n));
}

Value Tape::transposed_conv2d(Value input, Value kernels, int stride, int padding) {
  check(input);
  check(kernels);
  const Tensor& x = out(input.node);
  const Tensor& ker = out(kernels.node);
  Node n;
  n.op = Op::kTransposedConv2d;
  n.a = input.node;
  n.b = kernels.node;
  n.i0 = stride;
  n.i1 = padding;
  n.out = transposed_conv2d_value(x, ker, stride, padding);
  return push(std::move(n));
}

Value Tape::sum(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  Node n;
  n.op = Op::kSum;
  n.a = a.node;
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
  n.out = Tensor::scalar(s);
  return push(std::move(n));
}

Value Tape::mean(Value a) {
  check(a);
  const Tensor& x = out(a.node);
  require(x.numel() > 0, "mean of empty tensor");
  Node n;
  n.op = Op::kMean;
  n.a = a.node;
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
  n.out = Tensor::scalar(s / static_cast<double>(x.numel()));
  return push(std::move(n));
}

const Tensor& Tape::value(Value v) const {
  check(v);
  return out(v.node);
}

GradStore Tape::backward(Value loss) const {
  check(loss);
  const Tensor& l = out(loss.node);
  if (l.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(l.shape));
  }

  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> active(nodes_.size(), 0);
  auto grad_of = [&](int32_t idx) -> Tensor& {
    if (!active[static_cast<size_t>(idx)]) {
      grads[static_cast<size_t>(idx)] = Tensor(out(idx).shape);
      active[static_cast<size_t>(idx)] = 1;
    }
    return grads[static_cast<size_t>(idx)];
  };

  grad_of(loss.node)[0] = 1.0;

  GradStore store;
  for (int32_t i = loss.node; i >= 0; --i) {
    if (!active[static_cast<size_t>(i)]) continue;
    const Node& n = nodes_[static_cast<size_t>(i)];
    const Tensor& g = grads[static_cast<size_t>(i)];
    switch (n.op) {
      case Op::kLeaf:
        store.accumulate(n.leaf_id, g);
        break;
      case Op::kConstant:
        break;
      case Op::kAdd: {
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        for (int64_t j = 0; j < g.numel(); ++j) {
          ga[j] += g[j];
          gb[j] += g[j];
        }
        break;
      }
      case Op::kSub: {
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        for (int64_t j = 0; j < g.numel(); ++j) {
          ga[j] += g[j];
          gb[j] -= g[j];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& x = out(n.a);
        const Tensor& y = out(n.b);
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        for (int64_t j = 0; j < g.numel(); ++j) {
          ga[j] += g[j] * y[j];
          gb[j] += g[j] * x[j];
        }
        break;
      }
      case Op::kTanh: {
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += g[j] * (1.0 - n.out[j] * n.out[j]);
        break;
      }
      case Op::kRelu: {
        const Tensor& x = out(n.a);
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += x[j] > 0 ? g[j] : 0.0;
        break;
      }
      case Op::kSoftplus: {
        const Tensor& x = out(n.a);
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += g[j] * sigmoid(x[j]);
        break;
      }
      case Op::kScale: {
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += g[j] * n.scalar;
        break;
      }
      case Op::kAddScalar: {
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += g[j];
        break;
      }
      case Op::kReshape: {
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < g.numel(); ++j) ga[j] += g[j];
        break;
      }
      case Op::kGatherRows: {
        Tensor& ga = grad_of(n.a);
        const int64_t dim = ga.shape[1];
        for (size_t r = 0; r < n.ids.size(); ++r) {
          double* dst = ga.data.data() + n.ids[r] * dim;
          const double* src = g.data.data() + static_cast<int64_t>(r) * dim;
          for (int64_t j = 0; j < dim; ++j) dst[j] += src[j];
        }
        break;
      }
      case Op::kSliceCols: {
        Tensor& ga = grad_of(n.a);
        const int64_t full = ga.shape[1];
        for (int64_t r = 0; r < g.shape[0]; ++r) {
          double* dst = ga.data.data() + r * full + n.i0;
          const double* src = g.data.data() + r * n.i1;
          for (int64_t j = 0; j < n.i1; ++j) dst[j] += src[j];
        }
        break;
      }
      case Op::kConcatCols: {
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        const int64_t da = n.i0, db = n.i1;
        for (int64_t r = 0; r < g.shape[0]; ++r) {
          const double* src = g.data.data() + r * (da + db);
          double* pa = ga.data.data() + r * da;
          double* pb = gb.data.data() + r * db;
          for (int64_t j = 0; j < da; ++j) pa[j] += src[j];
          for (int64_t j = 0; j < db; ++j) pb[j] += src[da + j];
        }
        break;
      }
      case Op::kRowSum: {
        const Tensor& x = out(n.a);
        Tensor& ga = grad_of(n.a);
        for (int64_t r = 0; r < x.shape[0]; ++r) {
          for (int64_t j = 0; j < x.shape[1]; ++j) ga[r * x.shape[1] + j] += g[r];
        }
        break;
      }
      case Op::kMulRows: {
        const Tensor& x = out(n.a);
        const Tensor& w = out(n.b);
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        const int64_t d = x.shape[1];
        for (int64_t r = 0; r < x.shape[0]; ++r) {
          double dot = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            ga[r * d + j] += g[r * d + j] * w[r];
            dot += g[r * d + j] * x[r * d + j];
          }
          gb[r] += dot;
        }
        break;
      }
      case Op::kLpNorm: {
        const Tensor& x = out(n.a);
        Tensor& ga = grad_of(n.a);
        const int64_t d = x.shape[1];
        for (int64_t r = 0; r < x.shape[0]; ++r) {
          const double* row = x.data.data() + r * d;
          double* grow = ga.data.data() + r * d;
          if (n.p == 1) {
            for (int64_t j = 0; j < d; ++j) {
              const double s = row[j] > 0 ? 1.0 : (row[j] < 0 ? -1.0 : 0.0);
              grow[j] += g[r] * s;
            }
          } else {
            const double norm = n.out[r];
            if (norm > 0.0) {  // zero-vector subgradient: stay at 0
              for (int64_t j = 0; j < d; ++j) grow[j] += g[r] * row[j] / norm;
            }
          }
        }
        break;
      }
      case Op::kMatmul: {
        const Tensor& x = out(n.a);
        const Tensor& y = out(n.b);
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        const int64_t m = x.shape[0], k = x.shape[1], nn = y.shape[1];
        for (int64_t i2 = 0; i2 < m; ++i2) {
          for (int64_t j = 0; j < nn; ++j) {
            const double gv = g[i2 * nn + j];
            if (gv == 0.0) continue;
            for (int64_t kk = 0; kk < k; ++kk) {
              ga[i2 * k + kk] += gv * y[kk * nn + j];
              gb[kk * nn + j] += gv * x[i2 * k + kk];
            }
          }
        }
        break;
      }
      case Op::kAddRowVector: {
        const Tensor& x = out(n.a);
        Tensor& ga = grad_of(n.a);
        Tensor& gb = grad_of(n.b);
        const int64_t d = x.shape[1];
        for (int64_t r = 0; r < x.shape[0]; ++r) {
          for (int64_t j = 0; j < d; ++j) {
            ga[r * d + j] += g[r * d + j];
            gb[j] += g[r * d + j];
          }
        }
        break;
      }
      case Op::kTransposedConv2d: {
        const Tensor& x = out(n.a);
        const Tensor& ker = out(n.b);
        Tensor& ga = grad_of(n.a);
        Tensor& gk = grad_of(n.b);
        ConvDims d = conv_dims(x.shape, ker.shape, static_cast<int>(n.i0),
                               static_cast<int>(n.i1));
        const int64_t in_map = d.in_size * d.in_size;
        const int64_t out_map = d.out_size * d.out_size;
        const int64_t k2 = d.k * d.k;
        const int stride = static_cast<int>(n.i0);
        const int padding = static_cast<int>(n.i1);
        for (int64_t b = 0; b < d.batch; ++b) {
          const double* in_b = x.data.data() + b * d.c_in * in_map;
          const double* gout_b = g.data.data() + b * d.c_out * out_map;
          double* gin_b = ga.data.data() + b * d.c_in * in_map;
          for (int64_t ci = 0; ci < d.c_in; ++ci) {
            const double* in_c = in_b + ci * in_map;
            double* gin_c = gin_b + ci * in_map;
            const double* ker_ci = ker.data.data() + ci * d.c_out * k2;
            double* gk_ci = gk.data.data() + ci * d.c_out * k2;
            for (int64_t iy = 0; iy < d.in_size; ++iy) {
              for (int64_t ix = 0; ix < d.in_size; ++ix) {
                const double v = in_c[iy * d.in_size + ix];
                const int64_t y0 = iy * stride - padding;
                const int64_t x0 = ix * stride - padding;
                double gsum = 0.0;
                for (int64_t co = 0; co < d.c_out; ++co) {
                  const double* ker_k = ker_ci + co * k2;
                  double* gk_k = gk_ci + co * k2;
                  const double* gout_c = gout_b + co * out_map;
                  for (int64_t ky = 0; ky < d.k; ++ky) {
                    const int64_t y = y0 + ky;
                    if (y < 0 || y >= d.out_size) continue;
                    const double* gout_row = gout_c + y * d.out_size;
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                      const int64_t xx = x0 + kx;
                      if (xx < 0 || xx >= d.out_size) continue;
                      const double go = gout_row[xx];
                      gsum += go * ker_k[ky * d.k + kx];
                      gk_k[ky * d.k + kx] += go * v;
                    }
                  }
                }
                gin_c[iy * d.in_size + ix] += gsum;
              }
            }
          }
        }
        break;
      }
      case Op::kSum: {
        Tensor& ga = grad_of(n.a);
        for (int64_t j = 0; j < ga.numel(); ++j) ga[j] += g[0];
        break;
      }
      case Op::kMean: {
        Tensor& ga = grad_of(n.a);
        const double f = g[0] / static_cast<double>(ga.numel());
        for (int64_t j = 0; j < ga.numel(); ++j) ga[j] += f;
        break;
      }
    }
  }
  return store;
}

}  // namespace liftkg
