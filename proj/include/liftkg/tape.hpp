#pragma once

#include <map>
#include <string>
#include <vector>

#include "liftkg/tensor.hpp"

namespace liftkg {

/// Gradients keyed by parameter id. An absent entry is a zero gradient.
class GradStore {
 public:
  const Tensor* find(const std::string& id) const;
  Tensor& get_or_create(const std::string& id, const Shape& shape);
  void accumulate(const std::string& id, Tensor grad);
  bool empty() const { return grads_.empty(); }
  const std::map<std::string, Tensor>& all() const { return grads_; }

 private:
  std::map<std::string, Tensor> grads_;
};

/// Handle to a node on a Tape.
struct Value {
  int32_t node = -1;
};

/// Define-by-run computation tape with reverse-mode differentiation.
/// Rebuilt per training step; single-threaded per instance.
///
/// Leaf tensors are referenced, not copied: a leaf's storage must outlive
/// the tape and must not be mutated while the tape is alive.
class Tape {
 public:
  Value leaf(std::string param_id, const Tensor& value);
  Value constant(Tensor value);

  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value tanh(Value a);
  Value relu(Value a);
  Value softplus(Value a);
  Value scale(Value a, double factor);
  Value add_scalar(Value a, double c);
  Value reshape(Value a, Shape new_shape);

  /// Row-wise copy from a [rows x dim] tensor; backward scatter-adds,
  /// so duplicate ids accumulate.
  Value gather_rows(Value table, std::vector<int64_t> ids);
  Value slice_cols(Value a, int64_t start, int64_t width);
  Value concat_cols(Value a, Value b);

  Value row_sum(Value a);                // [b,d] -> [b]
  Value mul_rows(Value m, Value s);      // [b,d] scaled per-row by [b]
  Value lp_norm(Value a, int p);         // [b,d] -> [b], p in {1,2}
  Value matmul(Value a, Value b);        // [m,k] x [k,n]
  Value add_row_vector(Value m, Value v);  // [b,d] + [d] per row

  /// Input [B x C_in x I x I] (or [C_in x I x I] for a single item) with
  /// kernels [C_in x C_out x K x K]; output spatial size
  /// O = (I-1)*stride - 2*padding + K. No bias.
  Value transposed_conv2d(Value input, Value kernels, int stride, int padding);

  Value sum(Value a);   // -> scalar
  Value mean(Value a);  // -> scalar

  const Tensor& value(Value v) const;
  size_t size() const { return nodes_.size(); }

  /// Gradients of a scalar loss w.r.t. every leaf it reaches.
  /// Pure: repeated calls give bit-identical results.
  GradStore backward(Value loss) const;

 private:
  enum class Op {
    kLeaf,
    kConstant,
    kAdd,
    kSub,
    kMul,
    kTanh,
    kRelu,
    kSoftplus,
    kScale,
    kAddScalar,
    kReshape,
    kGatherRows,
    kSliceCols,
    kConcatCols,
    kRowSum,
    kMulRows,
    kLpNorm,
    kMatmul,
    kAddRowVector,
    kTransposedConv2d,
    kSum,
    kMean,
  };

  struct Node {
    Op op;
    int32_t a = -1;
    int32_t b = -1;
    Tensor out;                     // owned forward value (except leaves)
    const Tensor* external = nullptr;  // leaf storage
    std::string leaf_id;
    std::vector<int64_t> ids;       // gather
    int64_t i0 = 0, i1 = 0;         // slice start/width, conv stride/padding
    int p = 0;                      // norm order
    double scalar = 0.0;            // scale factor / added constant
  };

  const Tensor& out(int32_t idx) const {
    const Node& n = nodes_[static_cast<size_t>(idx)];
    return n.external ? *n.external : n.out;
  }
  Value push(Node n);
  void check(Value v) const;

  std::vector<Node> nodes_;
};

}  // namespace liftkg
