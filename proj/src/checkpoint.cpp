#include "liftkg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace liftkg {

namespace {

constexpr char kMagic[4] = {'L', 'K', 'G', 'C'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_i64(std::ostream& out, int64_t v) { write_u64(out, static_cast<uint64_t>(v)); }

void write_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

int64_t read_i64(std::istream& in) { return static_cast<int64_t>(read_u64(in)); }

double read_f64(std::istream& in) {
  const uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_u32(out, static_cast<uint32_t>(t.shape.size()));
  for (int64_t d : t.shape) write_i64(out, d);
  for (double v : t.data) write_f64(out, v);
}

Tensor read_tensor(std::istream& in) {
  const uint32_t ndim = read_u32(in);
  if (ndim > 8) throw std::runtime_error("checkpoint tensor rank " + std::to_string(ndim));
  Shape shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) shape[i] = read_i64(in);
  Tensor t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = read_f64(in);
  return t;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(params.kind));
  write_u32(out, static_cast<uint32_t>(params.lift_kind));
  write_u32(out, static_cast<uint32_t>(params.norm_order));
  write_i64(out, params.entity_count);
  write_i64(out, params.relation_count);
  write_i64(out, params.entity_dim);
  write_i64(out, params.score_dim);
  write_u64(out, params.seed);

  write_tensor(out, params.entity_table);
  write_tensor(out, params.relation_table);
  if (params.kind == ModelKind::kTransH) write_tensor(out, params.hyperplane_table);

  if (params.lift_kind == LiftKind::kTC) {
    write_u32(out, static_cast<uint32_t>(params.liftnet.layers.size()));
    for (const TCLayerSpec& l : params.liftnet.layers) {
      write_u32(out, static_cast<uint32_t>(l.in_channels));
      write_u32(out, static_cast<uint32_t>(l.out_channels));
      write_u32(out, static_cast<uint32_t>(l.kernel));
      write_u32(out, static_cast<uint32_t>(l.stride));
      write_u32(out, static_cast<uint32_t>(l.padding));
    }
    for (const Tensor& k : params.liftnet_params.kernels) write_tensor(out, k);
  } else if (params.lift_kind == LiftKind::kFC) {
    write_u32(out, static_cast<uint32_t>(params.fc.layer_dims.size()));
    for (int64_t d : params.fc.layer_dims) write_i64(out, d);
    for (const Tensor& w : params.fc_params.weights) write_tensor(out, w);
    for (const Tensor& b : params.fc_params.biases) write_tensor(out, b);
  }
  if (!out) throw std::runtime_error("write failure on checkpoint " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + " is not a checkpoint file");
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  ModelParams p;
  p.kind = static_cast<ModelKind>(read_u32(in));
  p.lift_kind = static_cast<LiftKind>(read_u32(in));
  p.norm_order = static_cast<int>(read_u32(in));
  p.entity_count = read_i64(in);
  p.relation_count = read_i64(in);
  p.entity_dim = read_i64(in);
  p.score_dim = read_i64(in);
  p.seed = read_u64(in);

  p.entity_table = read_tensor(in);
  p.relation_table = read_tensor(in);
  if (p.kind == ModelKind::kTransH) p.hyperplane_table = read_tensor(in);

  if (p.lift_kind == LiftKind::kTC) {
    const uint32_t n_layers = read_u32(in);
    p.liftnet.input_dim = p.entity_dim;
    p.liftnet.output_dim = p.score_dim;
    for (uint32_t i = 0; i < n_layers; ++i) {
      TCLayerSpec l;
      l.in_channels = static_cast<int>(read_u32(in));
      l.out_channels = static_cast<int>(read_u32(in));
      l.kernel = static_cast<int>(read_u32(in));
      l.stride = static_cast<int>(read_u32(in));
      l.padding = static_cast<int>(read_u32(in));
      p.liftnet.layers.push_back(l);
    }
    for (uint32_t i = 0; i < n_layers; ++i) {
      p.liftnet_params.kernels.push_back(read_tensor(in));
    }
  } else if (p.lift_kind == LiftKind::kFC) {
    const uint32_t n_dims = read_u32(in);
    for (uint32_t i = 0; i < n_dims; ++i) p.fc.layer_dims.push_back(read_i64(in));
    for (uint32_t i = 0; i + 1 < n_dims; ++i) p.fc_params.weights.push_back(read_tensor(in));
    for (uint32_t i = 0; i + 1 < n_dims; ++i) p.fc_params.biases.push_back(read_tensor(in));
  }
  p.validate();
  return p;
}

}  // namespace liftkg
