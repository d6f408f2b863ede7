#include "liftkg/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "liftkg/rng.hpp"

namespace liftkg {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "transe") return ModelKind::kTransE;
  if (name == "transh") return ModelKind::kTransH;
  if (name == "distmult") return ModelKind::kDistMult;
  if (name == "complex") return ModelKind::kComplEx;
  throw std::invalid_argument("unknown model '" + name +
                              "' (expected transe, transh, distmult or complex)");
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kTransH: return "transh";
    case ModelKind::kDistMult: return "distmult";
    case ModelKind::kComplEx: return "complex";
  }
  return "?";
}

LiftKind parse_lift_kind(const std::string& name) {
  if (name == "none") return LiftKind::kNone;
  if (name == "tc") return LiftKind::kTC;
  if (name == "fc") return LiftKind::kFC;
  throw std::invalid_argument("unknown liftnet kind '" + name + "' (expected none, tc or fc)");
}

std::string lift_kind_name(LiftKind kind) {
  switch (kind) {
    case LiftKind::kNone: return "none";
    case LiftKind::kTC: return "tc";
    case LiftKind::kFC: return "fc";
  }
  return "?";
}

void ModelParams::validate() const {
  if (entity_table.shape != Shape{entity_count, stored_entity_cols()}) {
    throw std::invalid_argument("entity table shape " + shape_str(entity_table.shape) +
                                " does not match [" + std::to_string(entity_count) + " x " +
                                std::to_string(stored_entity_cols()) + "]");
  }
  if (relation_table.shape != Shape{relation_count, score_cols()}) {
    throw std::invalid_argument("relation table shape " + shape_str(relation_table.shape) +
                                " does not match [" + std::to_string(relation_count) + " x " +
                                std::to_string(score_cols()) + "]");
  }
  if (kind == ModelKind::kTransH) {
    if (hyperplane_table.shape != Shape{relation_count, score_dim}) {
      throw std::invalid_argument("hyperplane table shape mismatch");
    }
  } else if (hyperplane_table.numel() != 0) {
    throw std::invalid_argument("hyperplane table only valid for TransH");
  }
  if (!has_lift() && entity_dim != score_dim) {
    throw std::invalid_argument("without a lift network entity_dim must equal score_dim");
  }
  if (lift_kind == LiftKind::kTC) {
    liftnet.validate();
    if (liftnet.input_dim != entity_dim || liftnet.output_dim != score_dim) {
      throw std::invalid_argument("liftnet dims do not match model dims");
    }
  }
  if (lift_kind == LiftKind::kFC) {
    fc.validate();
    if (fc.layer_dims.front() != entity_dim || fc.layer_dims.back() != score_dim) {
      throw std::invalid_argument("fc variant dims do not match model dims");
    }
  }
}

ModelParams init_model_params(const ModelSpec& spec, int64_t entity_count, int64_t relation_count,
                              uint64_t seed) {
  if (entity_count < 1 || relation_count < 1) {
    throw std::invalid_argument("need at least one entity and one relation");
  }
  if (spec.lift == LiftKind::kNone && spec.entity_dim != spec.score_dim) {
    throw std::invalid_argument("entity_dim must equal score_dim when no lift network is used");
  }
  ModelParams p;
  p.kind = spec.kind;
  p.norm_order = spec.norm_order;
  p.entity_count = entity_count;
  p.relation_count = relation_count;
  p.entity_dim = spec.entity_dim;
  p.score_dim = spec.score_dim;
  p.seed = seed;
  p.lift_kind = spec.lift;

  auto fill_uniform = [](Tensor& t, double bound, std::mt19937_64& rng) {
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = draw_uniform(rng, -bound, bound);
  };

  p.entity_table = Tensor({entity_count, p.stored_entity_cols()});
  {
    auto rng = make_rng(seed, 0xe17);
    fill_uniform(p.entity_table, 6.0 / std::sqrt(static_cast<double>(p.stored_entity_cols())),
                 rng);
  }
  p.relation_table = Tensor({relation_count, p.score_cols()});
  {
    auto rng = make_rng(seed, 0x4e1);
    fill_uniform(p.relation_table, 6.0 / std::sqrt(static_cast<double>(p.score_cols())), rng);
  }
  if (spec.kind == ModelKind::kTransH) {
    p.hyperplane_table = Tensor({relation_count, p.score_dim});
    auto rng = make_rng(seed, 0x117);
    fill_uniform(p.hyperplane_table, 6.0 / std::sqrt(static_cast<double>(p.score_dim)), rng);
  }

  if (spec.lift == LiftKind::kTC) {
    p.liftnet = plan_liftnet(spec.entity_dim, spec.score_dim, spec.lift_layers);
    p.liftnet_params = init_liftnet_params(p.liftnet, seed);
  } else if (spec.lift == LiftKind::kFC) {
    p.fc = plan_fc_variant(spec.entity_dim, spec.score_dim, spec.lift_layers);
    p.fc_params = init_fc_variant_params(p.fc, seed);
  }

  normalize_constraints(p);
  p.validate();
  return p;
}

std::map<std::string, Tensor*> trainable_tensors(ModelParams& params) {
  std::map<std::string, Tensor*> out;
  out["entity"] = &params.entity_table;
  out["relation"] = &params.relation_table;
  if (params.kind == ModelKind::kTransH) out["hyperplane"] = &params.hyperplane_table;
  for (size_t i = 0; i < params.liftnet_params.kernels.size(); ++i) {
    out["tc_kernel_" + std::to_string(i)] = &params.liftnet_params.kernels[i];
  }
  for (size_t i = 0; i < params.fc_params.weights.size(); ++i) {
    out["fc_w_" + std::to_string(i)] = &params.fc_params.weights[i];
    out["fc_b_" + std::to_string(i)] = &params.fc_params.biases[i];
  }
  return out;
}

std::map<std::string, const Tensor*> trainable_tensors(const ModelParams& params) {
  std::map<std::string, const Tensor*> out;
  for (const auto& [name, tensor] : trainable_tensors(const_cast<ModelParams&>(params))) {
    out[name] = tensor;
  }
  return out;
}

Value score_transe(Tape& tape, Value head, Value relation, Value tail, int p) {
  return tape.lp_norm(tape.sub(tape.add(head, relation), tail), p);
}

Value score_transh(Tape& tape, Value head, Value relation, Value hyperplane, Value tail, int p) {
  auto project = [&](Value e) {
    Value dot = tape.row_sum(tape.mul(hyperplane, e));  // w . e per row
    return tape.sub(e, tape.mul_rows(hyperplane, dot));
  };
  return score_transe(tape, project(head), relation, project(tail), p);
}

Value score_distmult(Tape& tape, Value head, Value relation, Value tail) {
  return tape.row_sum(tape.mul(tape.mul(head, relation), tail));
}

Value score_complex(Tape& tape, Value head, Value relation, Value tail) {
  const int64_t cols = tape.value(head).shape[1];
  if (cols % 2 != 0) {
    throw std::invalid_argument("score_complex needs an even number of columns");
  }
  const int64_t n = cols / 2;
  auto re = [&](Value v) { return tape.slice_cols(v, 0, n); };
  auto im = [&](Value v) { return tape.slice_cols(v, n, n); };
  Value hr = re(head), hi = im(head);
  Value rr = re(relation), ri = im(relation);
  Value tr = re(tail), ti = im(tail);
  // Re(<h, r, conj(t)>) = (hr*rr - hi*ri) . tr + (hr*ri + hi*rr) . ti
  Value qr = tape.sub(tape.mul(hr, rr), tape.mul(hi, ri));
  Value qi = tape.add(tape.mul(hr, ri), tape.mul(hi, rr));
  return tape.add(tape.row_sum(tape.mul(qr, tr)), tape.row_sum(tape.mul(qi, ti)));
}

ModelOnTape::ModelOnTape(Tape& tape, const ModelParams& params) : tape_(tape), params_(params) {
  params.validate();
  entity_leaf_ = tape_.leaf("entity", params_.entity_table);
  relation_leaf_ = tape_.leaf("relation", params_.relation_table);
  if (params_.kind == ModelKind::kTransH) {
    hyperplane_leaf_ = tape_.leaf("hyperplane", params_.hyperplane_table);
  }
  for (size_t i = 0; i < params_.liftnet_params.kernels.size(); ++i) {
    kernel_leaves_.push_back(
        tape_.leaf("tc_kernel_" + std::to_string(i), params_.liftnet_params.kernels[i]));
  }
  for (size_t i = 0; i < params_.fc_params.weights.size(); ++i) {
    weight_leaves_.push_back(tape_.leaf("fc_w_" + std::to_string(i), params_.fc_params.weights[i]));
    bias_leaves_.push_back(tape_.leaf("fc_b_" + std::to_string(i), params_.fc_params.biases[i]));
  }
}

Value ModelOnTape::embed_entities(const std::vector<int64_t>& ids) {
  if (!params_.has_lift()) return tape_.gather_rows(entity_leaf_, ids);

  // Lift each distinct entity once, then expand back to batch order.
  std::vector<int64_t> unique;
  std::vector<int64_t> positions(ids.size());
  std::unordered_map<int64_t, int64_t> index;
  index.reserve(ids.size() * 2);
  for (size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = index.emplace(ids[i], static_cast<int64_t>(unique.size()));
    if (inserted) unique.push_back(ids[i]);
    positions[i] = it->second;
  }

  Value stored = tape_.gather_rows(entity_leaf_, unique);
  Value lifted;
  if (params_.lift_kind == LiftKind::kTC) {
    if (is_complex(params_.kind)) {
      const int64_t nhat = params_.entity_dim;
      Value re = lift_forward(tape_, tape_.slice_cols(stored, 0, nhat), params_.liftnet,
                              kernel_leaves_);
      Value im = lift_forward(tape_, tape_.slice_cols(stored, nhat, nhat), params_.liftnet,
                              kernel_leaves_);
      lifted = tape_.concat_cols(re, im);
    } else {
      lifted = lift_forward(tape_, stored, params_.liftnet, kernel_leaves_);
    }
  } else {
    if (is_complex(params_.kind)) {
      const int64_t nhat = params_.entity_dim;
      Value re = fc_variant_forward(tape_, tape_.slice_cols(stored, 0, nhat), params_.fc,
                                    weight_leaves_, bias_leaves_);
      Value im = fc_variant_forward(tape_, tape_.slice_cols(stored, nhat, nhat), params_.fc,
                                    weight_leaves_, bias_leaves_);
      lifted = tape_.concat_cols(re, im);
    } else {
      lifted = fc_variant_forward(tape_, stored, params_.fc, weight_leaves_, bias_leaves_);
    }
  }
  return tape_.gather_rows(lifted, positions);
}

Value ModelOnTape::relation_rows(const std::vector<int64_t>& ids) {
  return tape_.gather_rows(relation_leaf_, ids);
}

Value ModelOnTape::hyperplane_rows(const std::vector<int64_t>& ids) {
  if (params_.kind != ModelKind::kTransH) {
    throw std::logic_error("hyperplane rows only exist for TransH");
  }
  return tape_.gather_rows(hyperplane_leaf_, ids);
}

Value ModelOnTape::score(const std::vector<Triple>& triples) {
  std::vector<int64_t> heads, relations, tails;
  heads.reserve(triples.size());
  relations.reserve(triples.size());
  tails.reserve(triples.size());
  for (const Triple& t : triples) {
    heads.push_back(t.head);
    relations.push_back(t.relation);
    tails.push_back(t.tail);
  }
  Value h = embed_entities(heads);
  Value r = relation_rows(relations);
  Value t = embed_entities(tails);
  switch (params_.kind) {
    case ModelKind::kTransE:
      return score_transe(tape_, h, r, t, params_.norm_order);
    case ModelKind::kTransH:
      return score_transh(tape_, h, r, hyperplane_rows(relations), t, params_.norm_order);
    case ModelKind::kDistMult:
      return score_distmult(tape_, h, r, t);
    case ModelKind::kComplEx:
      return score_complex(tape_, h, r, t);
  }
  throw std::logic_error("unreachable model kind");
}

void normalize_constraints(ModelParams& params) {
  if (params.kind == ModelKind::kTransH) {
    Tensor& w = params.hyperplane_table;
    const int64_t d = w.cols();
    for (int64_t r = 0; r < w.rows(); ++r) {
      double* row = w.row_ptr(r);
      double norm = 0.0;
      for (int64_t j = 0; j < d; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        for (int64_t j = 0; j < d; ++j) row[j] /= norm;
      } else {
        row[0] = 1.0;  // degenerate zero normal: pick a fixed axis
      }
    }
  }
  if (is_translational(params.kind) && !params.has_lift()) {
    Tensor& e = params.entity_table;
    const int64_t d = e.cols();
    for (int64_t r = 0; r < e.rows(); ++r) {
      double* row = e.row_ptr(r);
      double norm = 0.0;
      for (int64_t j = 0; j < d; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > 1.0) {
        for (int64_t j = 0; j < d; ++j) row[j] /= norm;
      }
    }
  }
}

Tensor materialize_entity_embeddings(const ModelParams& params) {
  params.validate();
  if (!params.has_lift()) return params.entity_table;

  const int64_t chunk = 2048;
  Tensor out({params.entity_count, params.score_cols()});
  auto lift_block = [&](const Tensor& block) {
    if (params.lift_kind == LiftKind::kTC) {
      return lift_forward_value(block, params.liftnet, params.liftnet_params);
    }
    return fc_variant_forward_value(block, params.fc, params.fc_params);
  };
  const int64_t stored_cols = params.stored_entity_cols();
  for (int64_t start = 0; start < params.entity_count; start += chunk) {
    const int64_t n = std::min(chunk, params.entity_count - start);
    Tensor block({n, stored_cols});
    std::copy(params.entity_table.data.begin() + start * stored_cols,
              params.entity_table.data.begin() + (start + n) * stored_cols, block.data.begin());
    Tensor lifted;
    if (is_complex(params.kind)) {
      const int64_t nhat = params.entity_dim;
      Tensor re({n, nhat}), im({n, nhat});
      for (int64_t r = 0; r < n; ++r) {
        std::copy(block.row_ptr(r), block.row_ptr(r) + nhat, re.row_ptr(r));
        std::copy(block.row_ptr(r) + nhat, block.row_ptr(r) + 2 * nhat, im.row_ptr(r));
      }
      Tensor lre = lift_block(re), lim = lift_block(im);
      lifted = Tensor({n, 2 * params.score_dim});
      for (int64_t r = 0; r < n; ++r) {
        std::copy(lre.row_ptr(r), lre.row_ptr(r) + params.score_dim, lifted.row_ptr(r));
        std::copy(lim.row_ptr(r), lim.row_ptr(r) + params.score_dim,
                  lifted.row_ptr(r) + params.score_dim);
      }
    } else {
      lifted = lift_block(block);
    }
    std::copy(lifted.data.begin(), lifted.data.end(), out.data.begin() + start * out.cols());
  }
  return out;
}

}  // namespace liftkg
