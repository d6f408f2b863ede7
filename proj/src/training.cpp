#include "liftkg/training.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "liftkg/evaluation.hpp"
#include "liftkg/rng.hpp"

namespace liftkg {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "auto") return LossKind::kAuto;
  if (name == "margin") return LossKind::kMargin;
  if (name == "logistic") return LossKind::kLogistic;
  throw std::invalid_argument("unknown loss '" + name + "' (expected auto, margin or logistic)");
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kAuto: return "auto";
    case LossKind::kMargin: return "margin";
    case LossKind::kLogistic: return "logistic";
  }
  return "?";
}

LossKind resolve_loss(LossKind requested, ModelKind model) {
  if (requested != LossKind::kAuto) return requested;
  return is_translational(model) ? LossKind::kMargin : LossKind::kLogistic;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (margin <= 0) throw std::invalid_argument("margin must be > 0");
  if (l2_reg < 0) throw std::invalid_argument("l2_reg must be >= 0");
  if (negatives_per_positive < 1) throw std::invalid_argument("negatives must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  for (double lr : lr_grid) {
    if (lr <= 0) throw std::invalid_argument("learning rates must be positive");
  }
  if (learning_rate <= 0 && lr_grid.empty()) {
    throw std::invalid_argument("learning_rate must be positive");
  }
}

void adam_step(const std::map<std::string, Tensor*>& params, const GradStore& grads,
               AdamState& state, double learning_rate) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (const auto& [name, tensor] : params) {
    const Tensor* grad = grads.find(name);
    if (grad == nullptr && !state.dense) continue;  // parameter untouched this step
    Tensor zero;
    if (grad == nullptr) {
      zero = Tensor(tensor->shape);
      grad = &zero;
    }
    if (!same_shape(*grad, *tensor)) {
      throw std::invalid_argument("adam_step: gradient shape " + shape_str(grad->shape) +
                                  " does not match parameter '" + name + "' " +
                                  shape_str(tensor->shape));
    }
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments.emplace(name, std::make_pair(Tensor(tensor->shape), Tensor(tensor->shape)))
               .first;
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;

    auto update_range = [&](int64_t begin, int64_t end) {
      for (int64_t j = begin; j < end; ++j) {
        const double g = (*grad)[j];
        m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
        v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        (*tensor)[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        assert(std::isfinite((*tensor)[j]));
      }
    };

    const bool lazy_rows = !state.dense && tensor->shape.size() == 2;
    if (lazy_rows) {
      const int64_t dim = tensor->shape[1];
      for (int64_t r = 0; r < tensor->shape[0]; ++r) {
        const double* grow = grad->data.data() + r * dim;
        bool touched = false;
        for (int64_t j = 0; j < dim; ++j) {
          if (grow[j] != 0.0) {
            touched = true;
            break;
          }
        }
        if (touched) update_range(r * dim, (r + 1) * dim);
      }
    } else {
      update_range(0, tensor->numel());
    }
  }
}

namespace {

// Pair each positive with its block of negatives: pos index j/k for pair j.
Value repeat_per_negative(Tape& tape, Value scores, int64_t batch, int k) {
  if (k == 1) return scores;
  std::vector<int64_t> idx(static_cast<size_t>(batch * k));
  for (int64_t j = 0; j < batch * k; ++j) idx[static_cast<size_t>(j)] = j / k;
  Value two_d = tape.reshape(scores, {batch, 1});
  return tape.reshape(tape.gather_rows(two_d, idx), {batch * k});
}

}  // namespace

Value margin_loss(Tape& tape, Value pos_scores, Value neg_scores, double gamma,
                  ScoreConvention convention, int negatives_per_positive) {
  const int64_t batch = tape.value(pos_scores).shape.at(0);
  Value pos = repeat_per_negative(tape, pos_scores, batch, negatives_per_positive);
  // Distance: max(0, gamma + d_pos - d_neg). Similarity: max(0, gamma + s_neg - s_pos).
  Value gap = convention == ScoreConvention::kLowerIsBetter ? tape.sub(pos, neg_scores)
                                                            : tape.sub(neg_scores, pos);
  return tape.mean(tape.relu(tape.add_scalar(gap, gamma)));
}

Value logistic_loss(Tape& tape, Value pos_scores, Value neg_scores, int negatives_per_positive,
                    double l2_reg, const std::vector<Value>& touched_embeddings) {
  const int64_t batch = tape.value(pos_scores).shape.at(0);
  Value pos = repeat_per_negative(tape, pos_scores, batch, negatives_per_positive);
  Value loss = tape.add(tape.mean(tape.softplus(tape.scale(pos, -1.0))),
                        tape.mean(tape.softplus(neg_scores)));
  if (l2_reg > 0 && !touched_embeddings.empty()) {
    Value sq_sum;
    int64_t rows = 0;
    bool first = true;
    for (Value v : touched_embeddings) {
      Value s = tape.sum(tape.mul(v, v));
      sq_sum = first ? s : tape.add(sq_sum, s);
      first = false;
      rows += tape.value(v).shape.at(0);
    }
    loss = tape.add(loss, tape.scale(sq_sum, l2_reg / static_cast<double>(rows)));
  }
  return loss;
}

TrainResult train(const KnowledgeGraph& kg, const FilterIndex& filter, const ModelSpec& spec,
                  const TrainConfig& cfg, double learning_rate) {
  cfg.validate();
  if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be positive");
  if (kg.train.empty()) throw std::invalid_argument("training split is empty");

  ModelParams params = init_model_params(spec, kg.entity_count, kg.relation_count, cfg.seed);
  auto tensors = trainable_tensors(params);
  AdamState adam;
  adam.dense = cfg.dense_adam;
  const LossKind loss_kind = resolve_loss(cfg.loss, spec.kind);
  const ScoreConvention convention = convention_of(spec.kind);
  const int k = cfg.negatives_per_positive;

  auto sampler_rng = make_rng(cfg.seed, 0x5a3b17);
  NegSampleConfig neg_cfg{k, cfg.seed};

  TrainRecord record;
  record.learning_rate = learning_rate;
  ModelParams best = params;
  int64_t best_epoch = -1;
  double best_mrr = -1.0;

  EvalOptions eval_opts;
  eval_opts.threads = cfg.eval_threads;
  eval_opts.hits_ks = {1, 3, 10};

  for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = shuffled_batches(kg.train, cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (size_t b = 0; b < batches.size(); ++b) {
      CorruptedBatch sampled = negative_sample(batches[b], kg.entity_count, neg_cfg, sampler_rng);
      const int64_t batch = static_cast<int64_t>(sampled.positives.size());

      std::vector<Triple> all = sampled.positives;
      all.insert(all.end(), sampled.negatives.begin(), sampled.negatives.end());

      Tape tape;
      ModelOnTape model(tape, params);

      std::vector<int64_t> heads, relations, tails;
      heads.reserve(all.size());
      relations.reserve(all.size());
      tails.reserve(all.size());
      for (const Triple& t : all) {
        heads.push_back(t.head);
        relations.push_back(t.relation);
        tails.push_back(t.tail);
      }
      Value h = model.embed_entities(heads);
      Value r = model.relation_rows(relations);
      Value t = model.embed_entities(tails);
      Value scores;
      switch (spec.kind) {
        case ModelKind::kTransE:
          scores = score_transe(tape, h, r, t, spec.norm_order);
          break;
        case ModelKind::kTransH:
          scores = score_transh(tape, h, r, model.hyperplane_rows(relations), t, spec.norm_order);
          break;
        case ModelKind::kDistMult:
          scores = score_distmult(tape, h, r, t);
          break;
        case ModelKind::kComplEx:
          scores = score_complex(tape, h, r, t);
          break;
      }
      Value scores_2d = tape.reshape(scores, {batch * (1 + k), 1});
      std::vector<int64_t> pos_idx(static_cast<size_t>(batch));
      std::iota(pos_idx.begin(), pos_idx.end(), 0);
      std::vector<int64_t> neg_idx(static_cast<size_t>(batch * k));
      std::iota(neg_idx.begin(), neg_idx.end(), batch);
      Value pos = tape.reshape(tape.gather_rows(scores_2d, pos_idx), {batch});
      Value neg = tape.reshape(tape.gather_rows(scores_2d, neg_idx), {batch * k});

      Value loss = loss_kind == LossKind::kMargin
                       ? margin_loss(tape, pos, neg, cfg.margin, convention, k)
                       : logistic_loss(tape, pos, neg, k, cfg.l2_reg, {h, r, t});

      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        throw TrainDivergedError("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(b) +
                                 " (lr=" + std::to_string(learning_rate) + ")");
      }
      loss_sum += loss_value;

      GradStore grads = tape.backward(loss);
      adam_step(tensors, grads, adam, learning_rate);
      normalize_constraints(params);
    }
    record.epoch_loss.push_back(loss_sum / static_cast<double>(batches.size()));

    if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
      const EvalReport val = evaluate(params, kg.valid.empty() ? kg.train : kg.valid, filter,
                                      eval_opts, kg.valid.empty() ? "train" : "valid");
      record.validation.emplace_back(epoch, val.mrr);
      if (val.mrr > best_mrr) {
        best_mrr = val.mrr;
        best_epoch = epoch;
        best = params;
      }
    }
  }

  record.best_epoch = best_epoch;
  record.best_validation_mrr = best_mrr;
  TrainResult result;
  result.best = std::move(best);
  result.record = std::move(record);
  return result;
}

GridSearchResult lr_grid_search(const KnowledgeGraph& kg, const FilterIndex& filter,
                                const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<double> grid = cfg.lr_grid;
  if (grid.empty()) grid.push_back(cfg.learning_rate);

  std::vector<TrainResult> results(grid.size());
  if (cfg.parallel_grid && grid.size() > 1) {
    std::vector<std::future<TrainResult>> futures;
    futures.reserve(grid.size());
    for (double lr : grid) {
      futures.push_back(std::async(std::launch::async,
                                   [&, lr] { return train(kg, filter, spec, cfg, lr); }));
    }
    for (size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
  } else {
    for (size_t i = 0; i < grid.size(); ++i) results[i] = train(kg, filter, spec, cfg, grid[i]);
  }

  size_t best_idx = 0;
  for (size_t i = 1; i < grid.size(); ++i) {
    const double best_mrr = results[best_idx].record.best_validation_mrr;
    const double mrr = results[i].record.best_validation_mrr;
    // Ties break toward the smaller learning rate.
    if (mrr > best_mrr || (mrr == best_mrr && grid[i] < grid[best_idx])) best_idx = i;
  }

  GridSearchResult out;
  out.best_lr = grid[best_idx];
  out.best = std::move(results[best_idx]);
  for (size_t i = 0; i < grid.size(); ++i) {
    if (i == best_idx) {
      out.records.push_back(out.best.record);
    } else {
      out.records.push_back(std::move(results[i].record));
    }
  }
  return out;
}

}  // namespace liftkg
