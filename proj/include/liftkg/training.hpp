#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftkg/kg_data.hpp"
#include "liftkg/models.hpp"
#include "liftkg/tape.hpp"

namespace liftkg {

enum class LossKind { kAuto, kMargin, kLogistic };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);

/// kAuto picks margin for TransE/TransH and logistic for DistMult/ComplEx.
LossKind resolve_loss(LossKind requested, ModelKind model);

struct TrainConfig {
  double learning_rate = 0.1;
  std::vector<double> lr_grid;  // empty: train once at learning_rate
  int64_t max_epochs = 500;
  int64_t batch_size = 256;
  double margin = 4.0;      // margin loss
  double l2_reg = 1e-5;     // logistic loss
  LossKind loss = LossKind::kAuto;
  int negatives_per_positive = 1;
  int64_t eval_every = 10;  // validation cadence in epochs
  uint64_t seed = 12;
  bool dense_adam = false;  // update every moment each step instead of touched rows
  int eval_threads = 0;     // 0 = hardware concurrency
  bool parallel_grid = true;

  void validate() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step = 0;
  bool dense = false;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // first, second
};

/// Bias-corrected Adam. In the default lazy mode, 2-D table rows whose
/// gradient is entirely zero are untouched; dense mode decays every moment.
void adam_step(const std::map<std::string, Tensor*>& params, const GradStore& grads,
               AdamState& state, double learning_rate);

/// Hinge on score pairs, expressed so the positive is pushed to score
/// better under the given convention. Negatives come in blocks of
/// negatives_per_positive per positive.
Value margin_loss(Tape& tape, Value pos_scores, Value neg_scores, double gamma,
                  ScoreConvention convention, int negatives_per_positive);

/// softplus(-pos) + softplus(+neg) averaged over pairs (similarity
/// convention), plus l2_reg times the mean squared row norm of the
/// embeddings touched in the batch.
Value logistic_loss(Tape& tape, Value pos_scores, Value neg_scores, int negatives_per_positive,
                    double l2_reg, const std::vector<Value>& touched_embeddings);

struct TrainRecord {
  double learning_rate = 0.0;
  std::vector<double> epoch_loss;                        // index = epoch - 1
  std::vector<std::pair<int64_t, double>> validation;    // (epoch, filtered MRR)
  int64_t best_epoch = -1;
  double best_validation_mrr = 0.0;
};

struct TrainResult {
  ModelParams best;  // checkpoint at the best validation MRR
  TrainRecord record;
};

class TrainDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full training loop: shuffle, corrupt, score, backprop, Adam, constraint
/// projection; validation MRR every eval_every epochs (and at the final
/// epoch) selects the returned checkpoint. Aborts with TrainDivergedError
/// naming epoch and batch if the loss leaves the reals.
TrainResult train(const KnowledgeGraph& kg, const FilterIndex& filter, const ModelSpec& spec,
                  const TrainConfig& cfg, double learning_rate);

struct GridSearchResult {
  double best_lr = 0.0;
  TrainResult best;
  std::vector<TrainRecord> records;  // one per grid entry, in grid order
};

/// Trains once per grid value with the same seed; selects by best
/// validation MRR, ties toward the smaller learning rate.
GridSearchResult lr_grid_search(const KnowledgeGraph& kg, const FilterIndex& filter,
                                const ModelSpec& spec, const TrainConfig& cfg);

}  // namespace liftkg
