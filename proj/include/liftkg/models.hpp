#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "liftkg/kg_data.hpp"
#include "liftkg/liftnet.hpp"
#include "liftkg/tape.hpp"
#include "liftkg/tensor.hpp"

namespace liftkg {

enum class ModelKind { kTransE, kTransH, kDistMult, kComplEx };
enum class LiftKind { kNone, kTC, kFC };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);
LiftKind parse_lift_kind(const std::string& name);
std::string lift_kind_name(LiftKind kind);

/// Distance scores rank ascending, similarity scores descending.
enum class ScoreConvention { kLowerIsBetter, kHigherIsBetter };

inline ScoreConvention convention_of(ModelKind kind) {
  return (kind == ModelKind::kTransE || kind == ModelKind::kTransH)
             ? ScoreConvention::kLowerIsBetter
             : ScoreConvention::kHigherIsBetter;
}

inline bool is_complex(ModelKind kind) { return kind == ModelKind::kComplEx; }
inline bool is_translational(ModelKind kind) {
  return kind == ModelKind::kTransE || kind == ModelKind::kTransH;
}

struct ModelSpec {
  ModelKind kind = ModelKind::kTransE;
  int norm_order = 2;           // TransE/TransH only
  int64_t entity_dim = 512;     // nominal stored dim (n-hat with lifting, else n)
  int64_t score_dim = 512;      // nominal n; ComplEx stores 2x reals per dim
  LiftKind lift = LiftKind::kNone;
  int lift_layers = 2;
};

/// All trainable state of one model. Entity rows hold the narrow stored
/// embedding when a lift network is present; relations (and TransH
/// hyperplanes) always live in score space.
struct ModelParams {
  ModelKind kind = ModelKind::kTransE;
  int norm_order = 2;
  int64_t entity_count = 0;
  int64_t relation_count = 0;
  int64_t entity_dim = 0;  // nominal
  int64_t score_dim = 0;   // nominal
  uint64_t seed = 0;

  Tensor entity_table;      // [E x entity_dim] (ComplEx: [E x 2*entity_dim])
  Tensor relation_table;    // [R x score_dim] (ComplEx: [R x 2*score_dim])
  Tensor hyperplane_table;  // [R x score_dim], TransH only

  LiftKind lift_kind = LiftKind::kNone;
  LiftNetConfig liftnet;  // per real channel: entity_dim -> score_dim
  LiftNetParams liftnet_params;
  FCVariantConfig fc;
  FCVariantParams fc_params;

  bool has_lift() const { return lift_kind != LiftKind::kNone; }
  int64_t stored_entity_cols() const { return is_complex(kind) ? 2 * entity_dim : entity_dim; }
  int64_t score_cols() const { return is_complex(kind) ? 2 * score_dim : score_dim; }
  void validate() const;
};

ModelParams init_model_params(const ModelSpec& spec, int64_t entity_count, int64_t relation_count,
                              uint64_t seed);

/// Named views of every trainable tensor, for the optimizer and checkpoints.
std::map<std::string, Tensor*> trainable_tensors(ModelParams& params);
std::map<std::string, const Tensor*> trainable_tensors(const ModelParams& params);

// Score functions over already-embedded rows (Table-style definitions).
Value score_transe(Tape& tape, Value head, Value relation, Value tail, int p);
Value score_transh(Tape& tape, Value head, Value relation, Value hyperplane, Value tail, int p);
Value score_distmult(Tape& tape, Value head, Value relation, Value tail);
/// Split real/imaginary halves ([b x 2n] with reals first); the tail is
/// conjugated, which is what lets the model represent asymmetric relations.
Value score_complex(Tape& tape, Value head, Value relation, Value tail);

/// Binds a parameter set onto a tape (one leaf per tensor) and builds
/// recorded forward passes. One instance per tape.
class ModelOnTape {
 public:
  ModelOnTape(Tape& tape, const ModelParams& params);

  /// Score-space embeddings for the given entity ids; duplicates are lifted
  /// once and expanded by a gather.
  Value embed_entities(const std::vector<int64_t>& ids);
  Value relation_rows(const std::vector<int64_t>& ids);
  Value hyperplane_rows(const std::vector<int64_t>& ids);

  /// Raw scores for a batch of triples under the model's own convention.
  Value score(const std::vector<Triple>& triples);

 private:
  Tape& tape_;
  const ModelParams& params_;
  Value entity_leaf_, relation_leaf_, hyperplane_leaf_;
  std::vector<Value> kernel_leaves_, weight_leaves_, bias_leaves_;
};

/// Post-step constraints: TransH hyperplanes to unit norm; non-lifted
/// TransE/TransH entity rows clamped to norm <= 1. No-op otherwise.
void normalize_constraints(ModelParams& params);

/// Score-space entity table for evaluation: lifted once if a lift network
/// is present, otherwise a copy of the stored table.
Tensor materialize_entity_embeddings(const ModelParams& params);

}  // namespace liftkg
