#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace liftkg {

struct Triple {
  int32_t head = 0;
  int32_t relation = 0;
  int32_t tail = 0;

  friend bool operator==(const Triple& a, const Triple& b) {
    return a.head == b.head && a.relation == b.relation && a.tail == b.tail;
  }
};

enum class DatasetFormat { kOpenKE, kTsv };

DatasetFormat parse_dataset_format(const std::string& name);

/// Integer-id triple store with train/valid/test splits. Immutable after
/// construction; safe to share across evaluation workers.
struct KnowledgeGraph {
  int64_t entity_count = 0;
  int64_t relation_count = 0;
  std::vector<Triple> train, valid, test;
  std::vector<std::string> entity_names, relation_names;

  const std::vector<Triple>& split(const std::string& name) const;
  void validate() const;
};

/// OpenKE layout: entity2id.txt / relation2id.txt (count line, then
/// "name<TAB>id"), {train,valid,test}2id.txt (count line, then
/// "head_id tail_id relation_id"). TSV layout: {train,valid,test}.txt with
/// one "head<TAB>relation<TAB>tail" string triple per line, vocabularies
/// inferred over all files in order of first appearance.
KnowledgeGraph load_dataset(const std::string& path, DatasetFormat format);
void save_dataset(const KnowledgeGraph& kg, const std::string& path, DatasetFormat format);

/// (head, relation) -> true tails and (relation, tail) -> true heads over
/// train + valid + test, for filtered ranking.
class FilterIndex {
 public:
  explicit FilterIndex(const KnowledgeGraph& kg);

  const std::vector<int32_t>& tails(int32_t head, int32_t relation) const;
  const std::vector<int32_t>& heads(int32_t relation, int32_t tail) const;
  bool contains(const Triple& t) const;

 private:
  std::unordered_map<uint64_t, std::vector<int32_t>> tails_by_hr_;
  std::unordered_map<uint64_t, std::vector<int32_t>> heads_by_rt_;
  std::vector<int32_t> empty_;
};

struct NegSampleConfig {
  int negatives_per_positive = 1;
  uint64_t seed = 0;
};

struct CorruptedBatch {
  std::vector<Triple> positives;
  std::vector<Triple> negatives;  // negatives_per_positive per positive, in order
};

/// Uniform corruption: each negative replaces head or tail (coin flip) with
/// a uniformly random entity, resampled until it differs from the original
/// entity in that slot. Deterministic given the rng state.
CorruptedBatch negative_sample(const std::vector<Triple>& batch, int64_t entity_count,
                               const NegSampleConfig& cfg, std::mt19937_64& rng);

/// Deterministic per (seed, epoch) shuffle into batches covering the split
/// exactly once.
std::vector<std::vector<Triple>> shuffled_batches(const std::vector<Triple>& split,
                                                  int64_t batch_size, uint64_t seed,
                                                  int64_t epoch);

}  // namespace liftkg
