#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "liftkg/kg_data.hpp"
#include "liftkg/models.hpp"

namespace liftkg {

enum class QueryDirection { kReplaceHead, kReplaceTail };
enum class TiePolicy { kOptimistic, kAverage };

TiePolicy parse_tie_policy(const std::string& name);

struct EvalOptions {
  TiePolicy tie_policy = TiePolicy::kOptimistic;
  int threads = 0;  // 0 = hardware concurrency
  std::vector<int> hits_ks = {1, 3, 10};
};

struct RankResult {
  Triple triple;
  QueryDirection direction = QueryDirection::kReplaceTail;
  double rank = 0;  // fractional under the average tie policy
};

struct EvalReport {
  std::string split;
  double mrr = 0.0;
  std::map<int, double> hits;  // k -> fraction of queries with rank <= k
  int64_t query_count = 0;
  double mrr_replace_head = 0.0;
  double mrr_replace_tail = 0.0;
};

/// Frozen score-space view of a model for candidate scoring: with a lift
/// network all entity embeddings are materialized once, which is exact
/// because parameters do not move during evaluation.
class EvalContext {
 public:
  explicit EvalContext(const ModelParams& params);

  /// Scores of every candidate substitution for the query; same convention
  /// as the model.
  void score_candidates(const Triple& triple, QueryDirection direction,
                        std::vector<double>& scores) const;

  /// Filtered rank of the gold entity. A null filter gives the raw rank.
  double rank(const Triple& triple, QueryDirection direction, const FilterIndex* filter,
              TiePolicy policy) const;

  int64_t entity_count() const { return params_.entity_count; }
  const ModelParams& params() const { return params_; }

 private:
  const ModelParams& params_;
  Tensor embeddings_;  // [E x score_cols]
};

/// One-shot convenience over a fresh EvalContext.
double rank_candidates(const ModelParams& params, const Triple& triple, QueryDirection direction,
                       const FilterIndex* filter, TiePolicy policy);

/// Filtered link prediction over a split: both query directions per triple,
/// MRR and Hits@k over all 2*|split| queries. Deterministic regardless of
/// thread count.
EvalReport evaluate(const ModelParams& params, const std::vector<Triple>& split,
                    const FilterIndex& filter, const EvalOptions& options,
                    const std::string& split_name);

}  // namespace liftkg
