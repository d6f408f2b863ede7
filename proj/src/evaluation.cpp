#include "liftkg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace liftkg {

TiePolicy parse_tie_policy(const std::string& name) {
  if (name == "optimistic") return TiePolicy::kOptimistic;
  if (name == "average") return TiePolicy::kAverage;
  throw std::invalid_argument("unknown tie policy '" + name + "' (expected optimistic or average)");
}

EvalContext::EvalContext(const ModelParams& params)
    : params_(params), embeddings_(materialize_entity_embeddings(params)) {}

void EvalContext::score_candidates(const Triple& triple, QueryDirection direction,
                                   std::vector<double>& scores) const {
  const int64_t e_count = params_.entity_count;
  scores.resize(static_cast<size_t>(e_count));
  const int64_t cols = embeddings_.cols();
  const double* emb = embeddings_.data.data();
  const double* fixed = direction == QueryDirection::kReplaceTail
                            ? embeddings_.row_ptr(triple.head)
                            : embeddings_.row_ptr(triple.tail);
  const double* rel = params_.relation_table.row_ptr(triple.relation);

  switch (params_.kind) {
    case ModelKind::kTransE: {
      // tail query: ||q - e||, q = h + r;  head query: ||e - q'||, q' = t - r.
      std::vector<double> q(static_cast<size_t>(cols));
      for (int64_t j = 0; j < cols; ++j) {
        q[static_cast<size_t>(j)] = direction == QueryDirection::kReplaceTail
                                        ? fixed[j] + rel[j]
                                        : fixed[j] - rel[j];
      }
      for (int64_t e = 0; e < e_count; ++e) {
        const double* row = emb + e * cols;
        double s = 0.0;
        if (params_.norm_order == 1) {
          for (int64_t j = 0; j < cols; ++j) s += std::abs(q[static_cast<size_t>(j)] - row[j]);
        } else {
          for (int64_t j = 0; j < cols; ++j) {
            const double d = q[static_cast<size_t>(j)] - row[j];
            s += d * d;
          }
          s = std::sqrt(s);
        }
        scores[static_cast<size_t>(e)] = s;
      }
      break;
    }
    case ModelKind::kTransH: {
      const double* w = params_.hyperplane_table.row_ptr(triple.relation);
      double wf = 0.0;
      for (int64_t j = 0; j < cols; ++j) wf += w[j] * fixed[j];
      // Projected fixed entity plus/minus relation.
      std::vector<double> q(static_cast<size_t>(cols));
      for (int64_t j = 0; j < cols; ++j) {
        const double proj = fixed[j] - wf * w[j];
        q[static_cast<size_t>(j)] = direction == QueryDirection::kReplaceTail ? proj + rel[j]
                                                                              : proj - rel[j];
      }
      for (int64_t e = 0; e < e_count; ++e) {
        const double* row = emb + e * cols;
        double we = 0.0;
        for (int64_t j = 0; j < cols; ++j) we += w[j] * row[j];
        double s = 0.0;
        if (params_.norm_order == 1) {
          for (int64_t j = 0; j < cols; ++j) {
            s += std::abs(q[static_cast<size_t>(j)] - (row[j] - we * w[j]));
          }
        } else {
          for (int64_t j = 0; j < cols; ++j) {
            const double d = q[static_cast<size_t>(j)] - (row[j] - we * w[j]);
            s += d * d;
          }
          s = std::sqrt(s);
        }
        scores[static_cast<size_t>(e)] = s;
      }
      break;
    }
    case ModelKind::kDistMult: {
      // <h, r, t> is linear in the free slot either way.
      std::vector<double> q(static_cast<size_t>(cols));
      for (int64_t j = 0; j < cols; ++j) q[static_cast<size_t>(j)] = fixed[j] * rel[j];
      for (int64_t e = 0; e < e_count; ++e) {
        const double* row = emb + e * cols;
        double s = 0.0;
        for (int64_t j = 0; j < cols; ++j) s += q[static_cast<size_t>(j)] * row[j];
        scores[static_cast<size_t>(e)] = s;
      }
      break;
    }
    case ModelKind::kComplEx: {
      const int64_t n = params_.score_dim;
      const double* fr = fixed;
      const double* fi = fixed + n;
      const double* rr = rel;
      const double* ri = rel + n;
      std::vector<double> qr(static_cast<size_t>(n)), qi(static_cast<size_t>(n));
      if (direction == QueryDirection::kReplaceTail) {
        // Re(<h, r, conj(e)>) = e_re . (hr*rr - hi*ri) + e_im . (hr*ri + hi*rr)
        for (int64_t j = 0; j < n; ++j) {
          qr[static_cast<size_t>(j)] = fr[j] * rr[j] - fi[j] * ri[j];
          qi[static_cast<size_t>(j)] = fr[j] * ri[j] + fi[j] * rr[j];
        }
      } else {
        // Re(<e, r, conj(t)>) = e_re . (rr*tr + ri*ti) + e_im . (rr*ti - ri*tr)
        for (int64_t j = 0; j < n; ++j) {
          qr[static_cast<size_t>(j)] = rr[j] * fr[j] + ri[j] * fi[j];
          qi[static_cast<size_t>(j)] = rr[j] * fi[j] - ri[j] * fr[j];
        }
      }
      for (int64_t e = 0; e < e_count; ++e) {
        const double* er = emb + e * cols;
        const double* ei = er + n;
        double s = 0.0;
        for (int64_t j = 0; j < n; ++j) {
          s += qr[static_cast<size_t>(j)] * er[j] + qi[static_cast<size_t>(j)] * ei[j];
        }
        scores[static_cast<size_t>(e)] = s;
      }
      break;
    }
  }
}

namespace {

double rank_from_scores(const std::vector<double>& scores, int32_t gold,
                        const std::vector<int32_t>& known_true, ScoreConvention convention,
                        TiePolicy policy) {
  const double gold_score = scores[static_cast<size_t>(gold)];
  int64_t better = 0, ties = 0;
  size_t known_idx = 0;
  for (int32_t e = 0; e < static_cast<int32_t>(scores.size()); ++e) {
    while (known_idx < known_true.size() && known_true[known_idx] < e) ++known_idx;
    const bool is_known = known_idx < known_true.size() && known_true[known_idx] == e;
    if (e == gold) continue;
    if (is_known) continue;  // filtered: drop other true triples from the candidate list
    const double s = scores[static_cast<size_t>(e)];
    const bool is_better = convention == ScoreConvention::kLowerIsBetter ? s < gold_score
                                                                         : s > gold_score;
    if (is_better) {
      ++better;
    } else if (s == gold_score) {
      ++ties;
    }
  }
  if (policy == TiePolicy::kOptimistic) return static_cast<double>(better + 1);
  return static_cast<double>(better) + static_cast<double>(ties) / 2.0 + 1.0;
}

}  // namespace

double EvalContext::rank(const Triple& triple, QueryDirection direction, const FilterIndex* filter,
                         TiePolicy policy) const {
  std::vector<double> scores;
  score_candidates(triple, direction, scores);
  static const std::vector<int32_t> kNone;
  const std::vector<int32_t>& known =
      filter == nullptr ? kNone
      : direction == QueryDirection::kReplaceTail
          ? filter->tails(triple.head, triple.relation)
          : filter->heads(triple.relation, triple.tail);
  const int32_t gold = direction == QueryDirection::kReplaceTail ? triple.tail : triple.head;
  return rank_from_scores(scores, gold, known, convention_of(params_.kind), policy);
}

double rank_candidates(const ModelParams& params, const Triple& triple, QueryDirection direction,
                       const FilterIndex* filter, TiePolicy policy) {
  return EvalContext(params).rank(triple, direction, filter, policy);
}

EvalReport evaluate(const ModelParams& params, const std::vector<Triple>& split,
                    const FilterIndex& filter, const EvalOptions& options,
                    const std::string& split_name) {
  if (split.empty()) throw std::invalid_argument("evaluate: empty split '" + split_name + "'");
  EvalContext ctx(params);

  // ranks[2*i] = replace-tail query, ranks[2*i + 1] = replace-head query.
  std::vector<double> ranks(split.size() * 2, 0.0);
  int n_threads = options.threads > 0 ? options.threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min<int>(n_threads, static_cast<int>(split.size()));

  auto worker = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      ranks[2 * i] = ctx.rank(split[i], QueryDirection::kReplaceTail, &filter,
                              options.tie_policy);
      ranks[2 * i + 1] = ctx.rank(split[i], QueryDirection::kReplaceHead, &filter,
                                  options.tie_policy);
    }
  };
  if (n_threads == 1) {
    worker(0, split.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (split.size() + static_cast<size_t>(n_threads) - 1) /
                         static_cast<size_t>(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      const size_t begin = static_cast<size_t>(t) * chunk;
      const size_t end = std::min(split.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Fixed-order reductions keep reports identical run to run.
  EvalReport report;
  report.split = split_name;
  report.query_count = static_cast<int64_t>(ranks.size());
  double inv_sum = 0.0, inv_tail = 0.0, inv_head = 0.0;
  for (size_t i = 0; i < ranks.size(); ++i) {
    const double inv = 1.0 / ranks[i];
    inv_sum += inv;
    (i % 2 == 0 ? inv_tail : inv_head) += inv;
  }
  report.mrr = inv_sum / static_cast<double>(ranks.size());
  report.mrr_replace_tail = inv_tail / static_cast<double>(split.size());
  report.mrr_replace_head = inv_head / static_cast<double>(split.size());
  for (int k : options.hits_ks) {
    int64_t hit = 0;
    for (double r : ranks) {
      if (r <= static_cast<double>(k)) ++hit;
    }
    report.hits[k] = static_cast<double>(hit) / static_cast<double>(ranks.size());
  }
  return report;
}

}  // namespace liftkg
