// Test-only oracles, kept independent of the library's computation paths:
// central finite differences for gradients and a plain brute-force scorer
// for filtered ranks.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "liftkg/kg_data.hpp"
#include "liftkg/models.hpp"
#include "liftkg/tape.hpp"
#include "liftkg/tensor.hpp"

namespace oracles {

// Builds a scalar loss from leaves over the given parameters; used both for
// the analytic backward pass and for finite-difference probes.
using LossBuilder = std::function<liftkg::Value(
    liftkg::Tape&, const std::map<std::string, const liftkg::Tensor*>&,
    const std::map<std::string, liftkg::Value>&)>;

struct GradientCheck {
  std::map<std::string, liftkg::Tensor> params;
  LossBuilder build;

  double eval() const {
    liftkg::Tape tape;
    std::map<std::string, const liftkg::Tensor*> ptrs;
    std::map<std::string, liftkg::Value> leaves;
    for (const auto& [name, tensor] : params) ptrs[name] = &tensor;
    for (const auto& [name, tensor] : params) leaves[name] = tape.leaf(name, tensor);
    return tape.value(build(tape, ptrs, leaves))[0];
  }

  liftkg::GradStore analytic() const {
    liftkg::Tape tape;
    std::map<std::string, const liftkg::Tensor*> ptrs;
    std::map<std::string, liftkg::Value> leaves;
    for (const auto& [name, tensor] : params) ptrs[name] = &tensor;
    for (const auto& [name, tensor] : params) leaves[name] = tape.leaf(name, tensor);
    return tape.backward(build(tape, ptrs, leaves));
  }

  // Max relative error between analytic gradients and central differences.
  double max_rel_err(double step = 1e-5) {
    const liftkg::GradStore grads = analytic();
    double worst = 0.0;
    for (auto& [name, tensor] : params) {
      const liftkg::Tensor* grad = grads.find(name);
      for (int64_t i = 0; i < tensor.numel(); ++i) {
        const double saved = tensor[i];
        tensor[i] = saved + step;
        const double up = eval();
        tensor[i] = saved - step;
        const double down = eval();
        tensor[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double analytic_g = grad == nullptr ? 0.0 : (*grad)[i];
        const double err = std::abs(analytic_g - numeric) /
                           std::max({1.0, std::abs(analytic_g), std::abs(numeric)});
        worst = std::max(worst, err);
      }
    }
    return worst;
  }
};

// ---- plain per-triple scoring, reimplemented from the definitions ----

inline double transe_score(const std::vector<double>& h, const std::vector<double>& r,
                           const std::vector<double>& t, int p) {
  double s = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    const double d = h[i] + r[i] - t[i];
    s += p == 1 ? std::abs(d) : d * d;
  }
  return p == 1 ? s : std::sqrt(s);
}

inline std::vector<double> project(const std::vector<double>& e, const std::vector<double>& w) {
  double dot = 0.0;
  for (size_t i = 0; i < e.size(); ++i) dot += e[i] * w[i];
  std::vector<double> out(e.size());
  for (size_t i = 0; i < e.size(); ++i) out[i] = e[i] - dot * w[i];
  return out;
}

inline double transh_score(const std::vector<double>& h, const std::vector<double>& r,
                           const std::vector<double>& w, const std::vector<double>& t, int p) {
  return transe_score(project(h, w), r, project(t, w), p);
}

inline double distmult_score(const std::vector<double>& h, const std::vector<double>& r,
                             const std::vector<double>& t) {
  double s = 0.0;
  for (size_t i = 0; i < h.size(); ++i) s += h[i] * r[i] * t[i];
  return s;
}

// Vectors hold reals first, imaginary second; the tail is conjugated.
inline double complex_score(const std::vector<double>& h, const std::vector<double>& r,
                            const std::vector<double>& t) {
  const size_t n = h.size() / 2;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double hr = h[i], hi = h[n + i];
    const double rr = r[i], ri = r[n + i];
    const double tr = t[i], ti = t[n + i];
    s += (hr * rr - hi * ri) * tr + (hr * ri + hi * rr) * ti;
  }
  return s;
}

inline std::vector<double> row_of(const liftkg::Tensor& table, int64_t row) {
  return std::vector<double>(table.data.begin() + row * table.cols(),
                             table.data.begin() + (row + 1) * table.cols());
}

// Scores one triple straight from the tables (entity rows must already be in
// score space, i.e. pre-lifted by the caller when a lift network exists).
inline double score_triple(const liftkg::ModelParams& params, const liftkg::Tensor& entities,
                           const liftkg::Triple& triple) {
  const auto h = row_of(entities, triple.head);
  const auto r = row_of(params.relation_table, triple.relation);
  const auto t = row_of(entities, triple.tail);
  switch (params.kind) {
    case liftkg::ModelKind::kTransE:
      return transe_score(h, r, t, params.norm_order);
    case liftkg::ModelKind::kTransH:
      return transh_score(h, r, row_of(params.hyperplane_table, triple.relation), t,
                          params.norm_order);
    case liftkg::ModelKind::kDistMult:
      return distmult_score(h, r, t);
    case liftkg::ModelKind::kComplEx:
      return complex_score(h, r, t);
  }
  return 0.0;
}

struct BruteForceRank {
  double optimistic = 0.0;
  double average = 0.0;
};

// Filtered rank by scanning every candidate and every split triple; no
// index structures shared with the library.
inline BruteForceRank brute_force_rank(const liftkg::ModelParams& params,
                                       const liftkg::Tensor& entities,
                                       const liftkg::KnowledgeGraph& kg,
                                       const liftkg::Triple& query, bool replace_tail,
                                       bool filtered) {
  auto known_true = [&](const liftkg::Triple& t) {
    for (const auto* split : {&kg.train, &kg.valid, &kg.test}) {
      for (const liftkg::Triple& other : *split) {
        if (other == t) return true;
      }
    }
    return false;
  };
  const int32_t gold = replace_tail ? query.tail : query.head;
  const double gold_score = score_triple(params, entities, query);
  const bool lower_better = convention_of(params.kind) == liftkg::ScoreConvention::kLowerIsBetter;
  int64_t better = 0, ties = 0;
  for (int32_t e = 0; e < static_cast<int32_t>(kg.entity_count); ++e) {
    if (e == gold) continue;
    liftkg::Triple candidate = query;
    (replace_tail ? candidate.tail : candidate.head) = e;
    if (filtered && known_true(candidate)) continue;
    const double s = score_triple(params, entities, candidate);
    if ((lower_better && s < gold_score) || (!lower_better && s > gold_score)) {
      ++better;
    } else if (s == gold_score) {
      ++ties;
    }
  }
  return {static_cast<double>(better + 1),
          static_cast<double>(better) + static_cast<double>(ties) / 2.0 + 1.0};
}

}  // namespace oracles
