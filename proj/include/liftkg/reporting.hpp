#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "liftkg/evaluation.hpp"
#include "liftkg/models.hpp"

namespace liftkg {

struct ParamBreakdown {
  int64_t entity = 0;
  int64_t relation = 0;
  int64_t hyperplane = 0;
  int64_t liftnet = 0;
};

struct ParamReport {
  int64_t exact = 0;
  double millions = 0.0;  // exact / 1e6 rounded half-up to 3 decimals
  ParamBreakdown breakdown;
};

/// exact / 1e6 rounded half-up to 3 decimals.
double round_millions(int64_t exact);

/// Model parameter accounting: entity |E|*d_e, relation |R|*n (both doubled
/// for ComplEx), |R|*n hyperplanes for TransH, plus the lift network if any.
ParamReport count_params(const ModelSpec& spec, int64_t entity_count, int64_t relation_count);

/// 100 * lifted/baseline from the exact integers, half-up to one decimal.
double efficiency_percentage(const ParamReport& lifted, const ParamReport& baseline);

using Cell = std::variant<std::string, int64_t, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

enum class TableFormat { kMarkdown, kCsv, kJson };

TableFormat parse_table_format(const std::string& name);

/// Deterministic emission; every row must match the column count.
std::string emit_table(const Table& table, TableFormat format);

/// Accuracy-table layout: dataset, model, dim, mrr, h1, h3, h10 (plus
/// parameter columns when a report is given).
Table result_table();
void append_result_row(Table& table, const std::string& dataset, const std::string& model,
                       int64_t dim, const EvalReport& eval, const ParamReport* params);

std::string eval_report_json(const EvalReport& report);
std::string param_report_json(const ParamReport& report);

}  // namespace liftkg
