#include "liftkg/reporting.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace liftkg {

using nlohmann::json;

double round_millions(int64_t exact) {
  // Integer half-up at the third decimal of a million.
  const int64_t thousandths = (exact + 500) / 1000;
  return static_cast<double>(thousandths) / 1000.0;
}

ParamReport count_params(const ModelSpec& spec, int64_t entity_count, int64_t relation_count) {
  if (entity_count < 1 || relation_count < 1 || spec.entity_dim < 1 || spec.score_dim < 1) {
    throw std::invalid_argument("count_params: counts and dims must be positive");
  }
  const int64_t complex_factor = is_complex(spec.kind) ? 2 : 1;
  ParamReport report;
  report.breakdown.entity = entity_count * spec.entity_dim * complex_factor;
  report.breakdown.relation = relation_count * spec.score_dim * complex_factor;
  if (spec.kind == ModelKind::kTransH) {
    report.breakdown.hyperplane = relation_count * spec.score_dim;
  }
  if (spec.lift == LiftKind::kTC) {
    report.breakdown.liftnet =
        param_count_liftnet(plan_liftnet(spec.entity_dim, spec.score_dim, spec.lift_layers));
  } else if (spec.lift == LiftKind::kFC) {
    report.breakdown.liftnet =
        param_count_fc_variant(plan_fc_variant(spec.entity_dim, spec.score_dim, spec.lift_layers));
  }
  report.exact = report.breakdown.entity + report.breakdown.relation +
                 report.breakdown.hyperplane + report.breakdown.liftnet;
  report.millions = round_millions(report.exact);
  return report;
}

double efficiency_percentage(const ParamReport& lifted, const ParamReport& baseline) {
  if (baseline.exact == 0) throw std::invalid_argument("efficiency_percentage: zero baseline");
  const double ratio = 1000.0 * static_cast<double>(lifted.exact) /
                       static_cast<double>(baseline.exact);
  return std::floor(ratio + 0.5) / 10.0;
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "markdown") return TableFormat::kMarkdown;
  if (name == "csv") return TableFormat::kCsv;
  if (name == "json") return TableFormat::kJson;
  throw std::invalid_argument("unknown table format '" + name +
                              "' (expected markdown, csv or json)");
}

namespace {

std::string cell_text(const Cell& cell) {
  if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
  if (std::holds_alternative<int64_t>(cell)) return std::to_string(std::get<int64_t>(cell));
  const double v = std::get<double>(cell);
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void check_schema(const Table& table) {
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw std::invalid_argument("table row has " + std::to_string(row.size()) +
                                  " cells, expected " + std::to_string(table.columns.size()));
    }
  }
}

}  // namespace

std::string emit_table(const Table& table, TableFormat format) {
  check_schema(table);
  std::ostringstream out;
  switch (format) {
    case TableFormat::kCsv: {
      for (size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ",";
        out << csv_escape(table.columns[c]);
      }
      out << "\n";
      for (const auto& row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
          if (c) out << ",";
          out << csv_escape(cell_text(row[c]));
        }
        out << "\n";
      }
      break;
    }
    case TableFormat::kMarkdown: {
      out << "|";
      for (const auto& col : table.columns) out << " " << col << " |";
      out << "\n|";
      for (size_t c = 0; c < table.columns.size(); ++c) out << " --- |";
      out << "\n";
      for (const auto& row : table.rows) {
        out << "|";
        for (const auto& cell : row) out << " " << cell_text(cell) << " |";
        out << "\n";
      }
      break;
    }
    case TableFormat::kJson: {
      json rows = json::array();
      for (const auto& row : table.rows) {
        json obj = json::object();
        for (size_t c = 0; c < row.size(); ++c) {
          const Cell& cell = row[c];
          if (std::holds_alternative<std::string>(cell)) {
            obj[table.columns[c]] = std::get<std::string>(cell);
          } else if (std::holds_alternative<int64_t>(cell)) {
            obj[table.columns[c]] = std::get<int64_t>(cell);
          } else {
            obj[table.columns[c]] = std::get<double>(cell);
          }
        }
        rows.push_back(std::move(obj));
      }
      out << rows.dump(2) << "\n";
      break;
    }
  }
  return out.str();
}

Table result_table() {
  Table t;
  t.columns = {"dataset", "model", "dim", "mrr", "h1", "h3", "h10", "params_exact",
               "params_millions", "percentage"};
  return t;
}

void append_result_row(Table& table, const std::string& dataset, const std::string& model,
                       int64_t dim, const EvalReport& eval, const ParamReport* params) {
  auto hit = [&](int k) {
    auto it = eval.hits.find(k);
    return it == eval.hits.end() ? 0.0 : it->second;
  };
  std::vector<Cell> row{dataset, model, dim, eval.mrr, hit(1), hit(3), hit(10),
                        std::string(), std::string(), std::string()};
  if (params != nullptr) {
    row[7] = params->exact;
    row[8] = params->millions;
  }
  table.rows.push_back(std::move(row));
}

std::string eval_report_json(const EvalReport& report) {
  json j;
  j["split"] = report.split;
  j["mrr"] = report.mrr;
  json hits = json::object();
  for (const auto& [k, v] : report.hits) hits["h" + std::to_string(k)] = v;
  j["hits"] = hits;
  j["query_count"] = report.query_count;
  j["mrr_replace_head"] = report.mrr_replace_head;
  j["mrr_replace_tail"] = report.mrr_replace_tail;
  return j.dump(2);
}

std::string param_report_json(const ParamReport& report) {
  json j;
  j["exact"] = report.exact;
  j["millions"] = report.millions;
  j["breakdown"] = {{"entity", report.breakdown.entity},
                    {"relation", report.breakdown.relation},
                    {"hyperplane", report.breakdown.hyperplane},
                    {"liftnet", report.breakdown.liftnet}};
  return j.dump(2);
}

}  // namespace liftkg
