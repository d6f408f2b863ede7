#include "liftkg.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "liftkg/checkpoint.hpp"
#include "liftkg/experiment.hpp"
#include "liftkg/kg_data.hpp"
#include "liftkg/models.hpp"
#include "liftkg/reporting.hpp"
#include "liftkg/training.hpp"

using nlohmann::json;

struct lkg_dataset_t {
  liftkg::KnowledgeGraph kg;
};

struct lkg_model_t {
  liftkg::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
lkg_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const liftkg::TrainDivergedError& e) {
    g_last_error = e.what();
    return LKG_RUNTIME_ERROR;
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return LKG_USAGE_ERROR;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return LKG_USAGE_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LKG_RUNTIME_ERROR;
  }
}

lkg_status usage_error(const std::string& msg) {
  g_last_error = msg;
  return LKG_USAGE_ERROR;
}

liftkg::ModelSpec spec_from_json(const json& j) {
  liftkg::ModelSpec spec;
  spec.kind = liftkg::parse_model_kind(j.value("model", "transe"));
  spec.entity_dim = j.value("dim", int64_t{512});
  spec.score_dim = j.value("out_dim", j.value("dim", int64_t{512}));
  spec.lift = liftkg::parse_lift_kind(j.value("liftnet", "none"));
  spec.lift_layers = j.value("layers", 2);
  spec.norm_order = j.value("norm_order", 2);
  return spec;
}

}  // namespace

extern "C" {

const char* lkg_version(void) { return "1.0.0"; }

const char* lkg_last_error(void) { return g_last_error.c_str(); }

void lkg_string_free(char* s) { std::free(s); }

lkg_status lkg_dataset_load(const char* path, const char* format, lkg_dataset_t** out) {
  if (path == nullptr || out == nullptr) return usage_error("lkg_dataset_load: null argument");
  return guarded([&] {
    auto fmt = liftkg::parse_dataset_format(format == nullptr ? "openke" : format);
    auto handle = new lkg_dataset_t{liftkg::load_dataset(path, fmt)};
    *out = handle;
    return LKG_OK;
  });
}

lkg_status lkg_dataset_stats_json(const lkg_dataset_t* dataset, char** out_json) {
  if (dataset == nullptr || out_json == nullptr) {
    return usage_error("lkg_dataset_stats_json: null argument");
  }
  return guarded([&] {
    *out_json = dup_string(liftkg::dataset_stats_json(dataset->kg));
    return LKG_OK;
  });
}

void lkg_dataset_free(lkg_dataset_t* dataset) { delete dataset; }

lkg_status lkg_train(const lkg_dataset_t* dataset, const char* config_json,
                     lkg_model_t** out_model, char** out_summary_json, char** out_log_csv) {
  if (dataset == nullptr || config_json == nullptr) {
    return usage_error("lkg_train: null argument");
  }
  return guarded([&] {
    liftkg::ExperimentConfig cfg = liftkg::ExperimentConfig::from_json(config_json);
    liftkg::TrainOutcome outcome = liftkg::run_training(dataset->kg, cfg);
    if (out_model != nullptr) *out_model = new lkg_model_t{std::move(outcome.best)};
    if (out_summary_json != nullptr) *out_summary_json = dup_string(outcome.summary_json);
    if (out_log_csv != nullptr) *out_log_csv = dup_string(outcome.train_log_csv);
    return LKG_OK;
  });
}

lkg_status lkg_model_save(const lkg_model_t* model, const char* path) {
  if (model == nullptr || path == nullptr) return usage_error("lkg_model_save: null argument");
  return guarded([&] {
    liftkg::save_checkpoint(model->params, path);
    return LKG_OK;
  });
}

lkg_status lkg_model_load(const char* path, lkg_model_t** out) {
  if (path == nullptr || out == nullptr) return usage_error("lkg_model_load: null argument");
  return guarded([&] {
    *out = new lkg_model_t{liftkg::load_checkpoint(path)};
    return LKG_OK;
  });
}

lkg_status lkg_model_info_json(const lkg_model_t* model, char** out_json) {
  if (model == nullptr || out_json == nullptr) {
    return usage_error("lkg_model_info_json: null argument");
  }
  return guarded([&] {
    *out_json = dup_string(liftkg::model_info_json(model->params));
    return LKG_OK;
  });
}

void lkg_model_free(lkg_model_t* model) { delete model; }

lkg_status lkg_evaluate(const lkg_model_t* model, const lkg_dataset_t* dataset, const char* split,
                        const char* options_json, char** out_report_json) {
  if (model == nullptr || dataset == nullptr || split == nullptr || out_report_json == nullptr) {
    return usage_error("lkg_evaluate: null argument");
  }
  return guarded([&] {
    liftkg::EvalOptions options;
    if (options_json != nullptr && options_json[0] != '\0') {
      const json j = json::parse(options_json);
      options.tie_policy = liftkg::parse_tie_policy(j.value("tie_policy", "optimistic"));
      options.threads = j.value("threads", 0);
      options.hits_ks = j.value("ks", options.hits_ks);
    }
    const liftkg::EvalReport report =
        liftkg::run_evaluation(model->params, dataset->kg, split, options);
    *out_report_json = dup_string(liftkg::eval_report_json(report));
    return LKG_OK;
  });
}

lkg_status lkg_count_params(const char* spec_json, char** out_report_json) {
  if (spec_json == nullptr || out_report_json == nullptr) {
    return usage_error("lkg_count_params: null argument");
  }
  return guarded([&] {
    const json j = json::parse(spec_json);
    const int64_t entities = j.at("entities").get<int64_t>();
    const int64_t relations = j.at("relations").get<int64_t>();
    const liftkg::ParamReport report =
        liftkg::count_params(spec_from_json(j), entities, relations);
    json out = json::parse(liftkg::param_report_json(report));
    if (j.contains("baseline")) {
      const json& b = j.at("baseline");
      const liftkg::ParamReport base = liftkg::count_params(
          spec_from_json(b), b.value("entities", entities), b.value("relations", relations));
      out["baseline_exact"] = base.exact;
      out["baseline_millions"] = base.millions;
      out["percentage"] = liftkg::efficiency_percentage(report, base);
    }
    *out_report_json = dup_string(out.dump(2));
    return LKG_OK;
  });
}

lkg_status lkg_plan_liftnet(int input_dim, int output_dim, int num_layers,
                            char** out_config_json) {
  if (out_config_json == nullptr) return usage_error("lkg_plan_liftnet: null argument");
  return guarded([&] {
    const liftkg::LiftNetConfig cfg = liftkg::plan_liftnet(input_dim, output_dim, num_layers);
    json j;
    j["input_dim"] = cfg.input_dim;
    j["output_dim"] = cfg.output_dim;
    j["params"] = liftkg::param_count_liftnet(cfg);
    json layers = json::array();
    for (const liftkg::TCLayerSpec& l : cfg.layers) {
      layers.push_back({{"in_channels", l.in_channels},
                        {"out_channels", l.out_channels},
                        {"kernel", l.kernel},
                        {"stride", l.stride},
                        {"padding", l.padding}});
    }
    j["layers"] = layers;
    *out_config_json = dup_string(j.dump(2));
    return LKG_OK;
  });
}

lkg_status lkg_emit_table(const char* rows_json, const char* format, char** out_text) {
  if (rows_json == nullptr || format == nullptr || out_text == nullptr) {
    return usage_error("lkg_emit_table: null argument");
  }
  return guarded([&] {
    const json rows = json::parse(rows_json);
    if (!rows.is_array()) throw std::invalid_argument("rows must be a JSON array of objects");
    liftkg::Table table;
    for (const json& row : rows) {
      if (!row.is_object()) throw std::invalid_argument("each row must be a JSON object");
      if (table.columns.empty()) {
        for (auto it = row.begin(); it != row.end(); ++it) table.columns.push_back(it.key());
      }
      std::vector<liftkg::Cell> cells;
      for (const std::string& col : table.columns) {
        if (!row.contains(col)) {
          throw std::invalid_argument("row is missing column '" + col + "'");
        }
        const json& v = row.at(col);
        if (v.is_number_integer()) {
          cells.emplace_back(v.get<int64_t>());
        } else if (v.is_number()) {
          cells.emplace_back(v.get<double>());
        } else if (v.is_string()) {
          cells.emplace_back(v.get<std::string>());
        } else {
          cells.emplace_back(v.dump());
        }
      }
      if (cells.size() != row.size()) {
        throw std::invalid_argument("row has columns outside the shared schema");
      }
      table.rows.push_back(std::move(cells));
    }
    *out_text = dup_string(liftkg::emit_table(table, liftkg::parse_table_format(format)));
    return LKG_OK;
  });
}

lkg_status lkg_default_config(const char* preset, char** out_config_json) {
  if (out_config_json == nullptr) return usage_error("lkg_default_config: null argument");
  return guarded([&] {
    const std::string name = preset == nullptr ? "defaults" : preset;
    liftkg::ExperimentConfig cfg;
    if (name == "reproduce") {
      cfg = liftkg::reproduce_preset();
    } else if (name == "defaults") {
      cfg = liftkg::default_config();
    } else {
      throw std::invalid_argument("unknown preset '" + name +
                                  "' (expected defaults or reproduce)");
    }
    *out_config_json = dup_string(cfg.to_json());
    return LKG_OK;
  });
}

}  // extern "C"
