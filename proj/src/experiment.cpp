#include "liftkg/experiment.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace liftkg {

using nlohmann::json;

void ExperimentConfig::validate() const {
  parse_dataset_format(format);
  const ModelKind kind = parse_model_kind(model);
  const LiftKind lift = parse_lift_kind(liftnet);
  parse_tie_policy(tie_policy);
  if (dim < 1 || out_dim < 1) throw std::invalid_argument("dims must be positive");
  if (lift == LiftKind::kNone && dim != out_dim) {
    throw std::invalid_argument("with liftnet=none the entity dim must equal out_dim (got " +
                                std::to_string(dim) + " vs " + std::to_string(out_dim) + ")");
  }
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  if (norm_order != 1 && norm_order != 2) {
    throw std::invalid_argument("norm order must be 1 or 2");
  }
  (void)kind;
  train.validate();
}

ModelSpec ExperimentConfig::model_spec() const {
  validate();
  ModelSpec spec;
  spec.kind = parse_model_kind(model);
  spec.norm_order = norm_order;
  spec.entity_dim = dim;
  spec.score_dim = out_dim;
  spec.lift = parse_lift_kind(liftnet);
  spec.lift_layers = layers;
  return spec;
}

namespace {

json config_to_json_obj(const ExperimentConfig& c) {
  json j;
  j["data"] = c.data_path;
  j["format"] = c.format;
  j["model"] = c.model;
  j["dim"] = c.dim;
  j["out_dim"] = c.out_dim;
  j["liftnet"] = c.liftnet;
  j["layers"] = c.layers;
  j["norm_order"] = c.norm_order;
  j["tie_policy"] = c.tie_policy;
  json t;
  t["lr"] = c.train.learning_rate;
  t["lr_grid"] = c.train.lr_grid;
  t["epochs"] = c.train.max_epochs;
  t["batch_size"] = c.train.batch_size;
  t["margin"] = c.train.margin;
  t["l2_reg"] = c.train.l2_reg;
  t["loss"] = loss_kind_name(c.train.loss);
  t["negatives"] = c.train.negatives_per_positive;
  t["eval_every"] = c.train.eval_every;
  t["seed"] = c.train.seed;
  t["dense_adam"] = c.train.dense_adam;
  t["eval_threads"] = c.train.eval_threads;
  t["parallel_grid"] = c.train.parallel_grid;
  j["train"] = t;
  return j;
}

ExperimentConfig config_from_json_obj(const json& j) {
  ExperimentConfig c;
  c.data_path = j.value("data", c.data_path);
  c.format = j.value("format", c.format);
  c.model = j.value("model", c.model);
  c.dim = j.value("dim", c.dim);
  c.out_dim = j.value("out_dim", c.out_dim);
  c.liftnet = j.value("liftnet", c.liftnet);
  c.layers = j.value("layers", c.layers);
  c.norm_order = j.value("norm_order", c.norm_order);
  c.tie_policy = j.value("tie_policy", c.tie_policy);
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train.learning_rate = t.value("lr", c.train.learning_rate);
    c.train.lr_grid = t.value("lr_grid", c.train.lr_grid);
    c.train.max_epochs = t.value("epochs", c.train.max_epochs);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.margin = t.value("margin", c.train.margin);
    c.train.l2_reg = t.value("l2_reg", c.train.l2_reg);
    c.train.loss = parse_loss_kind(t.value("loss", loss_kind_name(c.train.loss)));
    c.train.negatives_per_positive = t.value("negatives", c.train.negatives_per_positive);
    c.train.eval_every = t.value("eval_every", c.train.eval_every);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.dense_adam = t.value("dense_adam", c.train.dense_adam);
    c.train.eval_threads = t.value("eval_threads", c.train.eval_threads);
    c.train.parallel_grid = t.value("parallel_grid", c.train.parallel_grid);
  }
  return c;
}

}  // namespace

std::string ExperimentConfig::to_json() const { return config_to_json_obj(*this).dump(2); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json_obj(j);
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig reproduce_preset() {
  ExperimentConfig c;
  c.dim = 16;
  c.out_dim = 512;
  c.liftnet = "tc";
  c.layers = 2;
  c.train.lr_grid = {0.01, 0.05, 0.1, 0.5};
  c.train.max_epochs = 500;
  return c;
}

TrainOutcome run_training(const KnowledgeGraph& kg, const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec spec = cfg.model_spec();
  FilterIndex filter(kg);
  GridSearchResult grid = lr_grid_search(kg, filter, spec, cfg.train);

  std::ostringstream log;
  log << "lr,epoch,loss,val_mrr\n";
  for (const TrainRecord& rec : grid.records) {
    size_t next_val = 0;
    for (size_t e = 0; e < rec.epoch_loss.size(); ++e) {
      const int64_t epoch = static_cast<int64_t>(e) + 1;
      log << rec.learning_rate << "," << epoch << "," << rec.epoch_loss[e] << ",";
      if (next_val < rec.validation.size() && rec.validation[next_val].first == epoch) {
        log << rec.validation[next_val].second;
        ++next_val;
      }
      log << "\n";
    }
  }

  json summary;
  summary["config"] = json::parse(cfg.to_json());
  summary["best_lr"] = grid.best_lr;
  summary["best_validation_mrr"] = grid.best.record.best_validation_mrr;
  summary["best_epoch"] = grid.best.record.best_epoch;
  json per_lr = json::array();
  for (const TrainRecord& rec : grid.records) {
    per_lr.push_back({{"lr", rec.learning_rate},
                      {"best_validation_mrr", rec.best_validation_mrr},
                      {"best_epoch", rec.best_epoch}});
  }
  summary["grid"] = per_lr;

  TrainOutcome out;
  out.best = std::move(grid.best.best);
  out.summary_json = summary.dump(2);
  out.train_log_csv = log.str();
  out.grid = std::move(grid);
  return out;
}

EvalReport run_evaluation(const ModelParams& params, const KnowledgeGraph& kg,
                          const std::string& split, const EvalOptions& options) {
  if (params.entity_count != kg.entity_count || params.relation_count != kg.relation_count) {
    throw std::invalid_argument(
        "checkpoint/dataset mismatch: model has |E|=" + std::to_string(params.entity_count) +
        ", |R|=" + std::to_string(params.relation_count) + " but dataset has |E|=" +
        std::to_string(kg.entity_count) + ", |R|=" + std::to_string(kg.relation_count));
  }
  FilterIndex filter(kg);
  return evaluate(params, kg.split(split), filter, options, split);
}

std::string dataset_stats_json(const KnowledgeGraph& kg) {
  json j;
  j["entities"] = kg.entity_count;
  j["relations"] = kg.relation_count;
  j["train"] = kg.train.size();
  j["valid"] = kg.valid.size();
  j["test"] = kg.test.size();
  return j.dump(2);
}

std::string model_info_json(const ModelParams& params) {
  json j;
  j["model"] = model_kind_name(params.kind);
  j["entities"] = params.entity_count;
  j["relations"] = params.relation_count;
  j["dim"] = params.entity_dim;
  j["out_dim"] = params.score_dim;
  j["liftnet"] = lift_kind_name(params.lift_kind);
  j["norm_order"] = params.norm_order;
  j["seed"] = params.seed;
  if (params.lift_kind == LiftKind::kTC) {
    json layers = json::array();
    for (const TCLayerSpec& l : params.liftnet.layers) {
      layers.push_back({{"in_channels", l.in_channels},
                        {"out_channels", l.out_channels},
                        {"kernel", l.kernel},
                        {"stride", l.stride},
                        {"padding", l.padding}});
    }
    j["tc_layers"] = layers;
    j["liftnet_params"] = param_count_liftnet(params.liftnet);
  } else if (params.lift_kind == LiftKind::kFC) {
    j["fc_dims"] = params.fc.layer_dims;
    j["liftnet_params"] = param_count_fc_variant(params.fc);
  }
  return j.dump(2);
}

}  // namespace liftkg
