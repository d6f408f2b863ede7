#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liftkg/evaluation.hpp"
#include "liftkg/kg_data.hpp"
#include "liftkg/models.hpp"
#include "liftkg/reporting.hpp"
#include "liftkg/training.hpp"

namespace liftkg {

/// Everything one reproducible run needs; round-trips through JSON exactly.
struct ExperimentConfig {
  std::string data_path;
  std::string format = "openke";
  std::string model = "transe";
  int64_t dim = 512;       // stored entity dim (n-hat when lifting)
  int64_t out_dim = 512;   // score dim n
  std::string liftnet = "none";  // none | tc | fc
  int layers = 2;
  int norm_order = 2;
  std::string tie_policy = "optimistic";
  TrainConfig train;

  void validate() const;
  ModelSpec model_spec() const;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

/// The settings behind the headline experiments: 16 -> 512 with two TC
/// layers, learning-rate grid {0.01, 0.05, 0.1, 0.5}, 500 epochs.
ExperimentConfig reproduce_preset();
ExperimentConfig default_config();

struct TrainOutcome {
  ModelParams best;
  GridSearchResult grid;
  std::string summary_json;    // embeds the fully-resolved config
  std::string train_log_csv;   // lr,epoch,loss,val_mrr
};

/// Loads nothing: the dataset is passed in so callers can reuse it.
TrainOutcome run_training(const KnowledgeGraph& kg, const ExperimentConfig& cfg);

EvalReport run_evaluation(const ModelParams& params, const KnowledgeGraph& kg,
                          const std::string& split, const EvalOptions& options);

std::string dataset_stats_json(const KnowledgeGraph& kg);
std::string model_info_json(const ModelParams& params);

}  // namespace liftkg
