// Command-line front end for the liftkg engine. Everything model-related
// goes through the C API in liftkg.h; this file only handles flags, config
// assembly and file output.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "liftkg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StringDeleter {
  void operator()(char* s) const { lkg_string_free(s); }
};
using ApiString = std::unique_ptr<char, StringDeleter>;

struct DatasetDeleter {
  void operator()(lkg_dataset_t* d) const { lkg_dataset_free(d); }
};
using Dataset = std::unique_ptr<lkg_dataset_t, DatasetDeleter>;

struct ModelDeleter {
  void operator()(lkg_model_t* m) const { lkg_model_free(m); }
};
using Model = std::unique_ptr<lkg_model_t, ModelDeleter>;

int fail(lkg_status status) {
  std::cerr << "error: " << lkg_last_error() << "\n";
  return static_cast<int>(status);
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

// Flags shared by train and sweep; only flags the user passed override the
// config file, which overrides the preset.
struct TrainFlags {
  std::string config_file, preset = "defaults";
  std::string data, format, model, liftnet, loss, tie_policy;
  int64_t dim = 0, out_dim = 0, epochs = 0, batch = 0, eval_every = 0;
  int layers = 0, negatives = 0, norm = 0, threads = -1;
  double lr = 0, margin = 0, l2_reg = 0;
  std::vector<double> lr_grid;
  uint64_t seed = 0;
  bool dense_adam = false, no_parallel_grid = false;

  CLI::App* attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config file; flags override its values");
    cmd->add_option("--preset", preset, "base preset: defaults or reproduce");
    cmd->add_option("--data", data, "dataset directory");
    cmd->add_option("--format", format, "dataset format: openke or tsv");
    cmd->add_option("--model", model, "transe, transh, distmult or complex");
    cmd->add_option("--dim", dim, "stored entity dimension");
    cmd->add_option("--out-dim", out_dim, "score-space dimension");
    cmd->add_option("--liftnet", liftnet, "none, tc or fc");
    cmd->add_option("--layers", layers, "lift network layer count");
    cmd->add_option("--lr", lr, "fixed learning rate (clears the grid)");
    cmd->add_option("--lr-grid", lr_grid, "learning-rate grid")->delimiter(',');
    cmd->add_option("--epochs", epochs, "maximum training epochs");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--margin", margin, "margin for the hinge loss");
    cmd->add_option("--l2-reg", l2_reg, "L2 coefficient for the logistic loss");
    cmd->add_option("--loss", loss, "auto, margin or logistic");
    cmd->add_option("--negatives", negatives, "negatives per positive");
    cmd->add_option("--eval-every", eval_every, "validation cadence in epochs");
    cmd->add_option("--norm", norm, "norm order for TransE/TransH (1 or 2)");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--tie-policy", tie_policy, "optimistic or average");
    cmd->add_option("--threads", threads, "evaluation threads (0 = all cores)");
    cmd->add_flag("--dense-adam", dense_adam, "update all Adam moments every step");
    cmd->add_flag("--no-parallel-grid", no_parallel_grid, "train grid entries sequentially");
    return cmd;
  }

  // Returns the merged config JSON, or nullopt after printing an error.
  std::optional<json> resolve(const CLI::App* cmd) const {
    ApiString preset_json;
    {
      char* raw = nullptr;
      if (lkg_default_config(preset.c_str(), &raw) != LKG_OK) return std::nullopt;
      preset_json.reset(raw);
    }
    json cfg = json::parse(preset_json.get());
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) {
        std::cerr << "error: cannot open config file " << config_file << "\n";
        return std::nullopt;
      }
      json file_cfg;
      try {
        in >> file_cfg;
      } catch (const json::exception& e) {
        std::cerr << "error: " << config_file << ": " << e.what() << "\n";
        return std::nullopt;
      }
      cfg.merge_patch(file_cfg);
    }
    auto passed = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (passed("--data")) cfg["data"] = data;
    if (passed("--format")) cfg["format"] = format;
    if (passed("--model")) cfg["model"] = model;
    if (passed("--dim")) cfg["dim"] = dim;
    if (passed("--out-dim")) cfg["out_dim"] = out_dim;
    if (passed("--liftnet")) cfg["liftnet"] = liftnet;
    if (passed("--layers")) cfg["layers"] = layers;
    if (passed("--norm")) cfg["norm_order"] = norm;
    if (passed("--tie-policy")) cfg["tie_policy"] = tie_policy;
    if (passed("--lr")) {
      cfg["train"]["lr"] = lr;
      cfg["train"]["lr_grid"] = json::array();
    }
    if (passed("--lr-grid")) cfg["train"]["lr_grid"] = lr_grid;
    if (passed("--epochs")) cfg["train"]["epochs"] = epochs;
    if (passed("--batch")) cfg["train"]["batch_size"] = batch;
    if (passed("--margin")) cfg["train"]["margin"] = margin;
    if (passed("--l2-reg")) cfg["train"]["l2_reg"] = l2_reg;
    if (passed("--loss")) cfg["train"]["loss"] = loss;
    if (passed("--negatives")) cfg["train"]["negatives"] = negatives;
    if (passed("--eval-every")) cfg["train"]["eval_every"] = eval_every;
    if (passed("--seed")) cfg["train"]["seed"] = seed;
    if (passed("--threads")) cfg["train"]["eval_threads"] = threads;
    if (dense_adam) cfg["train"]["dense_adam"] = true;
    if (no_parallel_grid) cfg["train"]["parallel_grid"] = false;
    return cfg;
  }
};

int run_train_once(const json& cfg, const std::string& out_dir, json* summary_out) {
  Dataset dataset;
  {
    lkg_dataset_t* raw = nullptr;
    const std::string data = cfg.value("data", "");
    const std::string format = cfg.value("format", "openke");
    if (lkg_status s = lkg_dataset_load(data.c_str(), format.c_str(), &raw); s != LKG_OK) {
      return fail(s);
    }
    dataset.reset(raw);
  }
  lkg_model_t* model_raw = nullptr;
  char* summary_raw = nullptr;
  char* log_raw = nullptr;
  if (lkg_status s = lkg_train(dataset.get(), cfg.dump().c_str(), &model_raw, &summary_raw,
                               &log_raw);
      s != LKG_OK) {
    return fail(s);
  }
  Model model(model_raw);
  ApiString summary(summary_raw), log(log_raw);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
    if (lkg_status s = lkg_model_save(model.get(), ckpt.c_str()); s != LKG_OK) return fail(s);
    if (!write_file((fs::path(out_dir) / "summary.json").string(), summary.get())) return 2;
    if (!write_file((fs::path(out_dir) / "train_log.csv").string(), log.get())) return 2;
  }
  if (summary_out != nullptr) *summary_out = json::parse(summary.get());
  return 0;
}

int cmd_train(const TrainFlags& flags, const CLI::App* cmd, const std::string& out_dir) {
  auto cfg = flags.resolve(cmd);
  if (!cfg) return 1;
  json summary;
  const int code = run_train_once(*cfg, out_dir, &summary);
  if (code == 0) std::cout << summary.dump(2) << "\n";
  return code;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& format,
             const std::string& split, const std::string& tie_policy, int threads,
             const std::string& out_file) {
  Model model;
  {
    lkg_model_t* raw = nullptr;
    if (lkg_status s = lkg_model_load(checkpoint.c_str(), &raw); s != LKG_OK) return fail(s);
    model.reset(raw);
  }
  Dataset dataset;
  {
    lkg_dataset_t* raw = nullptr;
    if (lkg_status s = lkg_dataset_load(data.c_str(), format.c_str(), &raw); s != LKG_OK) {
      return fail(s);
    }
    dataset.reset(raw);
  }
  json options{{"tie_policy", tie_policy}, {"threads", threads}};
  char* report_raw = nullptr;
  if (lkg_status s = lkg_evaluate(model.get(), dataset.get(), split.c_str(),
                                  options.dump().c_str(), &report_raw);
      s != LKG_OK) {
    return fail(s);
  }
  ApiString report(report_raw);
  std::cout << report.get() << "\n";
  if (!out_file.empty() && !write_file(out_file, report.get())) return 2;
  return 0;
}

int cmd_count_params(const std::string& data, const std::string& format, int64_t entities,
                     int64_t relations, const std::string& model, int64_t dim, int64_t out_dim,
                     const std::string& liftnet, int layers, bool baseline) {
  if (!data.empty()) {
    Dataset dataset;
    lkg_dataset_t* raw = nullptr;
    if (lkg_status s = lkg_dataset_load(data.c_str(), format.c_str(), &raw); s != LKG_OK) {
      return fail(s);
    }
    dataset.reset(raw);
    char* stats_raw = nullptr;
    if (lkg_status s = lkg_dataset_stats_json(dataset.get(), &stats_raw); s != LKG_OK) {
      return fail(s);
    }
    ApiString stats(stats_raw);
    const json j = json::parse(stats.get());
    entities = j.at("entities").get<int64_t>();
    relations = j.at("relations").get<int64_t>();
  }
  if (entities < 1 || relations < 1) {
    std::cerr << "error: provide --data or both --entities and --relations\n";
    return 1;
  }
  json spec{{"model", model},     {"dim", dim},       {"out_dim", out_dim},
            {"liftnet", liftnet}, {"layers", layers}, {"entities", entities},
            {"relations", relations}};
  if (baseline) {
    spec["baseline"] = json{{"model", model},
                            {"dim", out_dim},
                            {"out_dim", out_dim},
                            {"liftnet", "none"},
                            {"layers", layers}};
  }
  char* report_raw = nullptr;
  if (lkg_status s = lkg_count_params(spec.dump().c_str(), &report_raw); s != LKG_OK) {
    return fail(s);
  }
  ApiString report(report_raw);
  std::cout << report.get() << "\n";
  return 0;
}

int cmd_plan(int64_t dim, int64_t out_dim, int layers) {
  char* raw = nullptr;
  if (lkg_status s = lkg_plan_liftnet(static_cast<int>(dim), static_cast<int>(out_dim), layers,
                                      &raw);
      s != LKG_OK) {
    return fail(s);
  }
  ApiString cfg(raw);
  std::cout << cfg.get() << "\n";
  return 0;
}

int cmd_stats(const std::string& data, const std::string& format) {
  Dataset dataset;
  lkg_dataset_t* raw = nullptr;
  if (lkg_status s = lkg_dataset_load(data.c_str(), format.c_str(), &raw); s != LKG_OK) {
    return fail(s);
  }
  dataset.reset(raw);
  char* stats_raw = nullptr;
  if (lkg_status s = lkg_dataset_stats_json(dataset.get(), &stats_raw); s != LKG_OK) {
    return fail(s);
  }
  ApiString stats(stats_raw);
  std::cout << stats.get() << "\n";
  return 0;
}

int cmd_sweep(const TrainFlags& flags, const CLI::App* cmd, const std::string& axis,
              const std::vector<int64_t>& values, const std::string& out_dir) {
  auto base = flags.resolve(cmd);
  if (!base) return 1;
  if (values.empty()) {
    std::cerr << "error: --values is empty\n";
    return 1;
  }
  fs::create_directories(out_dir);

  json rows = json::array();
  int successes = 0;
  for (int64_t value : values) {
    json cfg = *base;
    if (axis == "input_dim") {
      cfg["dim"] = value;
      if (cfg.value("liftnet", "none") == "none") cfg["liftnet"] = "tc";
    } else if (axis == "output_dim") {
      cfg["out_dim"] = value;
      if (cfg.value("liftnet", "none") == "none") cfg["liftnet"] = "tc";
    } else if (axis == "layers") {
      cfg["layers"] = value;
      if (cfg.value("liftnet", "none") == "none") cfg["liftnet"] = "tc";
    } else if (axis == "fc_variant") {
      cfg["liftnet"] = "fc";
      cfg["layers"] = value;
    } else {
      std::cerr << "error: unknown sweep axis '" << axis
                << "' (expected input_dim, output_dim, layers or fc_variant)\n";
      return 1;
    }

    if (cfg.value("liftnet", "none") == "tc") {
      char* plan_raw = nullptr;
      if (lkg_plan_liftnet(cfg["dim"].get<int>(), cfg["out_dim"].get<int>(),
                           cfg["layers"].get<int>(), &plan_raw) != LKG_OK) {
        std::cerr << "warning: skipping " << axis << "=" << value << ": " << lkg_last_error()
                  << "\n";
        rows.push_back({{"axis_value", value},
                        {"mrr", "skipped"},
                        {"h1", ""},
                        {"h10", ""},
                        {"params_exact", ""}});
        continue;
      }
      lkg_string_free(plan_raw);
    }

    const std::string run_dir =
        (fs::path(out_dir) / (axis + "_" + std::to_string(value))).string();
    json summary;
    if (run_train_once(cfg, run_dir, &summary) != 0) {
      std::cerr << "warning: " << axis << "=" << value << " failed\n";
      rows.push_back({{"axis_value", value},
                      {"mrr", "failed"},
                      {"h1", ""},
                      {"h10", ""},
                      {"params_exact", ""}});
      continue;
    }

    Model model;
    {
      lkg_model_t* raw = nullptr;
      const std::string ckpt = (fs::path(run_dir) / "checkpoint.bin").string();
      if (lkg_status s = lkg_model_load(ckpt.c_str(), &raw); s != LKG_OK) return fail(s);
      model.reset(raw);
    }
    Dataset dataset;
    {
      lkg_dataset_t* raw = nullptr;
      if (lkg_status s = lkg_dataset_load(cfg.value("data", "").c_str(),
                                          cfg.value("format", "openke").c_str(), &raw);
          s != LKG_OK) {
        return fail(s);
      }
      dataset.reset(raw);
    }
    char* report_raw = nullptr;
    if (lkg_status s = lkg_evaluate(model.get(), dataset.get(), "test", nullptr, &report_raw);
        s != LKG_OK) {
      return fail(s);
    }
    ApiString report_str(report_raw);
    const json report = json::parse(report_str.get());

    char* info_raw = nullptr;
    if (lkg_status s = lkg_model_info_json(model.get(), &info_raw); s != LKG_OK) return fail(s);
    ApiString info_str(info_raw);
    const json info = json::parse(info_str.get());
    char* stats_raw = nullptr;
    if (lkg_status s = lkg_dataset_stats_json(dataset.get(), &stats_raw); s != LKG_OK) {
      return fail(s);
    }
    ApiString stats_str(stats_raw);
    const json stats = json::parse(stats_str.get());
    json count_spec{{"model", info.at("model")},
                    {"dim", info.at("dim")},
                    {"out_dim", info.at("out_dim")},
                    {"liftnet", info.at("liftnet")},
                    {"layers", cfg["layers"]},
                    {"entities", stats.at("entities")},
                    {"relations", stats.at("relations")}};
    char* params_raw = nullptr;
    if (lkg_status s = lkg_count_params(count_spec.dump().c_str(), &params_raw); s != LKG_OK) {
      return fail(s);
    }
    ApiString params_str(params_raw);
    const json params = json::parse(params_str.get());

    rows.push_back({{"axis_value", value},
                    {"mrr", report.at("mrr")},
                    {"h1", report.at("hits").value("h1", 0.0)},
                    {"h10", report.at("hits").value("h10", 0.0)},
                    {"params_exact", params.at("exact")}});
    ++successes;
  }

  char* csv_raw = nullptr;
  if (lkg_status s = lkg_emit_table(rows.dump().c_str(), "csv", &csv_raw); s != LKG_OK) {
    return fail(s);
  }
  ApiString csv(csv_raw);
  std::cout << csv.get();
  if (!write_file((fs::path(out_dir) / "sweep.csv").string(), csv.get())) return 2;
  return successes > 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liftkg: knowledge-graph embedding with dimension-lifting networks"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string train_out;
  CLI::App* train = train_flags.attach(app.add_subcommand("train", "train a model"));
  train->add_option("--out", train_out, "output directory for checkpoint, log and summary");

  std::string eval_ckpt, eval_data, eval_format = "openke", eval_split = "test";
  std::string eval_tie = "optimistic", eval_out;
  int eval_threads = 0;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--format", eval_format, "dataset format");
  eval->add_option("--split", eval_split, "train, valid or test");
  eval->add_option("--tie-policy", eval_tie, "optimistic or average");
  eval->add_option("--threads", eval_threads, "evaluation threads (0 = all cores)");
  eval->add_option("--out", eval_out, "write the report JSON here too");

  std::string cp_data, cp_format = "openke", cp_model = "transe", cp_liftnet = "none";
  int64_t cp_entities = 0, cp_relations = 0, cp_dim = 512, cp_out_dim = 0;
  int cp_layers = 2;
  bool cp_baseline = false;
  CLI::App* count = app.add_subcommand("count-params", "exact parameter accounting");
  count->add_option("--data", cp_data, "dataset directory (for |E| and |R|)");
  count->add_option("--format", cp_format, "dataset format");
  count->add_option("--entities", cp_entities, "entity count");
  count->add_option("--relations", cp_relations, "relation count");
  count->add_option("--model", cp_model, "transe, transh, distmult or complex");
  count->add_option("--dim", cp_dim, "stored entity dimension");
  count->add_option("--out-dim", cp_out_dim, "score dimension (defaults to --dim)");
  count->add_option("--liftnet", cp_liftnet, "none, tc or fc");
  count->add_option("--layers", cp_layers, "lift network layers");
  count->add_flag("--baseline", cp_baseline,
                  "also report the percentage against the plain out-dim model");

  int64_t plan_dim = 16, plan_out = 512;
  int plan_layers = 2;
  CLI::App* plan = app.add_subcommand("plan", "search a TC layer configuration");
  plan->add_option("--dim", plan_dim, "input dimension");
  plan->add_option("--out-dim", plan_out, "output dimension");
  plan->add_option("--layers", plan_layers, "layer count");

  std::string stats_data, stats_format = "openke";
  CLI::App* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("--data", stats_data, "dataset directory")->required();
  stats->add_option("--format", stats_format, "dataset format");

  TrainFlags sweep_flags;
  std::string sweep_axis, sweep_out = "sweep";
  std::vector<int64_t> sweep_values;
  CLI::App* sweep = sweep_flags.attach(
      app.add_subcommand("sweep", "train/evaluate across one axis, emit a CSV"));
  sweep->add_option("--axis", sweep_axis, "input_dim, output_dim, layers or fc_variant")
      ->required();
  sweep->add_option("--values", sweep_values, "axis values")->required()->delimiter(',');
  sweep->add_option("--out", sweep_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (train->parsed()) return cmd_train(train_flags, train, train_out);
  if (eval->parsed()) {
    return cmd_eval(eval_ckpt, eval_data, eval_format, eval_split, eval_tie, eval_threads,
                    eval_out);
  }
  if (count->parsed()) {
    return cmd_count_params(cp_data, cp_format, cp_entities, cp_relations, cp_model, cp_dim,
                            cp_out_dim > 0 ? cp_out_dim : cp_dim, cp_liftnet, cp_layers,
                            cp_baseline);
  }
  if (plan->parsed()) return cmd_plan(plan_dim, plan_out, plan_layers);
  if (stats->parsed()) return cmd_stats(stats_data, stats_format);
  if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep, sweep_axis, sweep_values, sweep_out);
  return 1;
}
