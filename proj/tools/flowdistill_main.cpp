#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "flowdistill/config.hpp"
#include "flowdistill/data.hpp"
#include "flowdistill/eval.hpp"
#include "flowdistill/kernels.hpp"
#include "flowdistill/teacher.hpp"
#include "flowdistill/train.hpp"

namespace fs = std::filesystem;
using namespace fd;
using cli::RunConfig;

namespace {

struct StageError {
  std::string stage;
  std::string message;
};

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (dir.back() == '/' ? dir + name : dir + "/" + name);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  const std::string out = cfg.get_str("out");
  fs::create_directories(out);
  write_text(join(out, "effective_config.txt"), cfg.echo(command));
}

model::ModelConfig model_config_from(const RunConfig& cfg, const data::Dataset& ds) {
  model::ModelConfig m;
  m.embed_dim = cfg.get_int("d");
  m.layers = cfg.get_int("layers");
  m.bottleneck = cfg.get_int("bottleneck");
  m.h_in = cfg.get_int("h-in");
  m.h_out = cfg.get_int("h-out");
  m.regions = ds.series.regions();
  m.tod_slots = ds.cal.t1;
  m.dow_slots = ds.cal.t2;
  m.channels = ds.series.channel_count();

  const std::string& act = cfg.get_str("activation");
  if (act == "relu") {
    m.activation = model::Activation::kRelu;
  } else if (act == "softplus") {
    m.activation = model::Activation::kSoftplus;
  } else {
    throw ConfigError("option 'activation': unknown value '" + act + "'");
  }
  const std::string& noise = cfg.get_str("latent-noise");
  if (noise == "std") {
    m.noise_mode = model::NoiseMode::kStd;
  } else if (noise == "paper-variance") {
    m.noise_mode = model::NoiseMode::kPaperVariance;
  } else {
    throw ConfigError("option 'latent-noise': unknown value '" + noise + "'");
  }
  const std::string& ev = cfg.get_str("eval-mode");
  if (ev == "mean") {
    m.eval_mode = model::EvalMode::kMean;
  } else if (ev == "sample") {
    m.eval_mode = model::EvalMode::kSample;
  } else {
    throw ConfigError("option 'eval-mode': unknown value '" + ev + "'");
  }
  return m;
}

losses::LossWeights loss_weights_from(const RunConfig& cfg) {
  losses::LossWeights w;
  w.lambda_tbl = cfg.get_double("lambda-tbl");
  w.delta = cfg.get_double("delta");
  w.lambda_kl = cfg.get_double("lambda-kl");
  w.lambda_spa = cfg.get_double("lambda-spa");
  w.lambda_tem = cfg.get_double("lambda-tem");
  w.temporal_window = cfg.get_int("temporal-window");
  w.k_r = cfg.get_int("k-r");

  const std::string& gran = cfg.get_str("tbl-granularity");
  if (gran == "element") {
    w.granularity = losses::TblGranularity::kElement;
  } else if (gran == "sample") {
    w.granularity = losses::TblGranularity::kSample;
  } else if (gran == "batch") {
    w.granularity = losses::TblGranularity::kBatch;
  } else {
    throw ConfigError("option 'tbl-granularity': unknown value '" + gran + "'");
  }
  const std::string& variant = cfg.get_str("tbl-variant");
  if (variant == "paper-literal") {
    w.variant = losses::TblVariant::kPaperLiteral;
  } else if (variant == "to-teacher") {
    w.variant = losses::TblVariant::kToTeacher;
  } else {
    throw ConfigError("option 'tbl-variant': unknown value '" + variant + "'");
  }
  w.validate();
  return w;
}

train::TrainConfig train_config_from(const RunConfig& cfg, const data::Dataset& ds) {
  train::TrainConfig t;
  t.lr0 = cfg.get_double("lr0");
  t.decay = cfg.get_double("decay");
  t.decay_every = cfg.get_int("decay-every");
  t.batch_size = cfg.get_int("batch-size");
  t.max_epochs = cfg.get_int("max-epochs");
  t.patience = cfg.get_int("patience");
  t.seed = cfg.get_uint("seed");
  t.clip_norm = cfg.get_double("clip-norm");
  t.weights = loss_weights_from(cfg);
  t.model = model_config_from(cfg, ds);
  return t;
}

data::Dataset load_dataset_for(const RunConfig& cfg) {
  const std::string& dir = cfg.get_str("data");
  if (dir.empty()) throw ConfigError("missing required --data");
  data::Dataset ds = data::load_dataset(dir, cfg.get_int("k-r"));
  if (cfg.get_str("neighbor-mode") == "literal") {
    ds.graph.neighbor_lists =
        data::neighbor_lists_literal(ds.series.regions(), cfg.get_int("k-r"));
  } else if (cfg.get_str("neighbor-mode") != "nearest") {
    throw ConfigError("option 'neighbor-mode': unknown value '" + cfg.get_str("neighbor-mode") +
                      "'");
  }
  return ds;
}

data::SynthConfig synth_config_from(const RunConfig& cfg) {
  data::SynthConfig s;
  s.regions = cfg.get_int("synth-n");
  s.timesteps = cfg.get_int("synth-t");
  s.channels = cfg.get_int("synth-c");
  s.interval_minutes = static_cast<int>(cfg.get_int("synth-interval"));
  s.seed = cfg.get_uint("seed");
  s.diurnal_amp = cfg.get_double("synth-amp");
  s.weekend_factor = cfg.get_double("synth-weekend");
  s.mixing_rho = cfg.get_double("synth-rho");
  s.noise_std = cfg.get_double("synth-noise");
  s.base_min = cfg.get_double("synth-base-min");
  s.base_max = cfg.get_double("synth-base-max");
  s.phase_jitter = cfg.get_double("synth-phase-jitter");
  s.start_time = timeutil::parse_rfc3339(cfg.get_str("synth-start"));
  return s;
}

struct SplitContext {
  std::vector<int64_t> windows;
  data::Splits splits;
  data::NormStats norm;
};

SplitContext make_splits(const RunConfig& cfg, const data::Dataset& ds,
                         const model::ModelConfig& m) {
  SplitContext ctx;
  ctx.windows = data::make_windows(ds.series.steps(), m.h_in, m.h_out, cfg.get_int("stride"));
  ctx.splits = data::chronological_split(
      ctx.windows, m.h_in, m.h_out,
      {cfg.get_double("train-ratio"), cfg.get_double("val-ratio"), cfg.get_double("test-ratio")});
  ctx.norm = data::fit_normalizer(ds.series, ctx.splits.train, m.h_in);
  return ctx;
}

double mean_std(const data::NormStats& norm) {
  double acc = 0;
  for (double s : norm.stddev) acc += s;
  return acc / static_cast<double>(norm.stddev.size());
}

// Resolve the teacher for training: an FDTP file, or the synthetic oracle
// when any oracle flag is set. Absent both while lambda_tbl > 0 is a usage
// error.
struct TeacherChoice {
  teacher::TeacherPredictions preds;
  bool present = false;
};

TeacherChoice resolve_teacher(const RunConfig& cfg, const data::Dataset& ds,
                              const SplitContext& ctx, const train::TrainConfig& tcfg,
                              const data::SplitRatios& ratios) {
  TeacherChoice choice;
  const bool needs_teacher = tcfg.weights.use_tbl && tcfg.weights.lambda_tbl > 0;
  if (!needs_teacher) return choice;

  const uint64_t fp = teacher::dataset_fingerprint(ds.meta_bytes, ratios, ctx.splits.train);
  const bool oracle_requested = cfg.is_set("oracle-sigma") || cfg.is_set("oracle-bias") ||
                                cfg.is_set("oracle-seed") || cfg.is_set("oracle-sigma-relative");

  if (!cfg.get_str("teacher").empty()) {
    if (oracle_requested) {
      throw ConfigError("pass either --teacher or the --oracle-* flags, not both");
    }
    teacher::ExpectedDims dims{static_cast<int64_t>(ctx.splits.train.size()),
                               tcfg.model.regions, tcfg.model.h_out, tcfg.model.channels};
    choice.preds = teacher::load_predictions(cfg.get_str("teacher"), dims, fp);
    choice.present = true;
    return choice;
  }
  if (!oracle_requested) {
    throw ConfigError("teacher required when lambda-tbl > 0: pass --teacher FILE or the "
                      "--oracle-* flags (or set --lambda-tbl 0)");
  }
  data::WindowBatch all = data::assemble_batch(ds.series, ds.cal, ctx.norm, ctx.splits.train,
                                               tcfg.model.h_in, tcfg.model.h_out,
                                               data::SplitTag::kTrain);
  teacher::OracleConfig ocfg;
  ocfg.noise_std = cfg.get_double("oracle-sigma");
  if (cfg.get_bool("oracle-sigma-relative")) ocfg.noise_std *= mean_std(ctx.norm);
  ocfg.bias = cfg.get_double("oracle-bias");
  ocfg.seed = cfg.is_set("oracle-seed") ? cfg.get_uint("oracle-seed") : cfg.get_uint("seed") + 1;
  choice.preds = teacher::oracle_teacher(all.targets, ocfg, fp);
  choice.present = true;
  return choice;
}

std::vector<uint64_t> seed_list(const RunConfig& cfg) {
  const int64_t count = cfg.get_int("seeds");
  if (count < 1) throw ConfigError("option 'seeds' must be >= 1");
  std::vector<uint64_t> seeds;
  const uint64_t base = cfg.get_uint("seed");
  for (int64_t i = 0; i < count; ++i) seeds.push_back(base + static_cast<uint64_t>(i));
  return seeds;
}

// ---- commands ----

int cmd_generate(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::SynthConfig synth = synth_config_from(cfg);
  data::SynthResult result = data::generate_synthetic(synth);

  data::DatasetMeta meta;
  meta.regions = synth.regions;
  meta.interval_minutes = synth.interval_minutes;
  meta.start_time = synth.start_time;
  meta.channels = result.series.channels;
  meta.timesteps = synth.timesteps;
  meta.grid_rows = result.graph.grid_rows;
  meta.grid_cols = result.graph.grid_cols;
  if (!cfg.get_str("city").empty()) meta.city = cfg.get_str("city");

  data::write_csv(result.series, join(out, "flows.csv"));
  data::save_meta(meta, join(out, "meta.txt"));

  nlohmann::json truth;
  truth["base_rates"] = result.truth.base_rates;
  truth["phases"] = result.truth.phases;
  truth["grid_rows"] = result.truth.grid_rows;
  truth["grid_cols"] = result.truth.grid_cols;
  write_text(join(out, "truth.json"), truth.dump(2) + "\n");

  std::cout << "wrote " << join(out, "flows.csv") << " (" << synth.regions << " regions x "
            << synth.timesteps << " steps)\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  train::TrainConfig tcfg = train_config_from(cfg, ds);
  SplitContext ctx = make_splits(cfg, ds, tcfg.model);
  const data::SplitRatios ratios{cfg.get_double("train-ratio"), cfg.get_double("val-ratio"),
                                 cfg.get_double("test-ratio")};
  TeacherChoice teacher_choice = resolve_teacher(cfg, ds, ctx, tcfg, ratios);

  train::Trainer trainer(ds, ctx.splits, ctx.norm,
                         teacher_choice.present ? &teacher_choice.preds : nullptr, tcfg);
  train::TrainResult result;
  if (!cfg.get_str("resume").empty()) {
    train::Checkpoint ck = train::load_checkpoint(cfg.get_str("resume"), tcfg.model);
    result = trainer.resume(ck);
  } else {
    result = trainer.run();
  }

  std::string log_text = train::log_header() + "\n";
  for (const auto& e : result.log) log_text += train::log_line(e) + "\n";
  write_text(join(out, "train_log.csv"), log_text);
  train::save_checkpoint(result.last, join(out, "last.ckpt"));
  train::save_checkpoint(result.best, join(out, "best.ckpt"));

  nlohmann::json summary;
  summary["epochs_run"] = result.log.size();
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_mae"] = result.best.best_val_mae;
  summary["aborted_non_finite"] = result.aborted_non_finite;
  summary["train_windows"] = ctx.splits.train.size();
  summary["val_windows"] = ctx.splits.val.size();
  summary["test_windows"] = ctx.splits.test.size();
  write_text(join(out, "summary.json"), summary.dump(2) + "\n");

  if (result.aborted_non_finite) {
    std::cerr << "training diverged (non-finite loss); last good checkpoint saved to "
              << join(out, "last.ckpt") << "\n";
    return 1;
  }
  std::cout << "trained " << result.log.size() << " epoch(s), best val MAE "
            << result.best.best_val_mae << "; checkpoints under " << out << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  if (cfg.get_str("ckpt").empty()) throw ConfigError("missing required --ckpt");
  train::Checkpoint ck = train::load_checkpoint(cfg.get_str("ckpt"));
  if (ck.model_cfg.regions != ds.series.regions() ||
      ck.model_cfg.channels != ds.series.channel_count() ||
      ck.model_cfg.tod_slots != ds.cal.t1) {
    throw IoError("checkpoint was trained for a different dataset layout");
  }

  SplitContext ctx = make_splits(cfg, ds, ck.model_cfg);
  train::PredictionSet test =
      train::predict_windows(ck.params, ds.series, ds.cal, ctx.norm, ctx.splits.test,
                             data::SplitTag::kTest, cfg.get_int("batch-size"));
  eval::MetricReport report = eval::full_report(test.pred, test.target);
  eval::write_metric_report_csv(report, join(out, "report.csv"));
  eval::write_report_json("evaluate", cfg.echo("evaluate"),
                          eval::metric_report_rows_json(report), join(out, "report.json"));

  char line[160];
  std::snprintf(line, sizeof(line), "test MAE %.4f RMSE %.4f over %lld windows\n",
                report.overall.mae, report.overall.rmse,
                static_cast<long long>(ctx.splits.test.size()));
  std::cout << line;
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  if (cfg.get_str("ckpt").empty()) throw ConfigError("missing required --ckpt");
  train::Checkpoint ck = train::load_checkpoint(cfg.get_str("ckpt"));
  if (ck.model_cfg.regions != ds.series.regions()) {
    throw IoError("checkpoint was trained for a different dataset layout");
  }

  SplitContext ctx = make_splits(cfg, ds, ck.model_cfg);
  const std::string& which = cfg.get_str("split");
  const std::vector<int64_t>* windows = nullptr;
  data::SplitTag tag = data::SplitTag::kTest;
  if (which == "train") {
    windows = &ctx.splits.train;
    tag = data::SplitTag::kTrain;
  } else if (which == "val") {
    windows = &ctx.splits.val;
    tag = data::SplitTag::kVal;
  } else if (which == "test") {
    windows = &ctx.splits.test;
  } else if (which == "all") {
    windows = &ctx.windows;
  } else {
    throw ConfigError("option 'split': unknown value '" + which + "'");
  }

  train::PredictionSet preds = train::predict_windows(ck.params, ds.series, ds.cal, ctx.norm,
                                                      *windows, tag, cfg.get_int("batch-size"));

  // student predictions in the teacher container, so they can seed another
  // distillation run
  teacher::TeacherPredictions as_teacher;
  as_teacher.values = preds.pred;
  const data::SplitRatios ratios{cfg.get_double("train-ratio"), cfg.get_double("val-ratio"),
                                 cfg.get_double("test-ratio")};
  as_teacher.fingerprint = teacher::dataset_fingerprint(ds.meta_bytes, ratios, *windows);
  teacher::save_predictions(as_teacher, join(out, "predictions.fdtp"));

  eval::Metrics m = eval::compute_metrics(preds.pred, preds.target);
  nlohmann::json mj;
  mj["split"] = which;
  mj["windows"] = windows->size();
  mj["mae"] = m.mae;
  mj["rmse"] = m.rmse;
  write_text(join(out, "metrics.json"), mj.dump(2) + "\n");
  std::cout << "wrote " << join(out, "predictions.fdtp") << " (" << windows->size()
            << " windows, split " << which << ")\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  train::TrainConfig tcfg = train_config_from(cfg, ds);

  eval::SweepOptions opts;
  opts.ratios = cfg.get_double_list("ratios");
  opts.seeds = seed_list(cfg);
  opts.val_ratio = cfg.get_double("val-ratio");
  opts.test_ratio = cfg.get_double("test-ratio");
  const bool needs_teacher = tcfg.weights.use_tbl && tcfg.weights.lambda_tbl > 0;
  const bool oracle_requested = cfg.is_set("oracle-sigma") || cfg.is_set("oracle-bias") ||
                                cfg.is_set("oracle-sigma-relative");
  if (needs_teacher && !oracle_requested) {
    throw ConfigError("teacher required: sweep retrains per (ratio, seed), so it needs the "
                      "--oracle-* flags (or --lambda-tbl 0)");
  }
  opts.oracle_sigma = cfg.get_double("oracle-sigma");
  opts.oracle_bias = cfg.get_double("oracle-bias");
  opts.sigma_relative_to_std = cfg.get_bool("oracle-sigma-relative");

  eval::SweepResult sweep = eval::training_ratio_sweep(ds, tcfg, opts);
  eval::write_sweep_csv(sweep, join(out, "sweep.csv"));
  eval::write_sweep_table(sweep, join(out, "table.txt"));
  eval::write_report_json("sweep", cfg.echo("sweep"), eval::sweep_rows_json(sweep),
                          join(out, "report.json"));
  std::cout << "swept " << opts.ratios.size() << " ratio(s) x " << opts.seeds.size()
            << " seed(s); report under " << out << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  train::TrainConfig tcfg = train_config_from(cfg, ds);

  eval::AblationOptions opts;
  opts.seeds = seed_list(cfg);
  opts.train_ratio = cfg.get_double("train-ratio");
  opts.val_ratio = cfg.get_double("val-ratio");
  opts.test_ratio = cfg.get_double("test-ratio");
  const bool needs_teacher = tcfg.weights.use_tbl && tcfg.weights.lambda_tbl > 0;
  const bool oracle_requested = cfg.is_set("oracle-sigma") || cfg.is_set("oracle-bias") ||
                                cfg.is_set("oracle-sigma-relative");
  if (needs_teacher && !oracle_requested) {
    throw ConfigError("teacher required: ablate retrains per variant, so it needs the "
                      "--oracle-* flags (or --lambda-tbl 0)");
  }
  opts.oracle_sigma = cfg.get_double("oracle-sigma");
  opts.oracle_bias = cfg.get_double("oracle-bias");
  opts.sigma_relative_to_std = cfg.get_bool("oracle-sigma-relative");

  auto rows = eval::ablation_suite(ds, tcfg, opts);
  eval::write_ablation_csv(rows, join(out, "ablation.csv"));
  eval::write_report_json("ablate", cfg.echo("ablate"), eval::ablation_rows_json(rows),
                          join(out, "report.json"));

  // Table 5 shaped summary: mean over seeds per variant
  std::ostringstream table;
  table << "Ablation (mean over " << opts.seeds.size() << " seed(s))\n\n";
  table << "Model    MAE      RMSE\n";
  for (const char* name : {"full", "w/o-TB", "w/o-IB", "w/o-SC", "w/o-TC"}) {
    double mae = 0, rmse = 0;
    int64_t n = 0;
    for (const auto& r : rows) {
      if (r.name == name) {
        mae += r.mae;
        rmse += r.rmse;
        ++n;
      }
    }
    char line[96];
    std::snprintf(line, sizeof(line), "%-8s %-8.3f %-8.3f\n", name, mae / n, rmse / n);
    table << line;
  }
  write_text(join(out, "table.txt"), table.str());
  std::cout << "ablation rows written under " << out << "\n";
  return 0;
}

int cmd_export_prompts(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  data::Dataset ds = load_dataset_for(cfg);
  auto windows = data::make_windows(ds.series.steps(), cfg.get_int("h-in"), cfg.get_int("h-out"),
                                    cfg.get_int("stride"));
  teacher::RegionInfo info;
  if (!cfg.get_str("region-info").empty()) {
    info = teacher::load_region_info(cfg.get_str("region-info"));
  }
  teacher::PromptOptions opts;
  opts.h_in = cfg.get_int("h-in");
  opts.h_out = cfg.get_int("h-out");
  opts.region = cfg.get_int("region");
  opts.city = !cfg.get_str("city").empty() ? cfg.get_str("city") : ds.meta.city;
  const int64_t count =
      teacher::export_instruction_prompts(ds.series, windows, info, opts, join(out, "prompts"));
  std::cout << "wrote " << count << " prompt file(s) under " << join(out, "prompts") << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  eval::BenchOptions opts;
  opts.base_regions = cfg.get_int("bench-n");
  opts.timesteps = cfg.get_int("bench-t");
  opts.repetitions = cfg.get_int("bench-reps");
  opts.model_template.batch_size = cfg.get_int("batch-size");
  opts.model_template.model.embed_dim = cfg.get_int("d");
  opts.model_template.model.layers = cfg.get_int("layers");
  opts.model_template.model.bottleneck = cfg.get_int("bottleneck");
  opts.model_template.model.h_in = cfg.get_int("h-in");
  opts.model_template.model.h_out = cfg.get_int("h-out");

  eval::BenchResult bench = eval::scaling_benchmark(opts);
  eval::write_bench_csv(bench, join(out, "bench.csv"));
  eval::write_report_json("bench", cfg.echo("bench"), eval::bench_rows_json(bench),
                          join(out, "report.json"));
  if (bench.unstable) {
    std::cout << "warning: repetitions=1 gives unstable measurements\n";
  }
  char line[160];
  std::snprintf(line, sizeof(line),
                "latency exponent vs regions %.3f; x2 test-size ratio %.3f; report under %s\n",
                bench.fitted_exponent, bench.size_ratio_x2, out.c_str());
  std::cout << line;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "help" || args[0] == "-h") {
    std::cout << cli::usage_text();
    return args.empty() ? 2 : 0;
  }
  const std::string command = args[0];
  args.erase(args.begin());

  static const std::map<std::string, int (*)(const RunConfig&)> commands = {
      {"generate", cmd_generate},   {"train", cmd_train},
      {"evaluate", cmd_evaluate},   {"predict", cmd_predict},
      {"sweep", cmd_sweep},         {"ablate", cmd_ablate},
      {"export-prompts", cmd_export_prompts}, {"bench", cmd_bench},
  };
  auto it = commands.find(command);
  if (it == commands.end()) {
    std::cerr << "unknown command '" << command << "'\n\n" << cli::usage_text();
    return 2;
  }

  try {
    RunConfig cfg = RunConfig::parse(args);
    kernels::set_parallel(cfg.get_bool("parallel"));
    echo_config(cfg, command);
    return it->second(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error in " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error in " << command << " (io): " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error in " << command << " (numeric): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error in " << command << ": " << e.what() << "\n";
    return 1;
  }
}
