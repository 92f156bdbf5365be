#include "flowdistill/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>
#include <omp.h>

#include "flowdistill/errors.hpp"

namespace fd::eval {

using json = nlohmann::json;

Metrics compute_metrics(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("compute_metrics: shapes " + shape_str(pred.shape) + " vs " +
                     shape_str(target.shape));
  }
  Metrics m;
  m.count = pred.numel();
  if (m.count == 0) return m;
  long double abs_acc = 0.0L, sq_acc = 0.0L;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    abs_acc += std::abs(d);
    sq_acc += d * d;
  }
  m.mae = static_cast<double>(abs_acc / static_cast<long double>(m.count));
  m.rmse = std::sqrt(static_cast<double>(sq_acc / static_cast<long double>(m.count)));
  return m;
}

std::vector<Metrics> horizon_breakdown(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target) || pred.rank() != 4) {
    throw ShapeError("horizon_breakdown: need matching [W,N,H_out,C] tensors");
  }
  const int64_t w = pred.dim(0), n = pred.dim(1), h = pred.dim(2), c = pred.dim(3);
  std::vector<long double> abs_acc(static_cast<size_t>(h), 0.0L);
  std::vector<long double> sq_acc(static_cast<size_t>(h), 0.0L);
  for (int64_t wi = 0; wi < w; ++wi) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t t = 0; t < h; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          const double d = static_cast<double>(pred.at(wi, r, t, ch)) -
                           static_cast<double>(target.at(wi, r, t, ch));
          abs_acc[static_cast<size_t>(t)] += std::abs(d);
          sq_acc[static_cast<size_t>(t)] += d * d;
        }
      }
    }
  }
  std::vector<Metrics> out(static_cast<size_t>(h));
  const int64_t per = w * n * c;
  for (int64_t t = 0; t < h; ++t) {
    out[static_cast<size_t>(t)].count = per;
    if (per > 0) {
      out[static_cast<size_t>(t)].mae =
          static_cast<double>(abs_acc[static_cast<size_t>(t)] / static_cast<long double>(per));
      out[static_cast<size_t>(t)].rmse = std::sqrt(
          static_cast<double>(sq_acc[static_cast<size_t>(t)] / static_cast<long double>(per)));
    }
  }
  return out;
}

namespace {

std::vector<double> region_mean_flow(const Tensor& target) {
  const int64_t w = target.dim(0), n = target.dim(1), h = target.dim(2), c = target.dim(3);
  std::vector<double> mean(static_cast<size_t>(n), 0.0);
  for (int64_t r = 0; r < n; ++r) {
    long double acc = 0.0L;
    for (int64_t wi = 0; wi < w; ++wi) {
      for (int64_t t = 0; t < h; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) acc += target.at(wi, r, t, ch);
      }
    }
    mean[static_cast<size_t>(r)] = static_cast<double>(acc / static_cast<long double>(w * h * c));
  }
  return mean;
}

}  // namespace

std::vector<double> quartile_edges(const Tensor& target) {
  std::vector<double> means = region_mean_flow(target);
  std::sort(means.begin(), means.end());
  const int64_t n = static_cast<int64_t>(means.size());
  std::vector<double> edges;
  for (double q : {0.25, 0.5, 0.75}) {
    const int64_t at = std::min<int64_t>(n - 1, static_cast<int64_t>(q * static_cast<double>(n)));
    edges.push_back(means[static_cast<size_t>(at)]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<BucketMetrics> volume_bucket_breakdown(const Tensor& pred, const Tensor& target,
                                                   const std::vector<double>& edges) {
  if (!pred.same_shape(target) || pred.rank() != 4) {
    throw ShapeError("volume_bucket_breakdown: need matching [W,N,H_out,C] tensors");
  }
  for (size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ContractError("volume_bucket_breakdown: edges must be strictly increasing");
    }
  }
  const int64_t w = pred.dim(0), n = pred.dim(1), h = pred.dim(2), c = pred.dim(3);
  const std::vector<double> means = region_mean_flow(target);
  const size_t buckets = edges.size() + 1;

  std::vector<long double> abs_acc(buckets, 0.0L), sq_acc(buckets, 0.0L);
  std::vector<int64_t> counts(buckets, 0);
  for (int64_t r = 0; r < n; ++r) {
    size_t b = 0;
    while (b < edges.size() && means[static_cast<size_t>(r)] >= edges[b]) ++b;
    for (int64_t wi = 0; wi < w; ++wi) {
      for (int64_t t = 0; t < h; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          const double d = static_cast<double>(pred.at(wi, r, t, ch)) -
                           static_cast<double>(target.at(wi, r, t, ch));
          abs_acc[b] += std::abs(d);
          sq_acc[b] += d * d;
          ++counts[b];
        }
      }
    }
  }

  std::vector<BucketMetrics> out(buckets);
  for (size_t b = 0; b < buckets; ++b) {
    out[b].lo = b == 0 ? -std::numeric_limits<double>::infinity() : edges[b - 1];
    out[b].hi = b == edges.size() ? std::numeric_limits<double>::infinity() : edges[b];
    out[b].metrics.count = counts[b];
    if (counts[b] > 0) {
      out[b].metrics.mae = static_cast<double>(abs_acc[b] / static_cast<long double>(counts[b]));
      out[b].metrics.rmse =
          std::sqrt(static_cast<double>(sq_acc[b] / static_cast<long double>(counts[b])));
    }
  }
  return out;
}

MetricReport full_report(const Tensor& pred, const Tensor& target,
                         const std::vector<double>* edges) {
  MetricReport report;
  report.overall = compute_metrics(pred, target);
  report.per_horizon = horizon_breakdown(pred, target);
  report.bucket_edges = edges ? *edges : quartile_edges(target);
  report.per_bucket = volume_bucket_breakdown(pred, target, report.bucket_edges);
  return report;
}

double spatial_roughness(const Tensor& pred,
                         const std::vector<std::vector<int64_t>>& neighbor_lists) {
  if (pred.rank() != 4) throw ShapeError("spatial_roughness: need [W,N,H,C]");
  const int64_t w = pred.dim(0), n = pred.dim(1), h = pred.dim(2), c = pred.dim(3);
  if (static_cast<int64_t>(neighbor_lists.size()) != n) {
    throw ShapeError("spatial_roughness: neighbor list count mismatch");
  }
  long double acc = 0.0L;
  for (int64_t wi = 0; wi < w; ++wi) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t nb : neighbor_lists[static_cast<size_t>(r)]) {
        for (int64_t t = 0; t < h; ++t) {
          for (int64_t ch = 0; ch < c; ++ch) {
            acc += std::abs(static_cast<double>(pred.at(wi, r, t, ch)) -
                            static_cast<double>(pred.at(wi, nb, t, ch)));
          }
        }
      }
    }
  }
  return static_cast<double>(acc / static_cast<long double>(w * n * h * c));
}

double temporal_roughness(const Tensor& pred) {
  if (pred.rank() != 4) throw ShapeError("temporal_roughness: need [W,N,H,C]");
  const int64_t w = pred.dim(0), n = pred.dim(1), h = pred.dim(2), c = pred.dim(3);
  if (h < 2) return 0.0;
  long double acc = 0.0L;
  for (int64_t wi = 0; wi < w; ++wi) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t t = 0; t + 1 < h; ++t) {
        for (int64_t ch = 0; ch < c; ++ch) {
          acc += std::abs(static_cast<double>(pred.at(wi, r, t + 1, ch)) -
                          static_cast<double>(pred.at(wi, r, t, ch)));
        }
      }
    }
  }
  return static_cast<double>(acc / static_cast<long double>(w * n * (h - 1) * c));
}

// ---- harnesses ----

namespace {

double mean_of(const std::vector<double>& xs) {
  double acc = 0;
  for (double x : xs) acc += x;
  return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double mean_train_std(const data::NormStats& norm) {
  double acc = 0;
  for (double s : norm.stddev) acc += s;
  return acc / static_cast<double>(norm.stddev.size());
}

struct CellResult {
  double mae = 0;
  double rmse = 0;
  double spatial_tv = 0;
  double temporal_tv = 0;
};

CellResult run_cell(const data::Dataset& dataset, const train::TrainConfig& cfg,
                    const data::SplitRatios& ratios, double oracle_sigma, double oracle_bias,
                    bool sigma_relative, uint64_t oracle_seed) {
  auto windows = data::make_windows(dataset.series.steps(), cfg.model.h_in, cfg.model.h_out);
  data::Splits splits = data::chronological_split(windows, cfg.model.h_in, cfg.model.h_out, ratios);
  data::NormStats norm = data::fit_normalizer(dataset.series, splits.train, cfg.model.h_in);

  teacher::TeacherPredictions oracle;
  const teacher::TeacherPredictions* teacher_ptr = nullptr;
  if (cfg.weights.use_tbl && cfg.weights.lambda_tbl > 0) {
    data::WindowBatch all =
        data::assemble_batch(dataset.series, dataset.cal, norm, splits.train, cfg.model.h_in,
                             cfg.model.h_out, data::SplitTag::kTrain);
    const double sigma = sigma_relative ? oracle_sigma * mean_train_std(norm) : oracle_sigma;
    const uint64_t fp = teacher::dataset_fingerprint(dataset.meta_bytes, ratios, splits.train);
    oracle = teacher::oracle_teacher(all.targets, {sigma, oracle_bias, oracle_seed}, fp);
    teacher_ptr = &oracle;
  }

  train::TrainResult result = train::run_training(dataset, splits, norm, teacher_ptr, cfg);
  if (result.aborted_non_finite) throw NumericError("sweep cell: training diverged");

  train::PredictionSet test =
      train::predict_windows(result.best.params, dataset.series, dataset.cal, norm, splits.test,
                             data::SplitTag::kTest, cfg.batch_size);
  const Metrics m = compute_metrics(test.pred, test.target);
  CellResult cell;
  cell.mae = m.mae;
  cell.rmse = m.rmse;
  cell.spatial_tv = spatial_roughness(test.pred, dataset.graph.neighbor_lists);
  cell.temporal_tv = temporal_roughness(test.pred);
  return cell;
}

}  // namespace

SweepResult training_ratio_sweep(const data::Dataset& dataset, const train::TrainConfig& base,
                                 const SweepOptions& opts) {
  if (opts.ratios.empty() || opts.seeds.empty()) {
    throw ContractError("sweep: need at least one ratio and one seed");
  }
  for (double r : opts.ratios) {
    if (!(r > 0.0 && r < 1.0)) throw ContractError("sweep: ratios must lie in (0, 1)");
  }
  SweepResult out;
  for (double ratio : opts.ratios) {
    std::vector<double> maes, rmses;
    for (uint64_t seed : opts.seeds) {
      train::TrainConfig cfg = base;
      cfg.seed = seed;
      CellResult cell = run_cell(dataset, cfg, {ratio, opts.val_ratio, opts.test_ratio},
                                 opts.oracle_sigma, opts.oracle_bias,
                                 opts.sigma_relative_to_std, seed + 1);
      out.rows.push_back({ratio, seed, cell.mae, cell.rmse});
      maes.push_back(cell.mae);
      rmses.push_back(cell.rmse);
    }
    SweepSummary s;
    s.ratio = ratio;
    s.mae_mean = mean_of(maes);
    s.mae_std = std_of(maes);
    s.rmse_mean = mean_of(rmses);
    s.rmse_std = std_of(rmses);
    s.seeds = static_cast<int64_t>(opts.seeds.size());
    out.summary.push_back(s);
  }
  return out;
}

std::vector<AblationRow> ablation_suite(const data::Dataset& dataset,
                                        const train::TrainConfig& base,
                                        const AblationOptions& opts) {
  if (opts.seeds.empty()) throw ContractError("ablation: need at least one seed");

  struct Variant {
    const char* name;
    void (*tweak)(train::TrainConfig&);
  };
  static const Variant variants[] = {
      {"full", [](train::TrainConfig&) {}},
      {"w/o-TB", [](train::TrainConfig& c) { c.weights.lambda_tbl = 0; }},
      {"w/o-IB",
       [](train::TrainConfig& c) {
         c.weights.lambda_kl = 0;
         c.deterministic_latent = true;
       }},
      {"w/o-SC", [](train::TrainConfig& c) { c.weights.lambda_spa = 0; }},
      {"w/o-TC", [](train::TrainConfig& c) { c.weights.lambda_tem = 0; }},
  };

  std::vector<AblationRow> rows;
  for (const Variant& variant : variants) {
    for (uint64_t seed : opts.seeds) {
      train::TrainConfig cfg = base;
      cfg.seed = seed;
      variant.tweak(cfg);
      CellResult cell = run_cell(dataset, cfg, {opts.train_ratio, opts.val_ratio, opts.test_ratio},
                                 opts.oracle_sigma, opts.oracle_bias,
                                 opts.sigma_relative_to_std, seed + 1);
      rows.push_back({variant.name, seed, cell.mae, cell.rmse, cell.spatial_tv, cell.temporal_tv});
    }
  }
  return rows;
}

BenchResult scaling_benchmark(const BenchOptions& opts) {
  if (opts.repetitions < 1) throw ContractError("bench: repetitions must be >= 1");

  using clock = std::chrono::steady_clock;
  BenchResult out;
  out.repetitions = opts.repetitions;
  out.unstable = opts.repetitions == 1;
  out.timer_resolution_ns =
      1e9 * static_cast<double>(clock::period::num) / static_cast<double>(clock::period::den);

  auto build_setup = [&](int64_t regions) {
    data::SynthConfig synth;
    synth.regions = regions;
    synth.timesteps = opts.timesteps;
    synth.seed = 17;
    data::Dataset ds = data::dataset_from_synth(synth, 8);
    train::TrainConfig cfg = opts.model_template;
    cfg.model.regions = regions;
    cfg.model.tod_slots = ds.cal.t1;
    cfg.model.channels = 1;
    auto windows = data::make_windows(opts.timesteps, cfg.model.h_in, cfg.model.h_out);
    data::Splits splits =
        data::chronological_split(windows, cfg.model.h_in, cfg.model.h_out, {0.5, 0.1, 0.1});
    data::NormStats norm = data::fit_normalizer(ds.series, splits.train, cfg.model.h_in);
    model::ParamSet params = model::init_params<float>(cfg.model, 23);
    return std::tuple(std::move(ds), std::move(cfg), std::move(splits), std::move(norm),
                      std::move(params));
  };

  auto time_predict = [&](const model::ParamSet& params, const data::Dataset& ds,
                          const data::NormStats& norm, const std::vector<int64_t>& windows,
                          int64_t batch_size, std::vector<double>& reps) {
    // warm-up pass is untimed
    train::predict_windows(params, ds.series, ds.cal, norm, windows, data::SplitTag::kTest,
                           batch_size);
    reps.clear();
    for (int64_t r = 0; r < opts.repetitions; ++r) {
      const auto t0 = clock::now();
      train::predict_windows(params, ds.series, ds.cal, norm, windows, data::SplitTag::kTest,
                             batch_size);
      const auto t1 = clock::now();
      reps.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::vector<double> sorted = reps;
    std::sort(sorted.begin(), sorted.end());
    return sorted[sorted.size() / 2];
  };

  // test-set size scaling x1..x5 at the base region count
  {
    auto [ds, cfg, splits, norm, params] = build_setup(opts.base_regions);
    for (int64_t scale = 1; scale <= 5; ++scale) {
      std::vector<int64_t> windows;
      for (int64_t s = 0; s < scale; ++s) {
        windows.insert(windows.end(), splits.test.begin(), splits.test.end());
      }
      BenchRow row;
      row.regions = opts.base_regions;
      row.windows = static_cast<int64_t>(windows.size());
      row.scale = static_cast<double>(scale);
      row.median_seconds = time_predict(params, ds, norm, windows, cfg.batch_size, row.rep_seconds);
      out.size_rows.push_back(std::move(row));
    }
    out.size_ratio_x2 = out.size_rows[1].median_seconds / out.size_rows[0].median_seconds;
  }

  // region count scaling N, 2N, 4N at x1
  for (int64_t mult : {1, 2, 4}) {
    auto [ds, cfg, splits, norm, params] = build_setup(opts.base_regions * mult);
    BenchRow row;
    row.regions = opts.base_regions * mult;
    row.windows = static_cast<int64_t>(splits.test.size());
    row.scale = 1.0;
    row.median_seconds =
        time_predict(params, ds, norm, splits.test, cfg.batch_size, row.rep_seconds);
    out.region_rows.push_back(std::move(row));
  }

  // least-squares slope of ln(latency) on ln(N)
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(out.region_rows.size());
    for (const BenchRow& row : out.region_rows) {
      const double x = std::log(static_cast<double>(row.regions));
      const double y = std::log(row.median_seconds);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

// ---- emission ----

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

json metrics_json(const Metrics& m) {
  json j;
  j["count"] = m.count;
  if (m.count > 0) {
    j["mae"] = m.mae;
    j["rmse"] = m.rmse;
  } else {
    j["mae"] = nullptr;
    j["rmse"] = nullptr;
  }
  return j;
}

}  // namespace

void write_metric_report_csv(const MetricReport& report, const std::string& path) {
  auto f = open_out(path);
  f << "section,key,mae,rmse,count\n";
  f << "overall,," << report.overall.mae << "," << report.overall.rmse << ","
    << report.overall.count << "\n";
  for (size_t t = 0; t < report.per_horizon.size(); ++t) {
    const Metrics& m = report.per_horizon[t];
    f << "horizon," << (t + 1) << "," << m.mae << "," << m.rmse << "," << m.count << "\n";
  }
  for (size_t b = 0; b < report.per_bucket.size(); ++b) {
    const BucketMetrics& bm = report.per_bucket[b];
    f << "bucket," << b << ",";
    if (bm.metrics.count > 0) {
      f << bm.metrics.mae << "," << bm.metrics.rmse;
    } else {
      f << ",";
    }
    f << "," << bm.metrics.count << "\n";
  }
}

std::string metric_report_rows_json(const MetricReport& report) {
  json rows = json::array();
  {
    json j = metrics_json(report.overall);
    j["section"] = "overall";
    rows.push_back(j);
  }
  for (size_t t = 0; t < report.per_horizon.size(); ++t) {
    json j = metrics_json(report.per_horizon[t]);
    j["section"] = "horizon";
    j["step"] = t + 1;
    rows.push_back(j);
  }
  for (size_t b = 0; b < report.per_bucket.size(); ++b) {
    json j = metrics_json(report.per_bucket[b].metrics);
    j["section"] = "bucket";
    j["bucket"] = b;
    j["lo"] = std::isfinite(report.per_bucket[b].lo) ? json(report.per_bucket[b].lo) : json(nullptr);
    j["hi"] = std::isfinite(report.per_bucket[b].hi) ? json(report.per_bucket[b].hi) : json(nullptr);
    rows.push_back(j);
  }
  return rows.dump();
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  auto f = open_out(path);
  f << "ratio,seed,mae,rmse\n";
  for (const SweepRow& r : sweep.rows) {
    f << r.ratio << "," << r.seed << "," << r.mae << "," << r.rmse << "\n";
  }
}

void write_sweep_table(const SweepResult& sweep, const std::string& path) {
  auto f = open_out(path);
  f << "Performance under various training ratios (mean over seeds, std in parentheses)\n\n";
  f << "Method      ";
  for (const SweepSummary& s : sweep.summary) {
    char head[64];
    std::snprintf(head, sizeof(head), "| %-21s ", (std::to_string(static_cast<int>(std::lround(s.ratio * 100))) + "%").c_str());
    f << head;
  }
  f << "\n            ";
  for (size_t i = 0; i < sweep.summary.size(); ++i) f << "| MAE        RMSE      ";
  f << "\nFlowDistill ";
  for (const SweepSummary& s : sweep.summary) {
    char cell[80];
    std::snprintf(cell, sizeof(cell), "| %5.2f(%.2f) %5.2f(%.2f)", s.mae_mean, s.mae_std,
                  s.rmse_mean, s.rmse_std);
    f << cell;
  }
  f << "\n";
}

// one row per (ratio, seed) cell; aggregates go to the table artifact
std::string sweep_rows_json(const SweepResult& sweep) {
  json rows = json::array();
  for (const SweepRow& r : sweep.rows) {
    rows.push_back({{"ratio", r.ratio}, {"seed", r.seed}, {"mae", r.mae}, {"rmse", r.rmse}});
  }
  return rows.dump();
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  auto f = open_out(path);
  f << "variant,seed,mae,rmse,spatial_tv,temporal_tv\n";
  for (const AblationRow& r : rows) {
    f << r.name << "," << r.seed << "," << r.mae << "," << r.rmse << "," << r.spatial_tv << ","
      << r.temporal_tv << "\n";
  }
}

std::string ablation_rows_json(const std::vector<AblationRow>& rows) {
  json arr = json::array();
  for (const AblationRow& r : rows) {
    arr.push_back({{"variant", r.name},
                   {"seed", r.seed},
                   {"mae", r.mae},
                   {"rmse", r.rmse},
                   {"spatial_tv", r.spatial_tv},
                   {"temporal_tv", r.temporal_tv}});
  }
  return arr.dump();
}

void write_bench_csv(const BenchResult& bench, const std::string& path) {
  auto f = open_out(path);
  f << "kind,regions,windows,scale,median_seconds\n";
  for (const BenchRow& r : bench.size_rows) {
    f << "size," << r.regions << "," << r.windows << "," << r.scale << "," << r.median_seconds
      << "\n";
  }
  for (const BenchRow& r : bench.region_rows) {
    f << "regions," << r.regions << "," << r.windows << "," << r.scale << "," << r.median_seconds
      << "\n";
  }
  f << "summary,fitted_exponent,," << bench.fitted_exponent << ",\n";
  f << "summary,size_ratio_x2,," << bench.size_ratio_x2 << ",\n";
  if (bench.unstable) f << "warning,repetitions=1 gives unstable measurements,,,\n";
}

std::string bench_rows_json(const BenchResult& bench) {
  json rows = json::array();
  for (const BenchRow& r : bench.size_rows) {
    rows.push_back({{"kind", "size"},
                    {"regions", r.regions},
                    {"windows", r.windows},
                    {"scale", r.scale},
                    {"median_seconds", r.median_seconds},
                    {"rep_seconds", r.rep_seconds}});
  }
  for (const BenchRow& r : bench.region_rows) {
    rows.push_back({{"kind", "regions"},
                    {"regions", r.regions},
                    {"windows", r.windows},
                    {"scale", r.scale},
                    {"median_seconds", r.median_seconds},
                    {"rep_seconds", r.rep_seconds}});
  }
  rows.push_back({{"kind", "summary"},
                  {"fitted_exponent", bench.fitted_exponent},
                  {"size_ratio_x2", bench.size_ratio_x2},
                  {"repetitions", bench.repetitions},
                  {"unstable", bench.unstable}});
  return rows.dump();
}

void write_report_json(const std::string& kind, const std::string& config_echo,
                       const std::string& rows_json, const std::string& path) {
  json doc;
  doc["kind"] = kind;
  doc["config"] = config_echo;
  doc["rows"] = json::parse(rows_json);
  json env;
  using clock = std::chrono::steady_clock;
  env["timer"] = {{"name", "steady_clock"},
                  {"resolution_ns", 1e9 * static_cast<double>(clock::period::num) /
                                        static_cast<double>(clock::period::den)}};
  env["build"] = {{"compiler", __VERSION__},
                  {"openmp_max_threads", omp_get_max_threads()},
                  {"parallel_kernels", kernels::parallel_enabled()}};
  doc["environment"] = env;
  auto f = open_out(path);
  f << doc.dump(2) << "\n";
}

}  // namespace fd::eval
