#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowdistill/data.hpp"
#include "flowdistill/teacher.hpp"
#include "flowdistill/train.hpp"

namespace fd::eval {

struct Metrics {
  double mae = 0;
  double rmse = 0;
  int64_t count = 0;
};

// MAE and RMSE over all elements, original units.
Metrics compute_metrics(const Tensor& pred, const Tensor& target);

// Per output step metrics; pred/target are [W, N, H_out, C].
std::vector<Metrics> horizon_breakdown(const Tensor& pred, const Tensor& target);

struct BucketMetrics {
  double lo = 0;  // [lo, hi) on region mean flow; first/last are open-ended
  double hi = 0;
  Metrics metrics;  // count 0 means the bucket is empty and mae/rmse are absent
};

// Regions bucketed by mean target flow; edges strictly increasing.
std::vector<BucketMetrics> volume_bucket_breakdown(const Tensor& pred, const Tensor& target,
                                                   const std::vector<double>& edges);

// Quartile edges (3 values) of the per-region mean target flow.
std::vector<double> quartile_edges(const Tensor& target);

struct MetricReport {
  Metrics overall;
  std::vector<Metrics> per_horizon;
  std::vector<double> bucket_edges;
  std::vector<BucketMetrics> per_bucket;
};

MetricReport full_report(const Tensor& pred, const Tensor& target,
                         const std::vector<double>* edges = nullptr);

// Diagnostics for the smoothing regularizers: mean neighbor absolute
// difference and mean one-step temporal absolute difference.
double spatial_roughness(const Tensor& pred,
                         const std::vector<std::vector<int64_t>>& neighbor_lists);
double temporal_roughness(const Tensor& pred);

// ---- experiment harnesses ----

struct SweepRow {
  double ratio = 0;
  uint64_t seed = 0;
  double mae = 0;
  double rmse = 0;
};

struct SweepSummary {
  double ratio = 0;
  double mae_mean = 0, mae_std = 0;
  double rmse_mean = 0, rmse_std = 0;
  int64_t seeds = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
};

// Fresh split / normalizer / oracle teacher / training per (ratio, seed);
// test ratio fixed at 0.1. Oracle noise is scaled relative to the training
// data standard deviation when relative_sigma is set.
struct SweepOptions {
  std::vector<double> ratios;
  std::vector<uint64_t> seeds;
  double oracle_sigma = 0.0;
  double oracle_bias = 0.0;
  bool sigma_relative_to_std = false;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
};

SweepResult training_ratio_sweep(const data::Dataset& dataset, const train::TrainConfig& base,
                                 const SweepOptions& opts);

struct AblationRow {
  std::string name;  // full, w/o-TB, w/o-IB, w/o-SC, w/o-TC
  uint64_t seed = 0;
  double mae = 0;
  double rmse = 0;
  double spatial_tv = 0;
  double temporal_tv = 0;
};

struct AblationOptions {
  std::vector<uint64_t> seeds;
  double oracle_sigma = 0.0;
  double oracle_bias = 0.0;
  bool sigma_relative_to_std = false;
  double train_ratio = 0.1;
  double val_ratio = 0.1;
  double test_ratio = 0.1;
};

// Rows for {full, w/o-TB, w/o-IB, w/o-SC, w/o-TC} x seeds, evaluated on the
// test split of a fresh chronological split.
std::vector<AblationRow> ablation_suite(const data::Dataset& dataset,
                                        const train::TrainConfig& base,
                                        const AblationOptions& opts);

struct BenchRow {
  int64_t regions = 0;
  int64_t windows = 0;
  double scale = 1.0;  // test-size multiple
  double median_seconds = 0;
  std::vector<double> rep_seconds;
};

struct BenchResult {
  std::vector<BenchRow> size_rows;    // x1..x5 test-set scaling at base N
  std::vector<BenchRow> region_rows;  // N, 2N, 4N at x1
  double fitted_exponent = 0;         // latency vs N growth exponent
  double size_ratio_x2 = 0;           // latency(x2) / latency(x1)
  int64_t repetitions = 0;
  bool unstable = false;  // repetitions == 1
  double timer_resolution_ns = 0;
};

struct BenchOptions {
  int64_t base_regions = 16;
  int64_t timesteps = 600;
  int64_t repetitions = 5;
  train::TrainConfig model_template;  // model dims + batch size are used
};

BenchResult scaling_benchmark(const BenchOptions& opts);

// ---- report emission ----

void write_metric_report_csv(const MetricReport& report, const std::string& path);
void write_sweep_csv(const SweepResult& sweep, const std::string& path);
void write_sweep_table(const SweepResult& sweep, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);
void write_bench_csv(const BenchResult& bench, const std::string& path);

// report.json: {config, rows[], environment{timer, build}}
void write_report_json(const std::string& kind, const std::string& config_echo,
                       const std::string& rows_json, const std::string& path);

std::string metric_report_rows_json(const MetricReport& report);
std::string sweep_rows_json(const SweepResult& sweep);
std::string ablation_rows_json(const std::vector<AblationRow>& rows);
std::string bench_rows_json(const BenchResult& bench);

}  // namespace fd::eval
